#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqs/dataset.hpp"
#include "dqs/search.hpp"
#include "dqs/sensing.hpp"
#include "dqs/surrogate.hpp"
#include "dqs/trainer.hpp"

namespace dqs {

/// Two Bell sources on (a,b), (c,d) followed by R(b) -> PBS(b,c) -> R(c).
OpticalSetup ghz4_setup();

/// One of the four reference eight-photon sequences with its reported probe.
struct GoldenCase {
  std::string name;
  OpticalSetup setup;
  double expected_qfi = 0.0;
  /// Normalized reported state.
  QubitState reported;
};

std::vector<GoldenCase> golden_cases();

struct GoldenResult {
  std::string name;
  std::size_t devices = 0;
  double qfi = 0.0;
  double expected_qfi = 0.0;
  double success_prob = 0.0;
  double fidelity = 0.0;
  bool qfi_ok = false;
  bool state_ok = false;
};

std::vector<GoldenResult> run_golden(double tolerance = 1e-9);

/// Reads a setup from text: a full setup when it names sources, otherwise a
/// bare sequence fed by Bell sources on `n_photons` paths.
OpticalSetup setup_from_text(const std::string& text, int n_photons);

struct PipelineConfig {
  ToolboxConfig toolbox;
  std::string hamiltonian = "sumZ";
  std::string observable = "prodX";
  std::size_t train_count = 5000;
  std::size_t pool_count = 10000;
  std::size_t top_k = 5;
  ModelConfig model;
  TrainConfig train;
  std::uint64_t shots = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  bool prune = false;
};

struct PipelineSummary {
  std::int64_t best_id = 0;
  std::string best_setup;
  double best_predicted = 0.0;
  double best_oracle_qfi = 0.0;
  double final_val_spearman = 0.0;
  double min_sensitivity = 0.0;
  double sql = 0.0;
  double hl = 0.0;
  bool within_two_hl = false;
  RankedCandidates ranked;
  SensingReport report;

  std::string to_json() const;
};

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// gen -> train -> rank -> validate -> sense. Stage failures are rethrown as
/// PipelineError naming the stage. A supplied `pool` replaces the sampled one.
PipelineSummary run_pipeline(const PipelineConfig& config, const std::vector<OpticalSetup>* pool = nullptr);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// Eval-mode latent rows as CSV: id, qfi_true, qfi_pred, z1..zs.
std::string latent_csv(const SurrogateModel& model, const std::vector<LabeledSetup>& data, double label_scale = 0.0);

/// Command-line entry point. Returns 0 on success, 1 on validation failure,
/// 2 on usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dqs
