#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqs/optics.hpp"
#include "dqs/pauli.hpp"
#include "dqs/random.hpp"

namespace dqs {

/// Device toolbox and length limits for random setup generation.
struct ToolboxConfig {
  int n_photons = 4;
  /// Wave-plate angles k pi / angle_grid, k = 0..angle_grid-1.
  int angle_grid = 4;
  std::vector<DeviceKind> kinds{DeviceKind::BS, DeviceKind::PBS, DeviceKind::HWP, DeviceKind::QWP, DeviceKind::R};
  std::size_t min_length = 1;
  std::size_t max_length = 15;
  /// Candidate source kinds, drawn independently for each consecutive pair.
  std::vector<DeviceKind> dc_kinds{DeviceKind::DC00, DeviceKind::DC11, DeviceKind::DCBell};

  SimOptions sim_options() const;
  void validate() const;
};

/// Every distinct sequence-slot device: C(N,2) per two-path kind, N * grid per
/// wave plate, N mirrors.
std::vector<Device> enumerate_toolbox(const ToolboxConfig& config);

OpticalSetup sample_setup(const ToolboxConfig& config, Rng& rng);

struct LabeledSetup {
  std::int64_t id = 0;
  OpticalSetup setup;
  double qfi = 0.0;
  double success_prob = 0.0;
  bool valid = false;
  std::string hamiltonian;

  friend bool operator==(const LabeledSetup&, const LabeledSetup&) = default;
};

/// Exact QFI of the post-selected probe; zero with valid = false when nothing
/// survives post-selection.
LabeledSetup label_setup(const OpticalSetup& setup, const Hamiltonian& h, const SimOptions& opts = {});

std::string canonical_key(const OpticalSetup& setup);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_json_line(const LabeledSetup& rec);
/// Throws DatasetError (or SetupError for bad device tokens) on malformed input.
LabeledSetup parse_json_line(const std::string& line);

void write_dataset(const std::filesystem::path& path, const std::vector<LabeledSetup>& records);
/// Errors carry the 1-based line number.
std::vector<LabeledSetup> read_dataset(const std::filesystem::path& path);

struct GenerateResult {
  std::vector<LabeledSetup> records;
  std::size_t duplicates = 0;
};

/// Samples until `count` distinct setups (by canonical_key) are found, then
/// labels them on `threads` workers. Candidate i draws from the stream
/// derive_seed(seed, i), so output is independent of the thread count.
GenerateResult generate_dataset(const ToolboxConfig& config, const Hamiltonian& h, std::size_t count,
                                std::uint64_t seed, int threads = 1, bool dedup = true);

/// Moves every device from path p to perm[p]. Two-path devices keep their
/// smaller path first; sources are re-sorted by path.
OpticalSetup relabel_paths(const OpticalSetup& setup, const std::vector<int>& perm);

/// Uniform draw from the permutations that map source pairs (0,1), (2,3), ...
/// onto each other: shuffle the pairs, then maybe swap within each pair.
/// Labels of Hamiltonians symmetric under these moves (sumZ, sumX) are unchanged.
std::vector<int> random_pair_permutation(int n_photons, Rng& rng);

/// Labels prebuilt setups in parallel; ids follow input order.
std::vector<LabeledSetup> label_all(const std::vector<OpticalSetup>& setups, const Hamiltonian& h,
                                    const SimOptions& opts, int threads = 1);

}  // namespace dqs
