#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqs/dataset.hpp"
#include "dqs/surrogate.hpp"

namespace dqs {

struct Candidate {
  std::int64_t id = 0;
  double predicted = 0.0;
  std::optional<double> oracle;
  bool valid = false;
  OpticalSetup setup;
};

struct RankedCandidates {
  std::vector<Candidate> items;
  std::size_t k = 0;
  /// Best QFI in a fully labeled pool minus the best validated QFI.
  std::optional<double> regret;
  /// Pool entries whose canonical text repeats an earlier entry.
  std::size_t duplicates = 0;

  /// rank, id, predicted, oracle, setup.
  std::string to_csv() const;
};

/// Top `k` of `pool` by score, descending, ties by ascending id.
RankedCandidates top_k(const std::vector<LabeledSetup>& pool, const std::vector<double>& scores, std::size_t k);

/// Scores every pool entry with the model in eval mode and keeps the top `k`.
RankedCandidates rank_candidates(const SurrogateModel& model, const std::vector<LabeledSetup>& pool, std::size_t k,
                                 int threads = 1);

/// Attaches oracle labels. When `pool_labeled` the pool's own qfi fields are
/// trusted and regret is reported.
RankedCandidates validate(RankedCandidates ranked, const Hamiltonian& h, const SimOptions& opts = {},
                          const std::vector<LabeledSetup>* pool_labeled = nullptr);

/// Repeatedly removes a random sequence device, keeping each removal only if
/// the oracle QFI is unchanged within 1e-9. trials = 0 means 3 x length.
OpticalSetup prune_setup(const OpticalSetup& setup, const Hamiltonian& h, int trials, Rng& rng,
                         const SimOptions& opts = {});

}  // namespace dqs
