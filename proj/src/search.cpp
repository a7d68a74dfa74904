#include "dqs/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dqs/setup_text.hpp"
#include "dqs/trainer.hpp"

namespace dqs {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string RankedCandidates::to_csv() const {
  std::string out = "rank,id,predicted,oracle,setup\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& c = items[i];
    out += std::to_string(i + 1) + "," + std::to_string(c.id) + "," + fmt(c.predicted) + "," +
           (c.oracle ? fmt(*c.oracle) : std::string()) + ",\"" + format_setup(c.setup) + "\"\n";
  }
  return out;
}

RankedCandidates top_k(const std::vector<LabeledSetup>& pool, const std::vector<double>& scores, std::size_t k) {
  if (scores.size() != pool.size()) throw std::invalid_argument("one score per pool entry required");
  if (k > pool.size()) throw std::invalid_argument("k exceeds pool size");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return pool[a].id < pool[b].id;
  });
  RankedCandidates r;
  r.k = k;
  std::set<std::string> seen;
  for (const auto& p : pool)
    if (!seen.insert(canonical_key(p.setup)).second) ++r.duplicates;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& p = pool[order[i]];
    r.items.push_back({p.id, scores[order[i]], std::nullopt, false, p.setup});
  }
  return r;
}

RankedCandidates rank_candidates(const SurrogateModel& model, const std::vector<LabeledSetup>& pool, std::size_t k,
                                 int threads) {
  std::vector<OpticalSetup> setups;
  setups.reserve(pool.size());
  for (const auto& p : pool) setups.push_back(p.setup);
  return top_k(pool, predict(model, setups, threads), k);
}

RankedCandidates validate(RankedCandidates ranked, const Hamiltonian& h, const SimOptions& opts,
                          const std::vector<LabeledSetup>* pool_labeled) {
  double best = 0.0;
  for (auto& c : ranked.items) {
    auto lab = label_setup(c.setup, h, opts);
    c.oracle = lab.qfi;
    c.valid = lab.valid;
    best = std::max(best, lab.qfi);
  }
  if (pool_labeled) {
    double pool_best = 0.0;
    for (const auto& p : *pool_labeled) pool_best = std::max(pool_best, p.qfi);
    ranked.regret = std::max(0.0, pool_best - best);
  }
  return ranked;
}

OpticalSetup prune_setup(const OpticalSetup& setup, const Hamiltonian& h, int trials, Rng& rng,
                         const SimOptions& opts) {
  if (trials < 0) throw std::invalid_argument("trials must be non-negative");
  if (trials == 0) trials = static_cast<int>(3 * std::max<std::size_t>(1, setup.sequence.size()));
  const double target = label_setup(setup, h, opts).qfi;
  OpticalSetup current = setup;
  for (int t = 0; t < trials && !current.sequence.empty(); ++t) {
    const auto idx = uniform_below(rng, current.sequence.size());
    OpticalSetup trial = current;
    trial.sequence.erase(trial.sequence.begin() + static_cast<std::ptrdiff_t>(idx));
    if (std::abs(label_setup(trial, h, opts).qfi - target) <= 1e-9) current = std::move(trial);
  }
  return current;
}

}  // namespace dqs
