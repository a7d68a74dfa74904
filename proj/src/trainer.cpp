#include "dqs/trainer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dqs/parallel.hpp"
#include "dqs/random.hpp"
#include "dqs/stats.hpp"

namespace dqs {

TrainConfig TrainConfig::full_recipe() {
  TrainConfig c;
  c.epochs = 200;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || weight_decay < 0.0 || epochs < 0 || batch_size <= 0)
    throw std::invalid_argument("bad training hyperparameters");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0))
    throw std::invalid_argument("bad Adam moments");
  if (label_scale < 0.0 || !(val_fraction >= 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("bad label scale or validation fraction");
}

void Adam::step(ParameterMap& params, const ParameterMap& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    nn::Matrix g = git->second;
    if (!cfg_.decoupled_weight_decay) g += cfg_.weight_decay * p;
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() == 0) {
      m = nn::Matrix::Zero(p.rows(), p.cols());
      v = nn::Matrix::Zero(p.rows(), p.cols());
    }
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    if (cfg_.decoupled_weight_decay) p *= 1.0 - lr_ * cfg_.weight_decay;
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.adam_eps);
  }
}

namespace {

double resolve_scale(double label_scale, const SurrogateModel& model) {
  if (label_scale > 0.0) return label_scale;
  const double n = model.config().encoding.n_photons;
  return n * n;
}

std::vector<SetupGraph> encode_all(const std::vector<const OpticalSetup*>& setups, const EncodingConfig& enc) {
  std::vector<SetupGraph> out;
  out.reserve(setups.size());
  for (const auto* s : setups) out.push_back(encode_setup(*s, enc));
  return out;
}

constexpr std::size_t kEvalBatch = 256;

std::vector<double> predict_graphs(const SurrogateModel& model, const std::vector<SetupGraph>& graphs, int threads) {
  std::vector<double> out(graphs.size());
  const std::size_t chunks = (graphs.size() + kEvalBatch - 1) / kEvalBatch;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<const SetupGraph*> ptrs;
    for (std::size_t i = c * kEvalBatch; i < std::min(graphs.size(), (c + 1) * kEvalBatch); ++i)
      ptrs.push_back(&graphs[i]);
    auto res = model.evaluate(GraphBatch::build(ptrs));
    for (std::size_t i = 0; i < ptrs.size(); ++i) out[c * kEvalBatch + i] = res.predictions(static_cast<Eigen::Index>(i));
  });
  return out;
}

}  // namespace

TrainResult train(SurrogateModel& model, const std::vector<LabeledSetup>& data, const TrainConfig& config,
                  const std::vector<LabeledSetup>* validation, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("training set is empty");
  const double scale = resolve_scale(config.label_scale, model);
  const auto& enc = model.config().encoding;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, 0));
  std::vector<const LabeledSetup*> train_set;
  std::vector<const LabeledSetup*> val_set;
  if (validation) {
    for (const auto& r : data) train_set.push_back(&r);
    for (const auto& r : *validation) val_set.push_back(&r);
  } else {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(split_rng, i)]);
    const auto n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(data.size())));
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val_set : train_set).push_back(&data[order[i]]);
    if (train_set.empty()) throw std::invalid_argument("validation split leaves no training data");
  }

  std::vector<const OpticalSetup*> tmp;
  for (const auto* r : train_set) tmp.push_back(&r->setup);
  const auto train_graphs = encode_all(tmp, enc);
  tmp.clear();
  for (const auto* r : val_set) tmp.push_back(&r->setup);
  const auto val_graphs = encode_all(tmp, enc);
  std::vector<double> val_labels;
  for (const auto* r : val_set) val_labels.push_back(r->qfi / scale);

  TrainResult result;
  result.train_size = train_set.size();
  result.val_size = val_set.size();
  Adam opt(config);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng augment_rng(derive_seed(config.seed, 2));
  std::vector<SetupGraph> augmented;
  std::vector<std::size_t> perm(train_set.size());
  std::iota(perm.begin(), perm.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (perm.size() + bs - 1) / bs;
  const double total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_below(shuffle_rng, i)]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < perm.size(); start += bs) {
      const std::size_t end = std::min(perm.size(), start + bs);
      std::vector<const SetupGraph*> ptrs;
      Eigen::VectorXd targets(static_cast<Eigen::Index>(end - start));
      if (config.augment_paths) {
        augmented.clear();
        for (std::size_t i = start; i < end; ++i) {
          const auto& s = train_set[perm[i]]->setup;
          augmented.push_back(encode_setup(relabel_paths(s, random_pair_permutation(s.n_photons, augment_rng)), enc));
        }
      }
      for (std::size_t i = start; i < end; ++i) {
        ptrs.push_back(config.augment_paths ? &augmented[i - start] : &train_graphs[perm[i]]);
        targets(static_cast<Eigen::Index>(i - start)) = train_set[perm[i]]->qfi / scale;
      }
      if (config.cosine_schedule) {
        const double frac = static_cast<double>(step) / total_steps;
        opt.set_learning_rate(0.5 * config.learning_rate * (1.0 + std::cos(std::numbers::pi * frac)));
      }
      ++step;
      auto res = loss_and_grads(model, GraphBatch::build(ptrs), targets, RunMode::Train, true);
      opt.step(model.parameters(), res.grads);
      loss_sum += res.mse;
      ++batches;
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_mse = loss_sum / static_cast<double>(batches);
    st.val_mse = std::numeric_limits<double>::quiet_NaN();
    st.val_spearman = std::numeric_limits<double>::quiet_NaN();
    if (!val_graphs.empty()) {
      const auto pred = predict_graphs(model, val_graphs, 1);
      double se = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) se += (pred[i] - val_labels[i]) * (pred[i] - val_labels[i]);
      st.val_mse = se / static_cast<double>(pred.size());
      if (pred.size() >= 2) st.val_spearman = spearman(pred, val_labels);
    }
    result.history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return result;
}

std::vector<double> predict(const SurrogateModel& model, const std::vector<OpticalSetup>& setups, int threads,
                            double label_scale) {
  const double scale = resolve_scale(label_scale, model);
  std::vector<const OpticalSetup*> ptrs;
  for (const auto& s : setups) ptrs.push_back(&s);
  auto out = predict_graphs(model, encode_all(ptrs, model.config().encoding), threads);
  for (auto& v : out) v *= scale;
  return out;
}

EvalMetrics evaluate(const SurrogateModel& model, const std::vector<LabeledSetup>& data, int threads,
                     double label_scale) {
  if (data.empty()) throw std::invalid_argument("evaluation set is empty");
  const double scale = resolve_scale(label_scale, model);
  std::vector<const OpticalSetup*> ptrs;
  std::vector<double> labels;
  for (const auto& r : data) {
    ptrs.push_back(&r.setup);
    labels.push_back(r.qfi);
  }
  EvalMetrics m;
  auto scaled = predict_graphs(model, encode_all(ptrs, model.config().encoding), threads);
  double se = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    se += (scaled[i] - labels[i] / scale) * (scaled[i] - labels[i] / scale);
    m.predictions.push_back(scaled[i] * scale);
  }
  m.mse = se / static_cast<double>(scaled.size());
  m.spearman = data.size() >= 2 ? spearman(m.predictions, labels) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

}  // namespace dqs
