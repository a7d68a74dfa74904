#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dqs/dataset.hpp"
#include "dqs/surrogate.hpp"

namespace dqs {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int epochs = 50;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  /// Labels are divided by this before fitting; 0 means N^2.
  double label_scale = 0.0;
  /// Held-out share when no explicit validation set is given.
  double val_fraction = 0.2;
  /// Apply weight decay directly to the weights instead of through the gradient.
  bool decoupled_weight_decay = false;
  /// Cosine-anneal the learning rate from its initial value to zero over the run.
  bool cosine_schedule = false;
  /// Relabel each training setup with a fresh random_pair_permutation every
  /// time it is drawn. Only for Hamiltonians symmetric under those moves.
  bool augment_paths = false;

  /// 200 epochs, otherwise the defaults.
  static TrainConfig full_recipe();
  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  /// NaN when there is no validation data.
  double val_mse = 0.0;
  double val_spearman = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

class Adam {
 public:
  explicit Adam(const TrainConfig& config) : cfg_(config), lr_(config.learning_rate) {}
  void step(ParameterMap& params, const ParameterMap& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  TrainConfig cfg_;
  ParameterMap m_;
  ParameterMap v_;
  double lr_;
  long t_ = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Fits `model` on `data`. Without `validation` a seeded `val_fraction` split
/// of `data` is held out.
TrainResult train(SurrogateModel& model, const std::vector<LabeledSetup>& data, const TrainConfig& config,
                  const std::vector<LabeledSetup>* validation = nullptr, const EpochCallback& on_epoch = {});

/// Eval-mode QFI predictions in physical units (label scale undone).
std::vector<double> predict(const SurrogateModel& model, const std::vector<OpticalSetup>& setups, int threads = 1,
                            double label_scale = 0.0);

struct EvalMetrics {
  double mse = 0.0;
  double spearman = 0.0;
  std::vector<double> predictions;
};

/// MSE in label-scaled units plus Spearman of predictions against labels.
EvalMetrics evaluate(const SurrogateModel& model, const std::vector<LabeledSetup>& data, int threads = 1,
                     double label_scale = 0.0);

}  // namespace dqs
