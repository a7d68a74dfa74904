#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dqs/autodiff.hpp"
#include "dqs/graph.hpp"

namespace dqs {

struct ModelConfig {
  int latent = 64;
  int layers = 5;
  int heads = 4;
  EncodingConfig encoding;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  int head_dim() const { return latent / heads; }
  int feature_dim() const { return encoding.feature_dim(); }
  void validate() const;

  /// Latent 256, otherwise the defaults.
  static ModelConfig full_scale(const EncodingConfig& encoding);

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Several graphs stacked into one node matrix. Node i attends to its
/// out-neighbors and itself; `offsets` delimits each graph's rows.
struct GraphBatch {
  nn::Matrix features;
  nn::Csr neighbors;
  std::vector<int> offsets{0};

  int n_graphs() const { return static_cast<int>(offsets.size()) - 1; }
  int n_nodes() const { return static_cast<int>(features.rows()); }

  static GraphBatch build(const std::vector<const SetupGraph*>& graphs);
  static GraphBatch single(const SetupGraph& graph) { return build({&graph}); }
};

enum class RunMode { Train, Eval };

using ParameterMap = std::map<std::string, nn::Matrix>;

class SurrogateModel {
 public:
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases drawn from
  /// `seed`; batch-norm scale 1, shift 0, running mean 0, running variance 1.
  SurrogateModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterMap& parameters() { return params_; }
  const ParameterMap& parameters() const { return params_; }
  ParameterMap& buffers() { return buffers_; }
  const ParameterMap& buffers() const { return buffers_; }
  std::size_t parameter_count() const;

  struct Output {
    Eigen::VectorXd predictions;
    /// One row of pooled node features per graph.
    nn::Matrix latent;
  };

  /// Predictions are in label-scaled units. Train mode normalizes with batch
  /// statistics and leaves running statistics untouched unless
  /// `update_running_stats` is set.
  Output forward(const GraphBatch& batch, RunMode mode, bool update_running_stats = false);
  /// Eval-mode forward; never mutates the model.
  Output evaluate(const GraphBatch& batch) const;

  void save(const std::filesystem::path& path) const;
  static SurrogateModel load(const std::filesystem::path& path);

  /// Records the network on `tape`. When `grads` is non-null every parameter
  /// is a leaf whose gradient lands in (*grads)[name].
  struct Trace {
    nn::Var prediction;
    nn::Var latent;
  };
  Trace record(nn::Tape& tape, const GraphBatch& batch, RunMode mode, bool update_running_stats,
               ParameterMap* grads);

 private:
  SurrogateModel() = default;
  ModelConfig config_;
  ParameterMap params_;
  ParameterMap buffers_;
};

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossResult {
  double mse = 0.0;
  ParameterMap grads;
  Eigen::VectorXd predictions;
};

/// Batch mean squared error and its exact gradient for every parameter.
LossResult loss_and_grads(SurrogateModel& model, const GraphBatch& batch, const Eigen::VectorXd& targets,
                          RunMode mode = RunMode::Train, bool update_running_stats = false);

}  // namespace dqs
