#include "dqs/surrogate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dqs/random.hpp"
#include "json.hpp"

namespace dqs {

using nn::Matrix;
using nn::Tape;
using nn::Var;

void ModelConfig::validate() const {
  if (latent <= 0 || layers < 0 || heads <= 0) throw std::invalid_argument("model sizes must be positive");
  if (latent % heads != 0) throw std::invalid_argument("heads must divide the latent dimension");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0))
    throw std::invalid_argument("bad batch-norm settings");
  if (encoding.n_photons <= 0 || encoding.angle_grid <= 0) throw std::invalid_argument("bad encoding config");
}

ModelConfig ModelConfig::full_scale(const EncodingConfig& encoding) {
  ModelConfig c;
  c.latent = 256;
  c.encoding = encoding;
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j{{"latent", latent},       {"layers", layers},           {"heads", heads},
                   {"n_photons", encoding.n_photons}, {"angle_grid", encoding.angle_grid},
                   {"bn_momentum", bn_momentum}, {"bn_eps", bn_eps}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.latent = j.at("latent").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.encoding.n_photons = j.at("n_photons").get<int>();
    c.encoding.angle_grid = j.at("angle_grid").get<int>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    c.bn_eps = j.at("bn_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

GraphBatch GraphBatch::build(const std::vector<const SetupGraph*>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("empty graph batch");
  GraphBatch b;
  int total = 0;
  const int dim = graphs.front()->feature_dim();
  for (const auto* g : graphs) {
    if (g->feature_dim() != dim) throw std::invalid_argument("graphs in a batch must share a feature dimension");
    if (g->n_nodes() == 0) throw std::invalid_argument("graph has no nodes");
    total += g->n_nodes();
  }
  b.features.resize(total, dim);
  int base = 0;
  for (const auto* g : graphs) {
    const int n = g->n_nodes();
    b.features.middleRows(base, n) = g->features;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (j == i || g->adjacency(i, j) != 0) b.neighbors.indices.push_back(base + j);
      b.neighbors.offsets.push_back(static_cast<int>(b.neighbors.indices.size()));
    }
    base += n;
    b.offsets.push_back(base);
  }
  return b;
}

namespace {

std::string head_name(int l, int k, const char* w) {
  return "layer" + std::to_string(l) + ".head" + std::to_string(k) + "." + w;
}
std::string layer_name(int l, const char* w) { return "layer" + std::to_string(l) + "." + w; }

}  // namespace

SurrogateModel::SurrogateModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int s = config_.latent;
  const int hd = config_.head_dim();
  auto uniform = [&](const std::string& name, int rows, int cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = uniform_real(rng, -bound, bound);
    params_[name] = std::move(m);
  };
  auto norm = [&](const std::string& prefix) {
    params_[prefix + ".gamma"] = Matrix::Ones(1, s);
    params_[prefix + ".beta"] = Matrix::Zero(1, s);
    buffers_[prefix + ".running_mean"] = Matrix::Zero(1, s);
    buffers_[prefix + ".running_var"] = Matrix::Ones(1, s);
  };

  const int d = config_.feature_dim();
  uniform("embed.W0", s, d, d);
  uniform("embed.b0", 1, s, d);
  norm("embed.bn");
  for (int l = 0; l < config_.layers; ++l) {
    for (int k = 0; k < config_.heads; ++k) {
      for (const char* w : {"W1", "W2", "W3", "W4"}) uniform(head_name(l, k, w), hd, s, s);
      uniform(head_name(l, k, "w5"), 1, 3 * hd, 3 * hd);
    }
    uniform(layer_name(l, "W6"), s, s, s);
    uniform(layer_name(l, "b6"), 1, s, s);
    norm(layer_name(l, "bn"));
    uniform(layer_name(l, "W7"), s, s, s);
    uniform(layer_name(l, "b7"), 1, s, s);
  }
  uniform("readout.w", 1, s, s);
  uniform("readout.b", 1, 1, s);
}

std::size_t SurrogateModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : params_) n += static_cast<std::size_t>(m.size());
  return n;
}

SurrogateModel::Trace SurrogateModel::record(Tape& tape, const GraphBatch& batch, RunMode mode,
                                             bool update_running_stats, ParameterMap* grads) {
  if (batch.features.cols() != config_.feature_dim())
    throw std::invalid_argument("feature dimension " + std::to_string(batch.features.cols()) +
                                " does not match model (" + std::to_string(config_.feature_dim()) + ")");
  auto p = [&](const std::string& name) -> Var {
    const Matrix& value = params_.at(name);
    if (!grads) return tape.constant(value);
    Matrix& sink = (*grads)[name];
    if (sink.size() == 0) sink = Matrix::Zero(value.rows(), value.cols());
    return tape.parameter(value, &sink);
  };
  const bool training = mode == RunMode::Train;
  auto bn = [&](Var x, const std::string& prefix) {
    nn::BatchNormStats stats{&buffers_.at(prefix + ".running_mean"), &buffers_.at(prefix + ".running_var")};
    return nn::batch_norm(tape, x, p(prefix + ".gamma"), p(prefix + ".beta"), stats, training,
                          update_running_stats, config_.bn_momentum, config_.bn_eps);
  };

  Var x = tape.constant(batch.features);
  Var h = nn::gelu(tape, bn(nn::linear(tape, x, p("embed.W0"), p("embed.b0")), "embed.bn"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.latent));
  for (int l = 0; l < config_.layers; ++l) {
    // All heads' W1..W4 in one product; columns are [W1 | W2 | W3 | W4] per head.
    std::vector<Var> blocks;
    for (int k = 0; k < config_.heads; ++k)
      for (const char* w : {"W1", "W2", "W3", "W4"}) blocks.push_back(p(head_name(l, k, w)));
    Var proj = nn::matmul_t(tape, h, nn::concat_rows(tape, blocks));
    const int hd = config_.head_dim();
    std::vector<Var> heads;
    for (int k = 0; k < config_.heads; ++k) {
      Var r = nn::slice_cols(tape, proj, (4 * k + 0) * hd, hd);
      Var v = nn::slice_cols(tape, proj, (4 * k + 1) * hd, hd);
      Var q = nn::slice_cols(tape, proj, (4 * k + 2) * hd, hd);
      Var kk = nn::slice_cols(tape, proj, (4 * k + 3) * hd, hd);
      Var m = nn::graph_attention(tape, q, kk, v, batch.neighbors, scale);
      const Var gate_in[] = {r, m, nn::sub(tape, r, m)};
      Var beta = nn::sigmoid(tape, nn::matmul_t(tape, nn::concat_cols(tape, gate_in), p(head_name(l, k, "w5"))));
      heads.push_back(nn::gate_mix(tape, beta, r, m));
    }
    Var hh = nn::concat_cols(tape, heads);
    Var mid = nn::gelu(tape, bn(nn::linear(tape, hh, p(layer_name(l, "W6")), p(layer_name(l, "b6"))),
                                layer_name(l, "bn")));
    h = nn::linear(tape, mid, p(layer_name(l, "W7")), p(layer_name(l, "b7")));
  }
  Var latent = nn::segment_max(tape, h, batch.offsets);
  Var pred = nn::linear(tape, latent, p("readout.w"), p("readout.b"));
  return {pred, latent};
}

SurrogateModel::Output SurrogateModel::forward(const GraphBatch& batch, RunMode mode, bool update_running_stats) {
  Tape tape;
  auto tr = record(tape, batch, mode, update_running_stats, nullptr);
  return {tape.value(tr.prediction).col(0), tape.value(tr.latent)};
}

SurrogateModel::Output SurrogateModel::evaluate(const GraphBatch& batch) const {
  // Eval mode reads the running statistics and writes nothing.
  return const_cast<SurrogateModel*>(this)->forward(batch, RunMode::Eval, false);
}

LossResult loss_and_grads(SurrogateModel& model, const GraphBatch& batch, const Eigen::VectorXd& targets, RunMode mode,
                          bool update_running_stats) {
  if (batch.n_graphs() == 0) throw std::invalid_argument("empty batch");
  LossResult out;
  nn::Tape tape;
  auto tr = model.record(tape, batch, mode, update_running_stats, &out.grads);
  Var loss = nn::mse(tape, tr.prediction, targets);
  tape.backward(loss);
  out.mse = tape.value(loss)(0, 0);
  out.predictions = tape.value(tr.prediction).col(0);
  return out;
}

namespace {

constexpr char kMagic[4] = {'D', 'Q', 'S', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ModelFormatError("truncated model file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ModelFormatError("truncated model file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

bool is_buffer(const std::string& name) {
  return name.ends_with(".running_mean") || name.ends_with(".running_var");
}

}  // namespace

void SurrogateModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(kMagic, 4);
  const std::string cfg = config_.to_json();
  put_u32(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u32(os, static_cast<std::uint32_t>(params_.size() + buffers_.size()));
  for (const auto* group : {&params_, &buffers_}) {
    for (const auto& [name, m] : *group) {
      put_u32(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_u32(os, static_cast<std::uint32_t>(m.rows()));
      put_u32(os, static_cast<std::uint32_t>(m.cols()));
      for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(os, m.data()[i]);
    }
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

SurrogateModel SurrogateModel::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ModelFormatError(path.string() + ": not a model file");
  std::string cfg(get_u32(is), '\0');
  if (!is.read(cfg.data(), static_cast<std::streamsize>(cfg.size()))) throw ModelFormatError("truncated model file");

  // Shapes are checked against a freshly built model of the same config.
  SurrogateModel ref(ModelConfig::from_json(cfg), 0);
  SurrogateModel m;
  m.config_ = ref.config_;
  const std::uint32_t count = get_u32(is);
  for (std::uint32_t a = 0; a < count; ++a) {
    std::string name(get_u32(is), '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) throw ModelFormatError("truncated model file");
    const auto rows = get_u32(is);
    const auto cols = get_u32(is);
    auto& expected_group = is_buffer(name) ? ref.buffers_ : ref.params_;
    auto it = expected_group.find(name);
    if (it == expected_group.end()) throw ModelFormatError("unexpected array " + name);
    if (it->second.rows() != rows || it->second.cols() != cols) throw ModelFormatError("shape mismatch for " + name);
    Matrix value(rows, cols);
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = get_f64(is);
    (is_buffer(name) ? m.buffers_ : m.params_)[name] = std::move(value);
  }
  if (m.params_.size() != ref.params_.size() || m.buffers_.size() != ref.buffers_.size())
    throw ModelFormatError("model file is missing arrays");
  return m;
}

}  // namespace dqs
