#include "dqs/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "dqs/setup_text.hpp"
#include "json.hpp"

namespace dqs {

using nlohmann::json;

OpticalSetup ghz4_setup() {
  OpticalSetup s;
  s.n_photons = 4;
  s.sources = consecutive_sources(4, DeviceKind::DCBell);
  s.sequence = {Device::r(1), Device::pbs(1, 2), Device::r(2)};
  return s;
}

namespace {

/// Product of a one-qubit factor on `site` and (|0..0> + |1..1>) on the rest.
std::vector<Amplitude> site_times_ghz(int n, int site, Amplitude c0, Amplitude c1) {
  std::vector<Amplitude> v(std::size_t{1} << n, 0.0);
  for (int b : {0, 1}) {
    for (int r : {0, 1}) {
      std::size_t idx = 0;
      for (int p = 0; p < n; ++p) idx = (idx << 1) | static_cast<std::size_t>(p == site ? b : r);
      v[idx] += b == 0 ? c0 : c1;
    }
  }
  return v;
}

}  // namespace

std::vector<GoldenCase> golden_cases() {
  using namespace std::complex_literals;
  const std::size_t all = (std::size_t{1} << 8) - 1;
  std::vector<GoldenCase> cases;

  std::vector<Amplitude> s1(256, 0.0);
  s1[0] = (1.0 - 1.0i) / 2.0;
  s1[all] = (1.0 + 1.0i) / 2.0;
  cases.push_back({"top-1",
                   parse_sequence("PBS(b,c) -> PBS(a,g) -> QWP(h,0.5pi) -> PBS(d,f) -> PBS(c,h) -> R(d) -> PBS(e,f) "
                                  "-> HWP(a,0.5pi)",
                                  8),
                   64.0, QubitState::from_amplitudes(s1)});

  // (|0000> + i|1111>) on a..d times (|0000> + |1111>) on e..h.
  std::vector<Amplitude> s2(256, 0.0);
  const Amplitude pre = (-1.0 + 1.0i) / std::numbers::sqrt2;
  for (int hi : {0, 1})
    for (int lo : {0, 1}) s2[(hi ? 0xF0u : 0u) | (lo ? 0x0Fu : 0u)] = pre * (hi ? 1.0i : 1.0);
  cases.push_back({"top-2",
                   parse_sequence("PBS(a,g) -> R(c) -> PBS(b,c) -> PBS(a,g) -> PBS(g,f) -> HWP(g,0.5pi) -> "
                                  "HWP(d,0.5pi) -> HWP(c,pi) -> R(b) -> HWP(h,pi) -> QWP(a,pi)",
                                  8),
                   32.0, QubitState::from_amplitudes(s2)});

  cases.push_back({"top-3", parse_sequence("PBS(f,d) -> R(a) -> PBS(a,e) -> QWP(b,0.25pi) -> PBS(h,a)", 8), 50.0,
                   QubitState::from_amplitudes(site_times_ghz(8, 1, 1.0i, 1.0))});

  const double r2 = std::numbers::sqrt2;
  cases.push_back({"training-best",
                   parse_sequence("R(b) -> PBS(f,h) -> QWP(h,0.75pi) -> QWP(f,pi) -> PBS(d,h) -> QWP(e,0.5pi) -> "
                                  "R(c) -> PBS(c,f) -> R(f) -> PBS(b,g) -> QWP(g,0.75pi) -> R(c) -> HWP(h,5pi)",
                                  8),
                   50.0, QubitState::from_amplitudes(site_times_ghz(8, 6, (1.0 - 1.0i) / r2, (1.0i - 1.0) / r2))});
  return cases;
}

std::vector<GoldenResult> run_golden(double tolerance) {
  std::vector<GoldenResult> out;
  const auto h = Hamiltonian::sum_z(8);
  for (const auto& c : golden_cases()) {
    GoldenResult r;
    r.name = c.name;
    r.devices = c.setup.sequence.size();
    r.expected_qfi = c.expected_qfi;
    const auto state = postselect(run_setup(c.setup));
    r.success_prob = state.success_prob;
    if (state.success_prob > 0.0) {
      r.qfi = qfi_pure(state, h);
      r.fidelity = fidelity_up_to_phase(state, c.reported);
    }
    r.qfi_ok = std::abs(r.qfi - c.expected_qfi) <= tolerance;
    r.state_ok = r.fidelity >= 1.0 - tolerance;
    out.push_back(r);
  }
  return out;
}

OpticalSetup setup_from_text(const std::string& text, int n_photons) {
  std::string flat;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    flat += line + " ";
  }
  if (flat.find("DC") != std::string::npos) return parse_setup(flat);
  return parse_sequence(flat, n_photons);
}

std::string PipelineSummary::to_json() const {
  json j{{"best_id", best_id},
         {"best_setup", best_setup},
         {"best_predicted", best_predicted},
         {"best_oracle_qfi", best_oracle_qfi},
         {"final_val_spearman", std::isfinite(final_val_spearman) ? json(final_val_spearman) : json(nullptr)},
         {"min_sensitivity", std::isfinite(min_sensitivity) ? json(min_sensitivity) : json(nullptr)},
         {"sql", sql},
         {"hl", hl},
         {"within_two_hl", within_two_hl}};
  if (ranked.regret) j["regret"] = *ranked.regret;
  j["duplicates_in_pool"] = ranked.duplicates;
  json top = json::array();
  for (const auto& c : ranked.items)
    top.push_back({{"id", c.id}, {"predicted", c.predicted}, {"oracle", c.oracle ? json(*c.oracle) : json(nullptr)}});
  j["top"] = top;
  return j.dump(2);
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw PipelineError(std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& config, const std::vector<OpticalSetup>* pool) {
  const int n = config.toolbox.n_photons;
  const auto h = stage("config", [&] {
    config.toolbox.validate();
    return Hamiltonian::from_tag(config.hamiltonian, n);
  });
  const auto obs = stage("config", [&] { return Observable::from_tag(config.observable, n); });
  const auto sim = config.toolbox.sim_options();

  auto train_data = stage("gen", [&] {
    return generate_dataset(config.toolbox, h, config.train_count, derive_seed(config.seed, 1), config.threads).records;
  });
  auto pool_data = stage("gen", [&] {
    if (pool) return label_all(*pool, h, sim, config.threads);
    return generate_dataset(config.toolbox, h, config.pool_count, derive_seed(config.seed, 2), config.threads).records;
  });

  ModelConfig mc = config.model;
  mc.encoding = {n, config.toolbox.angle_grid};
  SurrogateModel model(mc, derive_seed(config.seed, 3));
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, 4);
  auto history = stage("train", [&] { return train(model, train_data, tc); });

  PipelineSummary s;
  s.final_val_spearman = history.history.empty() ? std::nan("") : history.history.back().val_spearman;
  s.ranked = stage("rank", [&] {
    return rank_candidates(model, pool_data, std::min(config.top_k, pool_data.size()), config.threads);
  });
  // The pool labels are used only for the regret figure.
  s.ranked = stage("validate", [&] { return validate(std::move(s.ranked), h, sim, &pool_data); });
  if (s.ranked.items.empty()) throw PipelineError("stage rank: empty pool");

  const Candidate* best = &s.ranked.items.front();
  for (const auto& c : s.ranked.items)
    if (*c.oracle > *best->oracle) best = &c;
  OpticalSetup chosen = best->setup;
  if (config.prune) {
    Rng rng(derive_seed(config.seed, 5));
    chosen = stage("prune", [&] { return prune_setup(chosen, h, 0, rng, sim); });
  }
  s.best_id = best->id;
  s.best_predicted = best->predicted;
  s.best_oracle_qfi = *best->oracle;
  s.best_setup = format_setup(chosen);

  s.report = stage("sense", [&] {
    const auto probe = postselect(run_setup(chosen, sim));
    if (probe.success_prob <= 0.0) throw std::runtime_error("best candidate yields no post-selected probe");
    const HamiltonianChannel channel(h);
    return run_sensing(probe, channel, obs, h.response_degree(), config.shots, derive_seed(config.seed, 6));
  });
  s.min_sensitivity = s.report.min_sensitivity;
  s.sql = s.report.sql;
  s.hl = s.report.hl;
  s.within_two_hl = s.min_sensitivity <= 2.0 * s.hl;
  return s;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t hv = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      hv ^= static_cast<unsigned char>(buf[i]);
      hv *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hv));
  return hex;
}

std::string latent_csv(const SurrogateModel& model, const std::vector<LabeledSetup>& data, double label_scale) {
  const double scale =
      label_scale > 0.0 ? label_scale : std::pow(static_cast<double>(model.config().encoding.n_photons), 2);
  std::ostringstream os;
  os.precision(17);
  os << "id,qfi_true,qfi_pred";
  for (int z = 1; z <= model.config().latent; ++z) os << ",z" << z;
  os << "\n";
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<SetupGraph> graphs;
    for (std::size_t i = start; i < std::min(data.size(), start + kChunk); ++i)
      graphs.push_back(encode_setup(data[i].setup, model.config().encoding));
    std::vector<const SetupGraph*> ptrs;
    for (const auto& g : graphs) ptrs.push_back(&g);
    const auto res = model.evaluate(GraphBatch::build(ptrs));
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      os << data[start + i].id << "," << data[start + i].qfi << "," << res.predictions(row) * scale;
      for (Eigen::Index z = 0; z < res.latent.cols(); ++z) os << "," << res.latent(row, z);
      os << "\n";
    }
  }
  return os.str();
}

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Inline setup text, or the contents of a file when the argument names one.
std::string setup_arg(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) return read_text(arg);
  return arg;
}

void write_manifest(const std::filesystem::path& path, const std::string& command, const json& config,
                    const Globals& g, const std::vector<std::filesystem::path>& artifacts) {
  json j;
  j["command"] = command;
  j["seed"] = g.seed;
  j["threads"] = g.threads;
  j["config"] = config;
  std::uint64_t ch = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    ch ^= c;
    ch *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(ch));
  j["config_hash"] = hex;
  json arts = json::object();
  for (const auto& a : artifacts) arts[a.filename().string()] = file_hash(a);
  j["artifacts"] = arts;
  write_text(path, j.dump(2) + "\n");
}

std::filesystem::path sibling(const std::filesystem::path& p, const std::string& suffix) {
  return p.string() + suffix;
}

std::string num(double x) {
  if (!std::isfinite(x)) return x > 0 ? "inf" : "nan";
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep-learning quantum sensing toolkit", "dqs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_flag("--help", "Print this help message and exit");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (DQS_THREADS overrides)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "Sample and label a dataset (JSONL)");
  ToolboxConfig tb;
  std::string gen_h = "sumZ";
  std::size_t gen_count = 0;
  bool no_dedup = false;
  std::string gen_out;
  gen->add_option("--photons", tb.n_photons)->capture_default_str();
  gen->add_option("--grid", tb.angle_grid, "Wave-plate angle steps per pi")->capture_default_str();
  gen->add_option("--min-length", tb.min_length)->capture_default_str();
  gen->add_option("--max-length", tb.max_length)->capture_default_str();
  gen->add_option("--count", gen_count)->required();
  gen->add_option("--h", gen_h, "Hamiltonian tag")->capture_default_str();
  gen->add_flag("--no-dedup", no_dedup);
  gen->add_option("--out", gen_out)->required();

  // train
  auto* trn = app.add_subcommand("train", "Train the surrogate");
  std::string trn_data, trn_val, trn_out;
  ModelConfig mc;
  TrainConfig tc;
  bool full = false;
  trn->add_option("--data", trn_data)->required();
  trn->add_option("--val", trn_val, "Explicit validation set");
  trn->add_option("--latent", mc.latent)->capture_default_str();
  trn->add_option("--layers", mc.layers)->capture_default_str();
  trn->add_option("--heads", mc.heads)->capture_default_str();
  trn->add_option("--grid", mc.encoding.angle_grid)->capture_default_str();
  trn->add_option("--epochs", tc.epochs)->capture_default_str();
  trn->add_option("--lr", tc.learning_rate)->capture_default_str();
  trn->add_option("--wd", tc.weight_decay)->capture_default_str();
  trn->add_option("--batch", tc.batch_size)->capture_default_str();
  trn->add_option("--val-fraction", tc.val_fraction)->capture_default_str();
  trn->add_flag("--decoupled", tc.decoupled_weight_decay, "Decoupled weight decay");
  trn->add_flag("--cosine", tc.cosine_schedule, "Cosine-anneal the learning rate to zero");
  trn->add_flag("--augment", tc.augment_paths, "Random pair-preserving path relabeling");
  trn->add_flag("--full", full, "Latent 256 and 200 epochs");
  trn->add_option("--out", trn_out)->required();

  // eval
  auto* evl = app.add_subcommand("eval", "MSE and Spearman of a model on a dataset");
  std::string evl_model, evl_data;
  evl->add_option("--model", evl_model)->required();
  evl->add_option("--data", evl_data)->required();

  // rank
  auto* rnk = app.add_subcommand("rank", "Rank a pool by predicted QFI");
  std::string rnk_model, rnk_pool, rnk_out, rnk_h;
  std::size_t rnk_k = 5;
  bool rnk_labeled = false;
  rnk->add_option("--model", rnk_model)->required();
  rnk->add_option("--pool", rnk_pool)->required();
  rnk->add_option("--k", rnk_k)->capture_default_str();
  rnk->add_option("--h", rnk_h, "Validate the top K against the oracle for this Hamiltonian");
  rnk->add_flag("--labeled-pool", rnk_labeled, "Trust pool labels and report regret");
  rnk->add_option("--out", rnk_out)->required();

  // prune
  auto* prn = app.add_subcommand("prune", "Remove devices that do not change QFI");
  std::string prn_setup, prn_h = "sumZ", prn_out;
  int prn_photons = 8, prn_trials = 0;
  prn->add_option("--setup", prn_setup, "Setup text or file")->required();
  prn->add_option("--photons", prn_photons, "Photons for a bare sequence")->capture_default_str();
  prn->add_option("--h", prn_h)->capture_default_str();
  prn->add_option("--trials", prn_trials, "0 means 3 x length")->capture_default_str();
  prn->add_option("--out", prn_out);

  // sense
  auto* sns = app.add_subcommand("sense", "Estimate the response and sensitivity of a probe");
  std::string sns_setup, sns_h = "sumZ", sns_obs = "prodX", sns_out = "sense";
  int sns_photons = 8, sns_grid = 512;
  std::uint64_t sns_shots = 10000;
  sns->add_option("--setup", sns_setup, "Setup text or file")->required();
  sns->add_option("--photons", sns_photons)->capture_default_str();
  sns->add_option("--h", sns_h)->capture_default_str();
  sns->add_option("--obs", sns_obs)->capture_default_str();
  sns->add_option("--shots", sns_shots, "0 for exact readings")->capture_default_str();
  sns->add_option("--grid-points", sns_grid)->capture_default_str();
  sns->add_option("--out", sns_out, "Output prefix for .json and .csv")->capture_default_str();

  // export-latent
  auto* lat = app.add_subcommand("export-latent", "Write pooled latent vectors as CSV");
  std::string lat_model, lat_data, lat_out;
  lat->add_option("--model", lat_model)->required();
  lat->add_option("--data", lat_data)->required();
  lat->add_option("--out", lat_out)->required();

  // golden
  auto* gld = app.add_subcommand("golden", "Check the reference eight-photon sequences");
  std::string gld_out;
  gld->add_option("--out", gld_out, "Optional JSON report");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "gen, train, rank, validate and sense in one run");
  PipelineConfig pc;
  std::string pip_out;
  pip->add_option("--photons", pc.toolbox.n_photons)->capture_default_str();
  pip->add_option("--grid", pc.toolbox.angle_grid)->capture_default_str();
  pip->add_option("--train-count", pc.train_count)->capture_default_str();
  pip->add_option("--pool-count", pc.pool_count)->capture_default_str();
  pip->add_option("--k", pc.top_k)->capture_default_str();
  pip->add_option("--h", pc.hamiltonian)->capture_default_str();
  pip->add_option("--obs", pc.observable)->capture_default_str();
  pip->add_option("--shots", pc.shots)->capture_default_str();
  pip->add_option("--latent", pc.model.latent)->capture_default_str();
  pip->add_option("--layers", pc.model.layers)->capture_default_str();
  pip->add_option("--epochs", pc.train.epochs)->capture_default_str();
  pip->add_option("--lr", pc.train.learning_rate)->capture_default_str();
  pip->add_option("--batch", pc.train.batch_size)->capture_default_str();
  pip->add_flag("--cosine", pc.train.cosine_schedule, "Cosine-anneal the learning rate to zero");
  pip->add_flag("--prune", pc.prune, "Prune the best candidate before sensing");
  pip->add_option("--out", pip_out, "Output directory")->required();

  std::vector<const char*> argv{"dqs"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (const char* env = std::getenv("DQS_THREADS")) {
    try {
      g.threads = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      err << "error: DQS_THREADS must be an integer\n";
      return 2;
    }
  }

  try {
    if (*gen) {
      const auto h = Hamiltonian::from_tag(gen_h, tb.n_photons);
      auto res = generate_dataset(tb, h, gen_count, g.seed, g.threads, !no_dedup);
      write_dataset(gen_out, res.records);
      write_manifest(sibling(gen_out, ".manifest.json"), "gen",
                     {{"photons", tb.n_photons}, {"grid", tb.angle_grid}, {"min_length", tb.min_length},
                      {"max_length", tb.max_length}, {"count", gen_count}, {"h", gen_h}, {"dedup", !no_dedup}},
                     g, {gen_out});
      out << "wrote " << res.records.size() << " records to " << gen_out << " (" << res.duplicates
          << " duplicates skipped)\n";
    } else if (*trn) {
      const auto data = read_dataset(trn_data);
      if (data.empty()) throw std::invalid_argument("training set is empty");
      std::vector<LabeledSetup> val;
      if (!trn_val.empty()) val = read_dataset(trn_val);
      if (full) {
        mc.latent = 256;
        tc.epochs = TrainConfig::full_recipe().epochs;
      }
      mc.encoding.n_photons = data.front().setup.n_photons;
      tc.seed = derive_seed(g.seed, 4);
      SurrogateModel model(mc, derive_seed(g.seed, 3));
      std::string hist = "epoch,train_mse,val_mse,val_spearman\n";
      auto res = train(model, data, tc, trn_val.empty() ? nullptr : &val, [&](const EpochStats& st) {
        const std::string line = std::to_string(st.epoch) + "," + num(st.train_mse) + "," + num(st.val_mse) + "," +
                                 num(st.val_spearman);
        hist += line + "\n";
        out << "epoch " << line << "\n";
      });
      model.save(trn_out);
      write_text(sibling(trn_out, ".history.csv"), hist);
      write_manifest(sibling(trn_out, ".manifest.json"), "train",
                     {{"data", trn_data}, {"model", json::parse(mc.to_json())}, {"epochs", tc.epochs},
                      {"lr", tc.learning_rate}, {"wd", tc.weight_decay}, {"batch", tc.batch_size},
                      {"decoupled", tc.decoupled_weight_decay}, {"cosine", tc.cosine_schedule},
                      {"augment", tc.augment_paths}, {"train_size", res.train_size},
                      {"val_size", res.val_size}},
                     g, {trn_out, sibling(trn_out, ".history.csv")});
    } else if (*evl) {
      const auto model = SurrogateModel::load(evl_model);
      const auto data = read_dataset(evl_data);
      const auto m = evaluate(model, data, g.threads);
      out << json{{"n", data.size()}, {"mse", m.mse}, {"spearman", m.spearman}}.dump() << "\n";
    } else if (*rnk) {
      const auto model = SurrogateModel::load(rnk_model);
      const auto pool = read_dataset(rnk_pool);
      auto ranked = rank_candidates(model, pool, rnk_k, g.threads);
      if (!rnk_h.empty()) {
        const auto h = Hamiltonian::from_tag(rnk_h, model.config().encoding.n_photons);
        ToolboxConfig t;
        t.angle_grid = model.config().encoding.angle_grid;
        ranked = validate(std::move(ranked), h, t.sim_options(), rnk_labeled ? &pool : nullptr);
      }
      write_text(rnk_out, ranked.to_csv());
      write_manifest(sibling(rnk_out, ".manifest.json"), "rank",
                     {{"model", rnk_model}, {"pool", rnk_pool}, {"k", rnk_k}, {"h", rnk_h}}, g, {rnk_out});
      out << ranked.to_csv();
      if (ranked.regret) out << "regret " << *ranked.regret << "\n";
    } else if (*prn) {
      const auto setup = setup_from_text(setup_arg(prn_setup), prn_photons);
      const auto h = Hamiltonian::from_tag(prn_h, setup.n_photons);
      Rng rng(g.seed);
      const auto pruned = prune_setup(setup, h, prn_trials, rng);
      out << "before " << setup.sequence.size() << " qfi " << label_setup(setup, h).qfi << ": "
          << format_setup(setup) << "\n";
      out << "after  " << pruned.sequence.size() << " qfi " << label_setup(pruned, h).qfi << ": "
          << format_setup(pruned) << "\n";
      if (!prn_out.empty()) {
        write_text(prn_out, format_setup(pruned) + "\n");
        write_manifest(sibling(prn_out, ".manifest.json"), "prune", {{"h", prn_h}, {"trials", prn_trials}}, g,
                       {prn_out});
      }
    } else if (*sns) {
      const auto setup = setup_from_text(setup_arg(sns_setup), sns_photons);
      const int n = setup.n_photons;
      const auto obs = Observable::from_tag(sns_obs, n);
      const auto probe = postselect(run_setup(setup));
      if (probe.success_prob <= 0.0) throw std::invalid_argument("setup yields no post-selected probe");
      const auto h = Hamiltonian::from_tag(sns_h, n);
      const int degree = h.response_degree();
      const HamiltonianChannel channel(h);
      SensingOptions so;
      so.grid_points = sns_grid;
      const auto report = run_sensing(probe, channel, obs, degree, sns_shots, g.seed, so);
      const std::filesystem::path json_path = sns_out + ".json", csv_path = sns_out + ".csv";
      write_text(json_path, report.to_json() + "\n");
      write_text(csv_path, report.sensitivity_csv());
      write_manifest(sns_out + ".manifest.json", "sense",
                     {{"setup", format_setup(setup)}, {"h", sns_h}, {"obs", sns_obs}, {"shots", sns_shots},
                      {"grid_points", sns_grid}},
                     g, {json_path, csv_path});
      out << "degree " << degree << " success_prob " << probe.success_prob << "\n"
          << "min_sensitivity " << num(report.min_sensitivity) << " at theta " << report.argmin_theta << "\n"
          << "sql " << report.sql << " hl " << report.hl << "\n";
    } else if (*lat) {
      const auto model = SurrogateModel::load(lat_model);
      const auto data = read_dataset(lat_data);
      write_text(lat_out, latent_csv(model, data));
      write_manifest(sibling(lat_out, ".manifest.json"), "export-latent",
                     {{"model", lat_model}, {"data", lat_data}}, g, {lat_out});
    } else if (*gld) {
      const auto results = run_golden();
      bool ok = true;
      json rep = json::array();
      for (const auto& r : results) {
        ok = ok && r.qfi_ok && r.state_ok;
        out << r.name << ": devices " << r.devices << " qfi " << num(r.qfi) << " (expected " << r.expected_qfi
            << ") " << (r.qfi_ok ? "ok" : "MISMATCH") << "; state fidelity " << num(r.fidelity) << " "
            << (r.state_ok ? "ok" : "MISMATCH") << "; success " << r.success_prob << "\n";
        rep.push_back({{"name", r.name}, {"devices", r.devices}, {"qfi", r.qfi}, {"expected_qfi", r.expected_qfi},
                       {"fidelity", r.fidelity}, {"success_prob", r.success_prob}, {"qfi_ok", r.qfi_ok},
                       {"state_ok", r.state_ok}});
      }
      if (!gld_out.empty()) {
        write_text(gld_out, rep.dump(2) + "\n");
        write_manifest(sibling(gld_out, ".manifest.json"), "golden", json::object(), g, {gld_out});
      }
      return ok ? 0 : 1;
    } else if (*pip) {
      pc.seed = g.seed;
      pc.threads = g.threads;
      const auto s = run_pipeline(pc);
      std::filesystem::create_directories(pip_out);
      const std::filesystem::path dir = pip_out;
      write_text(dir / "summary.json", s.to_json() + "\n");
      write_text(dir / "ranked.csv", s.ranked.to_csv());
      write_text(dir / "report.json", s.report.to_json() + "\n");
      write_text(dir / "sensitivity.csv", s.report.sensitivity_csv());
      write_manifest(dir / "manifest.json", "pipeline",
                     {{"photons", pc.toolbox.n_photons}, {"grid", pc.toolbox.angle_grid},
                      {"train_count", pc.train_count}, {"pool_count", pc.pool_count}, {"k", pc.top_k},
                      {"h", pc.hamiltonian}, {"obs", pc.observable}, {"shots", pc.shots},
                      {"model", json::parse(pc.model.to_json())}, {"epochs", pc.train.epochs},
                      {"lr", pc.train.learning_rate}, {"batch", pc.train.batch_size},
                      {"cosine", pc.train.cosine_schedule}, {"prune", pc.prune}},
                     g,
                     {dir / "summary.json", dir / "ranked.csv", dir / "report.json", dir / "sensitivity.csv"});
      out << s.to_json() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dqs
