#include "dqs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

#include "dqs/parallel.hpp"
#include "dqs/sensing.hpp"
#include "dqs/setup_text.hpp"
#include "json.hpp"

namespace dqs {

using nlohmann::json;

SimOptions ToolboxConfig::sim_options() const {
  SimOptions o;
  o.angle_grid = angle_grid;
  o.max_length = max_length;
  return o;
}

void ToolboxConfig::validate() const {
  if (n_photons < 2 || n_photons % 2 != 0 || n_photons > 26) throw SetupError("photon count must be even, 2..26");
  if (angle_grid < 1) throw SetupError("angle grid must be positive");
  if (min_length > max_length) throw SetupError("min_length exceeds max_length");
  if (kinds.empty() && max_length > 0) throw SetupError("toolbox has no sequence kinds");
  if (dc_kinds.empty()) throw SetupError("toolbox has no source kinds");
  for (auto k : kinds)
    if (is_source(k)) throw SetupError("source kind in sequence toolbox");
  for (auto k : dc_kinds)
    if (!is_source(k)) throw SetupError(std::string("not a source kind: ") + kind_name(k));
}

std::vector<Device> enumerate_toolbox(const ToolboxConfig& config) {
  const int n = config.n_photons;
  std::vector<Device> out;
  for (auto k : config.kinds) {
    switch (k) {
      case DeviceKind::BS:
      case DeviceKind::PBS:
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) out.push_back({k, a, b, 0.0});
        break;
      case DeviceKind::HWP:
      case DeviceKind::QWP:
        for (int a = 0; a < n; ++a)
          for (int s = 0; s < config.angle_grid; ++s)
            out.push_back({k, a, -1, canonical_angle_pi(static_cast<double>(s) / config.angle_grid)});
        break;
      case DeviceKind::R:
        for (int a = 0; a < n; ++a) out.push_back(Device::r(a));
        break;
      default:
        break;
    }
  }
  return out;
}

OpticalSetup sample_setup(const ToolboxConfig& config, Rng& rng) {
  const auto toolbox = enumerate_toolbox(config);
  OpticalSetup s;
  s.n_photons = config.n_photons;
  for (int p = 0; p + 1 < config.n_photons; p += 2) {
    const auto k = config.dc_kinds[uniform_below(rng, config.dc_kinds.size())];
    s.sources.push_back(Device::source(k, p, p + 1));
  }
  const auto span = config.max_length - config.min_length + 1;
  const auto length = config.min_length + uniform_below(rng, span);
  for (std::size_t i = 0; i < length; ++i) s.sequence.push_back(toolbox[uniform_below(rng, toolbox.size())]);
  return s;
}

LabeledSetup label_setup(const OpticalSetup& setup, const Hamiltonian& h, const SimOptions& opts) {
  LabeledSetup rec;
  rec.setup = setup;
  rec.hamiltonian = h.tag();
  const auto q = postselect(run_setup(setup, opts));
  rec.success_prob = q.success_prob;
  rec.valid = q.success_prob > 0.0;
  rec.qfi = rec.valid ? qfi_pure(q, h) : 0.0;
  return rec;
}

std::string canonical_key(const OpticalSetup& setup) { return format_setup(setup); }

namespace {

json device_json(const Device& d) {
  json j;
  j["kind"] = kind_name(d.kind);
  j["paths"] = d.paths();
  if (has_angle(d.kind)) j["angle"] = d.angle_pi * std::numbers::pi;
  return j;
}

Device device_from_json(const json& j) {
  Device d;
  d.kind = kind_from_name(j.at("kind").get<std::string>());
  const auto paths = j.at("paths").get<std::vector<int>>();
  const std::size_t want = is_two_path(d.kind) ? 2 : 1;
  if (paths.size() != want) throw DatasetError(std::string(kind_name(d.kind)) + " needs " + std::to_string(want) + " paths");
  d.path_a = paths[0];
  if (want == 2) d.path_b = paths[1];
  if (has_angle(d.kind)) d.angle_pi = canonical_angle_pi(j.at("angle").get<double>() / std::numbers::pi);
  return d;
}

}  // namespace

std::string to_json_line(const LabeledSetup& rec) {
  json j;
  j["id"] = rec.id;
  j["n"] = rec.setup.n_photons;
  j["sources"] = json::array();
  for (const auto& s : rec.setup.sources) j["sources"].push_back(device_json(s));
  j["seq"] = json::array();
  for (const auto& d : rec.setup.sequence) j["seq"].push_back(device_json(d));
  j["qfi"] = rec.qfi;
  j["succ"] = rec.success_prob;
  j["valid"] = rec.valid;
  j["h"] = rec.hamiltonian;
  return j.dump();
}

LabeledSetup parse_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("invalid JSON: ") + e.what());
  }
  try {
    LabeledSetup rec;
    rec.id = j.at("id").get<std::int64_t>();
    rec.setup.n_photons = j.at("n").get<int>();
    for (const auto& s : j.at("sources")) rec.setup.sources.push_back(device_from_json(s));
    for (const auto& d : j.at("seq")) rec.setup.sequence.push_back(device_from_json(d));
    rec.qfi = j.at("qfi").get<double>();
    rec.success_prob = j.at("succ").get<double>();
    rec.valid = j.at("valid").get<bool>();
    rec.hamiltonian = j.at("h").get<std::string>();
    return rec;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("bad record: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& path, const std::vector<LabeledSetup>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw DatasetError("write failed: " + path.string());
}

std::vector<LabeledSetup> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<LabeledSetup> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_json_line(line));
    } catch (const std::exception& e) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledSetup> label_all(const std::vector<OpticalSetup>& setups, const Hamiltonian& h,
                                    const SimOptions& opts, int threads) {
  std::vector<LabeledSetup> out(setups.size());
  parallel_for(setups.size(), threads, [&](std::size_t i) {
    out[i] = label_setup(setups[i], h, opts);
    out[i].id = static_cast<std::int64_t>(i);
  });
  return out;
}

GenerateResult generate_dataset(const ToolboxConfig& config, const Hamiltonian& h, std::size_t count,
                                std::uint64_t seed, int threads, bool dedup) {
  config.validate();
  if (h.n_qubits() != config.n_photons) throw SetupError("Hamiltonian size differs from photon count");
  GenerateResult result;
  std::vector<OpticalSetup> setups;
  std::set<std::string> seen;
  for (std::uint64_t candidate = 0; setups.size() < count; ++candidate) {
    Rng rng(derive_seed(seed, candidate));
    auto s = sample_setup(config, rng);
    if (dedup && !seen.insert(canonical_key(s)).second) {
      ++result.duplicates;
      if (result.duplicates > 100 * (count + 1)) throw SetupError("toolbox too small for the requested unique count");
      continue;
    }
    setups.push_back(std::move(s));
  }
  result.records = label_all(setups, h, config.sim_options(), threads);
  return result;
}

OpticalSetup relabel_paths(const OpticalSetup& setup, const std::vector<int>& perm) {
  if (perm.size() != static_cast<std::size_t>(setup.n_photons)) throw std::invalid_argument("permutation size");
  auto move = [&](Device d) {
    d.path_a = perm[static_cast<std::size_t>(d.path_a)];
    if (d.path_b >= 0) {
      d.path_b = perm[static_cast<std::size_t>(d.path_b)];
      if (d.path_b < d.path_a) std::swap(d.path_a, d.path_b);
    }
    return d;
  };
  OpticalSetup out;
  out.n_photons = setup.n_photons;
  for (const auto& d : setup.sources) out.sources.push_back(move(d));
  for (const auto& d : setup.sequence) out.sequence.push_back(move(d));
  std::sort(out.sources.begin(), out.sources.end(),
            [](const Device& x, const Device& y) { return x.path_a < y.path_a; });
  return out;
}

std::vector<int> random_pair_permutation(int n_photons, Rng& rng) {
  const int pairs = n_photons / 2;
  std::vector<int> order(static_cast<std::size_t>(pairs));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
  std::vector<int> perm(static_cast<std::size_t>(n_photons));
  std::iota(perm.begin(), perm.end(), 0);
  for (int k = 0; k < pairs; ++k) {
    const int flip = static_cast<int>(uniform_below(rng, 2));
    perm[static_cast<std::size_t>(2 * k)] = 2 * order[static_cast<std::size_t>(k)] + flip;
    perm[static_cast<std::size_t>(2 * k + 1)] = 2 * order[static_cast<std::size_t>(k)] + 1 - flip;
  }
  return perm;
}

}  // namespace dqs
