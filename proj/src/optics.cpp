#include "dqs/optics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

namespace dqs {

namespace {

using LinearForm = std::vector<std::pair<int, Amplitude>>;

constexpr Amplitude kI{0.0, 1.0};

// Multiplies every monomial of `poly` by sum_t c_t a_t^dagger.
void multiply_linear(FockState::TermMap& poly, const LinearForm& form) {
  FockState::TermMap out;
  for (const auto& [mono, amp] : poly) {
    for (const auto& [target, coeff] : form) {
      FockMonomial m = mono;
      m.add(target);
      out[m] += amp * coeff;
    }
  }
  poly = std::move(out);
}

std::array<std::array<Amplitude, 2>, 2> waveplate_matrix(DeviceKind kind, double angle) {
  const double c = std::cos(2.0 * angle);
  const double s = std::sin(2.0 * angle);
  if (kind == DeviceKind::HWP) {
    return {{{c, s}, {s, -c}}};
  }
  const double r = std::numbers::sqrt2 / 2.0;
  return {{{r * Amplitude(1.0, -c), r * Amplitude(0.0, -s)}, {r * Amplitude(0.0, -s), r * Amplitude(1.0, c)}}};
}

// Per-mode substitution a_m^dagger -> sum_t c_t a_t^dagger for a unitary device.
std::vector<std::pair<int, LinearForm>> substitution(const Device& d) {
  std::vector<std::pair<int, LinearForm>> sub;
  const int a = d.path_a;
  const int b = d.path_b;
  switch (d.kind) {
    case DeviceKind::R:
      for (int l = 0; l < 2; ++l) sub.push_back({2 * a + l, {{2 * a + l, kI}}});
      break;
    case DeviceKind::BS: {
      const double r = std::numbers::sqrt2 / 2.0;
      for (int l = 0; l < 2; ++l) {
        sub.push_back({2 * a + l, {{2 * a + l, r}, {2 * b + l, kI * r}}});
        sub.push_back({2 * b + l, {{2 * b + l, r}, {2 * a + l, kI * r}}});
      }
      break;
    }
    case DeviceKind::PBS:
      sub.push_back({2 * a + 1, {{2 * b + 1, 1.0}}});
      sub.push_back({2 * b + 1, {{2 * a + 1, 1.0}}});
      break;
    case DeviceKind::HWP:
    case DeviceKind::QWP: {
      const auto o = waveplate_matrix(d.kind, d.angle());
      // |l> -> sum_m O[m][l] |m>
      for (int l = 0; l < 2; ++l) sub.push_back({2 * a + l, {{2 * a, o[0][l]}, {2 * a + 1, o[1][l]}}});
      break;
    }
    default:
      break;
  }
  return sub;
}

FockState apply_source(const FockState& state, const Device& d) {
  std::vector<std::pair<int, int>> pairs;  // (mode on a, mode on b)
  if (d.kind == DeviceKind::DC00 || d.kind == DeviceKind::DCBell) pairs.push_back({2 * d.path_a, 2 * d.path_b});
  if (d.kind == DeviceKind::DC11 || d.kind == DeviceKind::DCBell)
    pairs.push_back({2 * d.path_a + 1, 2 * d.path_b + 1});
  FockState out(state.n_paths());
  for (const auto& [mono, amp] : state.terms()) {
    for (const auto& [ma, mb] : pairs) {
      FockMonomial m = mono;
      m.add(ma);
      m.add(mb);
      out.add(m, amp);
    }
  }
  return out;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

int FockMonomial::photon_count() const {
  return std::accumulate(occupancy_.begin(), occupancy_.end(), 0);
}

double FockMonomial::bosonic_weight() const {
  double w = 1.0;
  for (auto n : occupancy_)
    if (n > 1) w *= factorial(n);
  return w;
}

FockState::FockState(int n_paths) : n_paths_(n_paths) {
  if (n_paths < 0) throw SetupError("negative path count");
}

FockState FockState::vacuum(int n_paths) {
  FockState s(n_paths);
  s.terms_.emplace(FockMonomial(n_paths), Amplitude(1.0, 0.0));
  return s;
}

int FockState::photon_count() const {
  return terms_.empty() ? 0 : terms_.begin()->first.photon_count();
}

Amplitude FockState::amplitude(const FockMonomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Amplitude{} : it->second;
}

void FockState::add(const FockMonomial& m, Amplitude a) {
  if (m.n_paths() != n_paths_) throw SetupError("monomial path count mismatch");
  if (!terms_.empty() && m.photon_count() != photon_count())
    throw SetupError("monomial photon count differs from state");
  terms_[m] += a;
}

void FockState::prune(double threshold) {
  std::erase_if(terms_, [threshold](const auto& kv) { return std::abs(kv.second) < threshold; });
}

double FockState::norm_squared() const {
  double n = 0.0;
  for (const auto& [mono, amp] : terms_) n += std::norm(amp) * mono.bosonic_weight();
  return n;
}

bool is_source(DeviceKind k) {
  return k == DeviceKind::DC00 || k == DeviceKind::DC11 || k == DeviceKind::DCBell;
}

bool is_two_path(DeviceKind k) {
  return is_source(k) || k == DeviceKind::BS || k == DeviceKind::PBS;
}

bool has_angle(DeviceKind k) { return k == DeviceKind::HWP || k == DeviceKind::QWP; }

const char* kind_name(DeviceKind k) {
  switch (k) {
    case DeviceKind::DC00: return "DC00";
    case DeviceKind::DC11: return "DC11";
    case DeviceKind::DCBell: return "DCBell";
    case DeviceKind::BS: return "BS";
    case DeviceKind::PBS: return "PBS";
    case DeviceKind::HWP: return "HWP";
    case DeviceKind::QWP: return "QWP";
    case DeviceKind::R: return "R";
  }
  return "?";
}

DeviceKind kind_from_name(const std::string& name) {
  for (auto k : kAllDeviceKinds)
    if (name == kind_name(k)) return k;
  throw SetupError("unknown device kind '" + name + "'");
}

double canonical_angle_pi(double angle_pi) {
  double x = std::fmod(angle_pi, 1.0);
  if (x < 0) x += 1.0;
  for (int d = 1; d <= 720; ++d) {
    const double k = std::round(x * d);
    if (std::abs(x * d - k) < 1e-9 * d) {
      const double snapped = k / d;
      return snapped >= 1.0 ? 0.0 : snapped;
    }
  }
  return x;
}

Device Device::source(DeviceKind k, int a, int b) {
  if (!is_source(k)) throw SetupError(std::string("not a source kind: ") + kind_name(k));
  return {k, a, b, 0.0};
}

Device Device::hwp(int a, double angle_pi) { return {DeviceKind::HWP, a, -1, canonical_angle_pi(angle_pi)}; }

Device Device::qwp(int a, double angle_pi) { return {DeviceKind::QWP, a, -1, canonical_angle_pi(angle_pi)}; }

double Device::angle() const { return angle_pi * std::numbers::pi; }

std::vector<int> Device::paths() const {
  if (is_two_path(kind)) return {path_a, path_b};
  return {path_a};
}

void validate_device(const Device& d, int n_paths, const SimOptions& opts) {
  const std::string name = kind_name(d.kind);
  auto in_range = [n_paths](int p) { return p >= 0 && p < n_paths; };
  if (!in_range(d.path_a)) throw SetupError(name + ": path index " + std::to_string(d.path_a) + " out of range");
  if (is_two_path(d.kind)) {
    if (!in_range(d.path_b))
      throw SetupError(name + ": path index " + std::to_string(d.path_b) + " out of range");
    if (d.path_a == d.path_b) throw SetupError(name + ": paths must be distinct");
  } else if (d.path_b != -1) {
    throw SetupError(name + " takes a single path");
  }
  if (has_angle(d.kind)) {
    const double steps = d.angle_pi * opts.angle_grid;
    if (std::abs(steps - std::round(steps)) > 1e-9 || d.angle_pi < 0.0 || d.angle_pi >= 1.0)
      throw SetupError(name + ": angle " + std::to_string(d.angle_pi) + "pi is off the pi/" +
                       std::to_string(opts.angle_grid) + " grid");
  }
}

void OpticalSetup::validate(const SimOptions& opts) const {
  if (n_photons <= 0 || n_photons % 2 != 0) throw SetupError("photon count must be positive and even");
  std::vector<int> covered(static_cast<std::size_t>(n_photons), 0);
  for (const auto& s : sources) {
    if (!is_source(s.kind)) throw SetupError(std::string("source layer holds ") + kind_name(s.kind));
    validate_device(s, n_photons, opts);
    ++covered[static_cast<std::size_t>(s.path_a)];
    ++covered[static_cast<std::size_t>(s.path_b)];
  }
  if (std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; }))
    throw SetupError("sources must cover every path exactly once");
  if (sequence.size() > opts.max_length)
    throw SetupError("sequence length " + std::to_string(sequence.size()) + " exceeds maximum " +
                     std::to_string(opts.max_length));
  for (const auto& d : sequence) {
    if (is_source(d.kind)) throw SetupError("source device inside the sequence");
    validate_device(d, n_photons, opts);
  }
}

std::vector<Device> consecutive_sources(int n_photons, DeviceKind k) {
  std::vector<Device> out;
  for (int p = 0; p + 1 < n_photons; p += 2) out.push_back(Device::source(k, p, p + 1));
  return out;
}

QubitState QubitState::from_amplitudes(std::vector<Amplitude> amps, double success_prob) {
  QubitState q;
  const auto dim = amps.size();
  if (dim == 0 || (dim & (dim - 1)) != 0) throw SetupError("amplitude count must be a power of two");
  q.n_qubits = std::countr_zero(dim);
  double n = 0.0;
  for (auto a : amps) n += std::norm(a);
  if (n > 0) {
    const double s = 1.0 / std::sqrt(n);
    for (auto& a : amps) a *= s;
  }
  q.amplitudes = std::move(amps);
  q.success_prob = n > 0 ? success_prob : 0.0;
  return q;
}

std::size_t QubitState::basis_index(const std::string& bits) {
  std::size_t idx = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw SetupError("bitstring must contain only 0/1");
    idx = (idx << 1) | static_cast<std::size_t>(c - '0');
  }
  return idx;
}

FockState apply_device(const FockState& state, const Device& device, const SimOptions& opts) {
  const int n = state.n_paths();
  validate_device(device, n, opts);
  if (is_source(device.kind)) {
    auto out = apply_source(state, device);
    out.prune(opts.prune_threshold);
    return out;
  }

  const auto sub = substitution(device);
  FockState out(n);
  for (const auto& [mono, amp] : state.terms()) {
    FockMonomial rest = mono;
    for (const auto& [mode, form] : sub) rest.clear(mode);
    FockState::TermMap poly{{rest, amp}};
    for (const auto& [mode, form] : sub)
      for (int k = 0; k < mono.count(mode); ++k) multiply_linear(poly, form);
    for (const auto& [m, a] : poly) out.add(m, a);
  }
  out.prune(opts.prune_threshold);
  return out;
}

FockState run_setup(const OpticalSetup& setup, const SimOptions& opts) {
  setup.validate(opts);
  FockState state = FockState::vacuum(setup.n_photons);
  for (const auto& s : setup.sources) state = apply_device(state, s, opts);
  for (const auto& d : setup.sequence) state = apply_device(state, d, opts);
  return state;
}

QubitState postselect(const FockState& state) {
  const int n = state.n_paths();
  QubitState q;
  q.n_qubits = n;
  q.amplitudes.assign(std::size_t{1} << n, Amplitude{});
  const double total = state.norm_squared();
  if (state.photon_count() != n || total <= 0.0) return q;

  double kept = 0.0;
  for (const auto& [mono, amp] : state.terms()) {
    std::size_t idx = 0;
    bool valid = true;
    for (int p = 0; p < n && valid; ++p) {
      valid = mono.path_count(p) == 1;
      idx = (idx << 1) | static_cast<std::size_t>(mono.count(2 * p + 1));
    }
    if (!valid) continue;
    q.amplitudes[idx] += amp;
  }
  for (auto a : q.amplitudes) kept += std::norm(a);
  if (kept <= 0.0) {
    std::fill(q.amplitudes.begin(), q.amplitudes.end(), Amplitude{});
    return q;
  }
  const double s = 1.0 / std::sqrt(kept);
  for (auto& a : q.amplitudes) a *= s;
  q.success_prob = std::min(1.0, kept / total);
  return q;
}

FockState embed(const QubitState& q) {
  const int n = q.n_qubits;
  FockState out(n);
  for (std::size_t idx = 0; idx < q.dim(); ++idx) {
    if (q.amplitudes[idx] == Amplitude{}) continue;
    FockMonomial m(n);
    for (int p = 0; p < n; ++p) {
      const int bit = static_cast<int>((idx >> (n - 1 - p)) & 1U);
      m.add(2 * p + bit);
    }
    out.add(m, q.amplitudes[idx]);
  }
  return out;
}

double fidelity_up_to_phase(const QubitState& a, const QubitState& b) {
  if (a.dim() != b.dim()) throw SetupError("fidelity: dimension mismatch");
  Amplitude overlap{};
  for (std::size_t i = 0; i < a.dim(); ++i) overlap += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return std::clamp(std::norm(overlap), 0.0, 1.0);
}

}  // namespace dqs
