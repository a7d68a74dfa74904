#pragma once

#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqs {

using Amplitude = std::complex<double>;

/// Raised for malformed devices, setups, or mismatched dimensions.
class SetupError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Photon polarization. Vertical encodes logical |0>, horizontal logical |1>.
enum class Polarization : std::uint8_t { V = 0, H = 1 };

struct Mode {
  int path = 0;
  Polarization pol = Polarization::V;

  int index() const { return 2 * path + static_cast<int>(pol); }
  static Mode from_index(int i) { return {i / 2, static_cast<Polarization>(i % 2)}; }
  friend auto operator<=>(const Mode&, const Mode&) = default;
};

/// Occupation numbers over the 2N (path, polarization) modes. A monomial in
/// creation operators; the occupancy vector is its own canonical form.
class FockMonomial {
 public:
  FockMonomial() = default;
  explicit FockMonomial(int n_paths) : occupancy_(static_cast<std::size_t>(2 * n_paths), 0) {}
  explicit FockMonomial(std::vector<std::uint8_t> occupancy) : occupancy_(std::move(occupancy)) {}

  int n_modes() const { return static_cast<int>(occupancy_.size()); }
  int n_paths() const { return n_modes() / 2; }
  int count(int mode) const { return occupancy_[static_cast<std::size_t>(mode)]; }
  int count(Mode m) const { return count(m.index()); }
  int path_count(int path) const { return count(2 * path) + count(2 * path + 1); }
  int photon_count() const;

  void add(int mode, int n = 1) { occupancy_[static_cast<std::size_t>(mode)] += static_cast<std::uint8_t>(n); }
  void clear(int mode) { occupancy_[static_cast<std::size_t>(mode)] = 0; }

  /// Product of n_m! over all modes: squared norm of the Fock vector this
  /// monomial creates from vacuum.
  double bosonic_weight() const;

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  friend auto operator<=>(const FockMonomial&, const FockMonomial&) = default;

 private:
  std::vector<std::uint8_t> occupancy_;
};

/// A polynomial in creation operators acting on vacuum. Amplitudes are kept
/// unnormalized through evolution.
class FockState {
 public:
  using TermMap = std::map<FockMonomial, Amplitude>;

  /// The zero polynomial over `n_paths` paths.
  explicit FockState(int n_paths);
  /// The vacuum: a single empty monomial with amplitude 1.
  static FockState vacuum(int n_paths);

  int n_paths() const { return n_paths_; }
  /// Photon number shared by all monomials (0 for an empty state).
  int photon_count() const;
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const TermMap& terms() const { return terms_; }

  Amplitude amplitude(const FockMonomial& m) const;
  void add(const FockMonomial& m, Amplitude a);
  void prune(double threshold);

  /// Physical squared norm, sum |c|^2 * prod n_m!.
  double norm_squared() const;

 private:
  int n_paths_;
  TermMap terms_;
};

enum class DeviceKind : std::uint8_t { DC00, DC11, DCBell, BS, PBS, HWP, QWP, R };

inline constexpr DeviceKind kAllDeviceKinds[] = {DeviceKind::DC00, DeviceKind::DC11, DeviceKind::DCBell,
                                                 DeviceKind::BS,   DeviceKind::PBS,  DeviceKind::HWP,
                                                 DeviceKind::QWP,  DeviceKind::R};

bool is_source(DeviceKind k);
bool is_two_path(DeviceKind k);
bool has_angle(DeviceKind k);
const char* kind_name(DeviceKind k);
/// Inverse of kind_name; throws SetupError naming the token on failure.
DeviceKind kind_from_name(const std::string& name);

/// One optical element. Wave-plate angles are stored in units of pi, reduced
/// modulo 1 and snapped to the nearest small-denominator fraction so equal
/// angles compare bit-equal regardless of how they were produced.
struct Device {
  DeviceKind kind = DeviceKind::R;
  int path_a = 0;
  int path_b = -1;
  double angle_pi = 0.0;

  static Device source(DeviceKind k, int a, int b);
  static Device bs(int a, int b) { return {DeviceKind::BS, a, b, 0.0}; }
  static Device pbs(int a, int b) { return {DeviceKind::PBS, a, b, 0.0}; }
  static Device hwp(int a, double angle_pi);
  static Device qwp(int a, double angle_pi);
  static Device r(int a) { return {DeviceKind::R, a, -1, 0.0}; }

  double angle() const;
  std::vector<int> paths() const;
  bool touches(int path) const { return path_a == path || path_b == path; }

  friend bool operator==(const Device&, const Device&) = default;
};

/// Reduce an angle given in units of pi modulo 1 and snap it to k/d for the
/// smallest d <= 720 within 1e-9. Values that do not snap are returned reduced.
double canonical_angle_pi(double angle_pi);

struct SimOptions {
  /// Wave-plate angles must be multiples of pi / angle_grid.
  int angle_grid = 4;
  double prune_threshold = 1e-12;
  std::size_t max_length = 15;
};

struct OpticalSetup {
  int n_photons = 0;
  std::vector<Device> sources;
  std::vector<Device> sequence;

  /// Total number of devices including sources.
  std::size_t device_count() const { return sources.size() + sequence.size(); }
  /// Throws SetupError if the source layer does not partition the paths or a
  /// device is malformed under `opts`.
  void validate(const SimOptions& opts = {}) const;

  friend bool operator==(const OpticalSetup&, const OpticalSetup&) = default;
};

/// Sources of kind `k` on consecutive path pairs (a,b), (c,d), ...
std::vector<Device> consecutive_sources(int n_photons, DeviceKind k);

/// Throws SetupError if `d` is malformed for `n_paths` paths.
void validate_device(const Device& d, int n_paths, const SimOptions& opts = {});

/// Normalized post-selected state over 2^N basis states. Basis index has path
/// 0 as its most significant bit.
struct QubitState {
  int n_qubits = 0;
  std::vector<Amplitude> amplitudes;
  double success_prob = 0.0;

  std::size_t dim() const { return amplitudes.size(); }
  static QubitState from_amplitudes(std::vector<Amplitude> amps, double success_prob = 1.0);
  /// Index of the bitstring whose character p is the logical value on path p.
  static std::size_t basis_index(const std::string& bits);
};

FockState apply_device(const FockState& state, const Device& device, const SimOptions& opts = {});
FockState run_setup(const OpticalSetup& setup, const SimOptions& opts = {});
QubitState postselect(const FockState& state);

/// Embed a qubit state as one-photon-per-path monomials.
FockState embed(const QubitState& q);

/// |<a|b>|^2. Both states must be normalized and share a dimension.
double fidelity_up_to_phase(const QubitState& a, const QubitState& b);

}  // namespace dqs
