#include "dqs/graph.hpp"

#include <cmath>
#include <sstream>

namespace dqs {

int EncodingConfig::slot(const Device& d) const {
  auto angle_step = [&] {
    const double steps = d.angle_pi * angle_grid;
    const double k = std::round(steps);
    if (std::abs(steps - k) > 1e-9) throw SetupError("angle off the encoding grid");
    return static_cast<int>(k) % angle_grid;
  };
  switch (d.kind) {
    case DeviceKind::DC00: return 0;
    case DeviceKind::DC11: return 1;
    case DeviceKind::DCBell: return 2;
    case DeviceKind::BS: return 3;
    case DeviceKind::PBS: return 4;
    case DeviceKind::HWP: return 5 + angle_step();
    case DeviceKind::QWP: return 5 + angle_grid + angle_step();
    case DeviceKind::R: return 5 + 2 * angle_grid;
  }
  throw SetupError("unknown device kind");
}

SetupGraph encode_setup(const OpticalSetup& setup, const EncodingConfig& config) {
  if (setup.n_photons != config.n_photons) throw SetupError("setup photon count differs from encoding config");
  const int n_devices = static_cast<int>(setup.device_count());
  const int n_nodes = n_devices + 2;
  const int end = n_nodes - 1;

  SetupGraph g;
  g.features = Eigen::MatrixXd::Zero(n_nodes, config.feature_dim());
  g.adjacency = Eigen::MatrixXi::Zero(n_nodes, n_nodes);
  g.features(0, config.start_slot()) = 1.0;
  g.features(end, config.end_slot()) = 1.0;

  std::vector<int> last(static_cast<std::size_t>(config.n_photons), -1);
  int node = 1;
  auto place = [&](const Device& d, bool from_start) {
    validate_device(d, config.n_photons, SimOptions{config.angle_grid});
    g.features(node, config.slot(d)) = 1.0;
    if (from_start) g.adjacency(0, node) = 1;
    for (int p : d.paths()) {
      g.features(node, config.one_hot_dim() + p) = 1.0;
      const int prev = last[static_cast<std::size_t>(p)];
      if (prev >= 0) g.adjacency(prev, node) = 1;
      last[static_cast<std::size_t>(p)] = node;
    }
    ++node;
  };
  for (const auto& s : setup.sources) place(s, true);
  for (const auto& d : setup.sequence) place(d, false);
  for (int p : last)
    if (p >= 0) g.adjacency(p, end) = 1;
  return g;
}

namespace {

template <typename M>
std::string to_csv(const M& m) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string matrix_csv(const Eigen::MatrixXd& m) { return to_csv(m); }
std::string matrix_csv(const Eigen::MatrixXi& m) { return to_csv(m); }

}  // namespace dqs
