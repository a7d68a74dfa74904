#include "dqs/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dqs/random.hpp"
#include "json.hpp"

namespace dqs {

namespace {

void check_dims(const QubitState& state, int n_qubits, const char* what) {
  if (state.n_qubits != n_qubits || state.dim() != (std::size_t{1} << n_qubits))
    throw SetupError(std::string(what) + ": dimension mismatch");
}

Amplitude inner(const std::vector<Amplitude>& a, const std::vector<Amplitude>& b) {
  Amplitude s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace

QubitState evolve(const QubitState& state, const Hamiltonian& h, double theta) {
  check_dims(state, h.n_qubits(), "evolve");
  QubitState out = state;
  const double c = std::cos(theta / 2.0);
  const Amplitude s{0.0, -std::sin(theta / 2.0)};
  for (const auto& term : h.terms()) {
    const auto flipped = term.apply(out.amplitudes);
    for (std::size_t i = 0; i < flipped.size(); ++i) out.amplitudes[i] = c * out.amplitudes[i] + s * flipped[i];
  }
  return out;
}

double qfi_pure(const QubitState& state, const Hamiltonian& h) {
  check_dims(state, h.n_qubits(), "qfi_pure");
  const auto hpsi = h.apply(state.amplitudes);
  const double mean = inner(state.amplitudes, hpsi).real();
  const double second = inner(hpsi, hpsi).real();
  return std::max(0.0, second - mean * mean);
}

DensityMatrix density_matrix(const QubitState& state) {
  const auto dim = static_cast<Eigen::Index>(state.dim());
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = state.amplitudes[static_cast<std::size_t>(i)];
  return v * v.adjoint();
}

double qfi_mixed(const DensityMatrix& rho, const Hamiltonian& h) {
  const auto dim = rho.rows();
  if (rho.cols() != dim || dim != (Eigen::Index{1} << h.n_qubits()))
    throw std::invalid_argument("qfi_mixed: dimension mismatch");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9) throw std::invalid_argument("qfi_mixed: rho is not Hermitian");
  if (std::abs(rho.trace() - Amplitude(1.0, 0.0)) > 1e-9) throw std::invalid_argument("qfi_mixed: trace is not 1");

  const Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(rho);
  const Eigen::VectorXd& b = solver.eigenvalues();
  if (b.minCoeff() < -1e-9) throw std::invalid_argument("qfi_mixed: rho is not positive semidefinite");
  const DensityMatrix& phi = solver.eigenvectors();

  DensityMatrix hphi(dim, dim);
  std::vector<Amplitude> col(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) col[static_cast<std::size_t>(i)] = phi(i, j);
    const auto out = h.apply(col);
    for (Eigen::Index i = 0; i < dim; ++i) hphi(i, j) = out[static_cast<std::size_t>(i)];
  }
  const DensityMatrix g = 0.5 * (phi.adjoint() * hphi);

  double f = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (i == j) continue;
      const double denom = b(i) + b(j);
      if (denom < 1e-12) continue;
      const double diff = b(i) - b(j);
      f += diff * diff / denom * std::norm(g(i, j));
    }
  return std::max(0.0, 2.0 * f);
}

double response_exact(const QubitState& state, const Hamiltonian& h, const Observable& o, double theta) {
  if (o.n_qubits() != h.n_qubits()) throw SetupError("response: observable dimension mismatch");
  const auto evolved = evolve(state, h, theta);
  const auto opsi = o.pauli().apply(evolved.amplitudes);
  return std::clamp(inner(evolved.amplitudes, opsi).real(), -1.0, 1.0);
}

double sample_mean(double r, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) throw std::invalid_argument("sample_mean: shots must be positive");
  const double p_plus = std::clamp((1.0 + r) / 2.0, 0.0, 1.0);
  Rng rng(seed);
  std::uint64_t plus = 0;
  for (std::uint64_t i = 0; i < shots; ++i)
    if (uniform01(rng) < p_plus) ++plus;
  return (2.0 * static_cast<double>(plus) - static_cast<double>(shots)) / static_cast<double>(shots);
}

double sample_response(const QubitState& state, const Hamiltonian& h, const Observable& o, double theta,
                       std::uint64_t shots, std::uint64_t seed) {
  return sample_mean(response_exact(state, h, o, theta), shots, seed);
}

double HamiltonianChannel::query(const QubitState& probe, const Observable& o, double theta, std::uint64_t shots,
                                 std::uint64_t seed) const {
  if (shots == 0) return response_exact(probe, h_, o, theta);
  return sample_response(probe, h_, o, theta, shots, seed);
}

SensingReport run_sensing(const QubitState& probe, const BlackBoxChannel& channel, const Observable& o, int degree,
                          std::uint64_t shots, std::uint64_t seed, const SensingOptions& opts) {
  SensingReport rep;
  rep.n_qubits = probe.n_qubits;
  rep.degree = degree;
  rep.shots = shots;
  rep.seed = seed;
  rep.derivative_floor = opts.derivative_floor;
  rep.nodes = uniform_nodes(degree);
  for (std::size_t k = 0; k < rep.nodes.size(); ++k)
    rep.readings.push_back(channel.query(probe, o, rep.nodes[k], shots, derive_seed(seed, k)));
  rep.poly = fit_trig(rep.readings, degree);

  rep.min_node_slope = std::numeric_limits<double>::infinity();
  for (double t : rep.nodes) rep.min_node_slope = std::min(rep.min_node_slope, std::abs(rep.poly.derivative(t)));

  const double n = probe.n_qubits;
  rep.sql = 1.0 / n;
  rep.hl = 1.0 / (n * n);

  rep.min_sensitivity = std::numeric_limits<double>::infinity();
  rep.all_infinite = true;
  double abs_err = 0.0;
  for (int i = 0; i < opts.grid_points; ++i) {
    const double t = 2.0 * std::numbers::pi * i / opts.grid_points;
    const double s = sensitivity(rep.poly, t, opts.derivative_floor);
    rep.grid.push_back(t);
    rep.sensitivities.push_back(s);
    if (std::isfinite(s)) {
      rep.all_infinite = false;
      if (std::abs(rep.poly(t)) < 1.0 && s < rep.min_sensitivity) {
        rep.min_sensitivity = s;
        rep.argmin_theta = t;
      }
    }
    if (opts.reference) abs_err += std::abs(rep.poly(t) - opts.reference(t));
  }
  if (opts.reference) {
    rep.mean_abs_error = abs_err / opts.grid_points;
    double eps = 0.0;
    for (std::size_t k = 0; k < rep.nodes.size(); ++k)
      eps = std::max(eps, std::abs(opts.reference(rep.nodes[k]) - rep.readings[k]));
    rep.epsilon = eps;
  }
  return rep;
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string SensingReport::to_json() const {
  nlohmann::json j;
  j["n_qubits"] = n_qubits;
  j["degree"] = degree;
  j["shots"] = shots;
  j["seed"] = seed;
  j["nodes"] = nodes;
  j["readings"] = readings;
  j["poly"] = {{"degree", poly.degree}, {"a", poly.a}, {"b", poly.b}, {"c", poly.c}};
  nlohmann::json sens = nlohmann::json::array();
  for (double s : sensitivities) sens.push_back(finite_or_null(s));
  j["grid"] = grid;
  j["sensitivity"] = sens;
  j["derivative_floor"] = derivative_floor;
  j["min_node_slope"] = finite_or_null(min_node_slope);
  j["epsilon"] = epsilon ? nlohmann::json(*epsilon) : nlohmann::json(nullptr);
  j["mean_abs_error"] = mean_abs_error ? nlohmann::json(*mean_abs_error) : nlohmann::json(nullptr);
  j["sql"] = sql;
  j["hl"] = hl;
  j["min_sensitivity"] = finite_or_null(min_sensitivity);
  j["argmin_theta"] = argmin_theta;
  j["all_infinite"] = all_infinite;
  return j.dump(2);
}

std::string SensingReport::sensitivity_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "theta,sensitivity\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << grid[i] << ',';
    if (std::isfinite(sensitivities[i]))
      out << sensitivities[i];
    else
      out << "inf";
    out << '\n';
  }
  return out.str();
}

}  // namespace dqs
