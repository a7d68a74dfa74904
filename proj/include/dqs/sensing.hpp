#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dqs/optics.hpp"
#include "dqs/pauli.hpp"
#include "dqs/trig.hpp"

namespace dqs {

// The encoding channel is exp(-i theta H / 2). With generator G = H / 2 the
// quantum Fisher information is 4 Var(G) = Var(H).

/// Applies exp(-i theta H / 2) as a product of per-term rotations.
QubitState evolve(const QubitState& state, const Hamiltonian& h, double theta);

/// <H^2> - <H>^2.
double qfi_pure(const QubitState& state, const Hamiltonian& h);

using DensityMatrix = Eigen::MatrixXcd;

/// 2 sum_{i != j} (b_i - b_j)^2 / (b_i + b_j) |<i|H/2|j>|^2 over the
/// eigenbasis of rho. Throws std::invalid_argument if rho is not Hermitian,
/// not unit trace, or not positive semidefinite (tolerance 1e-9).
double qfi_mixed(const DensityMatrix& rho, const Hamiltonian& h);

DensityMatrix density_matrix(const QubitState& state);

/// Tr(O rho_theta) for the evolved pure probe.
double response_exact(const QubitState& state, const Hamiltonian& h, const Observable& o, double theta);

/// Mean of `shots` +-1 outcomes with P(+1) = (1 + r) / 2.
double sample_mean(double r, std::uint64_t shots, std::uint64_t seed);

double sample_response(const QubitState& state, const Hamiltonian& h, const Observable& o, double theta,
                       std::uint64_t shots, std::uint64_t seed);

/// A sensing channel whose encoding Hamiltonian is hidden. Estimators only
/// get shot-averaged readings of a chosen observable.
class BlackBoxChannel {
 public:
  virtual ~BlackBoxChannel() = default;
  /// Shot-averaged reading of `o` on the probe after encoding `theta`.
  /// `shots == 0` requests the exact expectation value.
  virtual double query(const QubitState& probe, const Observable& o, double theta, std::uint64_t shots,
                       std::uint64_t seed) const = 0;
};

class HamiltonianChannel final : public BlackBoxChannel {
 public:
  explicit HamiltonianChannel(Hamiltonian h) : h_(std::move(h)) {}
  double query(const QubitState& probe, const Observable& o, double theta, std::uint64_t shots,
               std::uint64_t seed) const override;

 private:
  Hamiltonian h_;
};

struct SensingOptions {
  int grid_points = 512;
  double derivative_floor = kDefaultDerivativeFloor;
  /// Exact response for validation runs; enables epsilon and mean_abs_error.
  std::function<double(double)> reference;
};

struct SensingReport {
  int n_qubits = 0;
  int degree = 0;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  std::vector<double> nodes;
  std::vector<double> readings;
  TrigPoly poly;
  std::vector<double> grid;
  std::vector<double> sensitivities;
  double derivative_floor = kDefaultDerivativeFloor;
  /// Smallest |R'(theta_k)| of the fitted response over the nodes.
  double min_node_slope = 0.0;
  /// max_k |R(theta_k) - reading_k|, when a reference is available.
  std::optional<double> epsilon;
  /// Mean |R~ - R| over the sensitivity grid, when a reference is available.
  std::optional<double> mean_abs_error;
  double sql = 0.0;
  double hl = 0.0;
  /// Minimum over grid points with finite sensitivity and |R~| < 1.
  double min_sensitivity = 0.0;
  double argmin_theta = 0.0;
  bool all_infinite = false;

  std::string to_json() const;
  /// Two columns: theta, (delta theta)^2.
  std::string sensitivity_csv() const;
};

SensingReport run_sensing(const QubitState& probe, const BlackBoxChannel& channel, const Observable& o, int degree,
                          std::uint64_t shots, std::uint64_t seed, const SensingOptions& opts = {});

}  // namespace dqs
