#pragma once

#include <span>
#include <vector>

namespace dqs {

/// R(theta) = c + sum_{s=1..n} a_s cos(s theta) + b_s sin(s theta).
/// a[s-1] and b[s-1] hold the order-s coefficients.
struct TrigPoly {
  int degree = 0;
  std::vector<double> a;
  std::vector<double> b;
  double c = 0.0;

  static TrigPoly zero(int degree);
  double operator()(double theta) const;
  double derivative(double theta) const;
};

/// theta_k = 2 pi (k-1) / (2n+1), k = 1..2n+1.
std::vector<double> uniform_nodes(int degree);

/// Interpolates readings taken at uniform_nodes(degree) using discrete
/// orthogonality of the trigonometric basis. Exact for any polynomial of
/// degree <= `degree`. Throws std::invalid_argument on a wrong reading count.
TrigPoly fit_trig(std::span<const double> readings, int degree);

struct InferOptions {
  int grid_points = 1 << 14;
  double tolerance = 1e-6;
};

/// All near-global minimizers of |poly(theta) - reading| on [0, 2 pi), sorted
/// by residual then by theta. A dense grid scan locates basins; golden-section
/// search refines each.
std::vector<double> infer_theta(const TrigPoly& poly, double reading, const InferOptions& opts = {});

inline constexpr double kDefaultDerivativeFloor = 1e-9;

/// Single-shot error-propagation sensitivity (1 - R^2) / R'^2 for a +-1
/// observable. Returns +infinity where |R'| <= floor. The numerator is clamped
/// at zero where a noisy fit overshoots |R| = 1.
double sensitivity(const TrigPoly& poly, double theta, double derivative_floor = kDefaultDerivativeFloor);

}  // namespace dqs
