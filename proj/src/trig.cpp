#include "dqs/trig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace dqs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t >= kTwoPi ? 0.0 : t;
}

double circular_distance(double x, double y) {
  const double d = std::abs(wrap(x) - wrap(y));
  return std::min(d, kTwoPi - d);
}

template <typename F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

}  // namespace

TrigPoly TrigPoly::zero(int degree) {
  TrigPoly p;
  p.degree = degree;
  p.a.assign(static_cast<std::size_t>(degree), 0.0);
  p.b.assign(static_cast<std::size_t>(degree), 0.0);
  return p;
}

double TrigPoly::operator()(double theta) const {
  double r = c;
  for (int s = 1; s <= degree; ++s)
    r += a[static_cast<std::size_t>(s - 1)] * std::cos(s * theta) + b[static_cast<std::size_t>(s - 1)] * std::sin(s * theta);
  return r;
}

double TrigPoly::derivative(double theta) const {
  double r = 0.0;
  for (int s = 1; s <= degree; ++s)
    r += s * (-a[static_cast<std::size_t>(s - 1)] * std::sin(s * theta) + b[static_cast<std::size_t>(s - 1)] * std::cos(s * theta));
  return r;
}

std::vector<double> uniform_nodes(int degree) {
  const int count = 2 * degree + 1;
  std::vector<double> nodes(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) nodes[static_cast<std::size_t>(k)] = kTwoPi * k / count;
  return nodes;
}

TrigPoly fit_trig(std::span<const double> readings, int degree) {
  if (degree < 0) throw std::invalid_argument("negative degree");
  const std::size_t count = static_cast<std::size_t>(2 * degree + 1);
  if (readings.size() != count)
    throw std::invalid_argument("fit_trig: expected " + std::to_string(count) + " readings, got " +
                                std::to_string(readings.size()));
  const auto nodes = uniform_nodes(degree);
  TrigPoly p = TrigPoly::zero(degree);
  for (std::size_t k = 0; k < count; ++k) p.c += readings[k];
  p.c /= static_cast<double>(count);
  const double scale = 2.0 / static_cast<double>(count);
  for (int s = 1; s <= degree; ++s) {
    double as = 0.0;
    double bs = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      as += readings[k] * std::cos(s * nodes[k]);
      bs += readings[k] * std::sin(s * nodes[k]);
    }
    p.a[static_cast<std::size_t>(s - 1)] = scale * as;
    p.b[static_cast<std::size_t>(s - 1)] = scale * bs;
  }
  return p;
}

std::vector<double> infer_theta(const TrigPoly& poly, double reading, const InferOptions& opts) {
  const int g = opts.grid_points;
  const double step = kTwoPi / g;
  auto residual = [&](double t) { return std::abs(poly(t) - reading); };

  std::vector<double> r(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) r[static_cast<std::size_t>(i)] = residual(step * i);
  auto at = [&](int i) { return r[static_cast<std::size_t>((i % g + g) % g)]; };

  std::vector<int> basins;
  for (int i = 0; i < g; ++i)
    if (at(i) < at(i - 1) && at(i) <= at(i + 1)) basins.push_back(i);
  if (basins.empty())
    basins.push_back(static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin()));

  std::vector<std::pair<double, double>> found;  // (residual, theta)
  for (int i : basins) {
    const double t = wrap(golden_section(residual, step * (i - 1), step * (i + 1), 1e-13));
    found.emplace_back(residual(t), t);
  }
  const double best = std::min_element(found.begin(), found.end())->first;
  std::erase_if(found, [&](const auto& f) { return f.first > best + opts.tolerance; });
  std::sort(found.begin(), found.end());

  std::vector<double> out;
  for (const auto& [res, t] : found) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](double u) { return circular_distance(u, t) < step; });
    if (!dup) out.push_back(t);
  }
  return out;
}

double sensitivity(const TrigPoly& poly, double theta, double derivative_floor) {
  const double slope = poly.derivative(theta);
  if (std::abs(slope) <= derivative_floor) return std::numeric_limits<double>::infinity();
  const double r = poly(theta);
  return std::max(0.0, 1.0 - r * r) / (slope * slope);
}

}  // namespace dqs
