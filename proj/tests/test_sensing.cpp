#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dqs/pipeline.hpp"
#include "dqs/random.hpp"
#include "dqs/sensing.hpp"
#include "dqs/trig.hpp"

using namespace dqs;

namespace {

constexpr double kPi = std::numbers::pi;

QubitState random_state(Rng& rng, int n) {
  std::vector<Amplitude> v(std::size_t{1} << n);
  for (auto& a : v) a = {uniform_real(rng, -1, 1), uniform_real(rng, -1, 1)};
  return QubitState::from_amplitudes(v);
}

QubitState ghz(int n) {
  std::vector<Amplitude> v(std::size_t{1} << n, 0.0);
  v.front() = v.back() = 1.0;
  return QubitState::from_amplitudes(v);
}

QubitState ghz8_probe() { return postselect(run_setup(golden_cases()[0].setup)); }

}  // namespace

TEST(Pauli, CommutationAndAction) {
  EXPECT_TRUE(PauliString("XX").commutes_with(PauliString("ZZ")));
  EXPECT_FALSE(PauliString("XI").commutes_with(PauliString("ZI")));
  EXPECT_TRUE(PauliString("XY").commutes_with(PauliString("YX")));
  EXPECT_THROW(PauliString("XQ"), std::invalid_argument);
  // Y|0> = i|1>.
  auto out = PauliString("Y").apply({1.0, 0.0});
  EXPECT_NEAR(std::abs(out[1] - Amplitude(0, 1)), 0.0, 1e-15);
  EXPECT_THROW(Hamiltonian("bad", {PauliString("XI"), PauliString("ZI")}), std::invalid_argument);
}

TEST(Pauli, ResponseDegrees) {
  EXPECT_EQ(Hamiltonian::sum_z(8).response_degree(), 8);
  EXPECT_EQ(Hamiltonian::sum_x(4).response_degree(), 4);
  EXPECT_EQ(Hamiltonian::xx_pairs(4).response_degree(), 4);
}

TEST(Qfi, KnownStates) {
  EXPECT_NEAR(qfi_pure(ghz(4), Hamiltonian::sum_z(4)), 16.0, 1e-12);
  EXPECT_NEAR(qfi_pure(ghz(8), Hamiltonian::sum_z(8)), 64.0, 1e-12);
  std::vector<Amplitude> plus(16, 0.25);
  EXPECT_NEAR(qfi_pure(QubitState::from_amplitudes(plus), Hamiltonian::sum_z(4)), 4.0, 1e-12);
  std::vector<Amplitude> zero(16, 0.0);
  zero[0] = 1.0;
  EXPECT_NEAR(qfi_pure(QubitState::from_amplitudes(zero), Hamiltonian::sum_z(4)), 0.0, 1e-12);
}

TEST(Qfi, MixedMatchesPureOnRandomStates) {
  Rng rng(17);
  const char* tags[] = {"sumZ", "sumX", "xxPairs"};
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 3;
    const auto h = Hamiltonian::from_tag(tags[t % 3], n);
    const auto s = random_state(rng, n);
    EXPECT_NEAR(qfi_mixed(density_matrix(s), h), qfi_pure(s, h), 1e-8);
  }
}

TEST(Qfi, MixedStatesAndValidation) {
  // Equal mixture of |0000> and |1111> carries no phase information.
  DensityMatrix rho = DensityMatrix::Zero(16, 16);
  rho(0, 0) = rho(15, 15) = 0.5;
  EXPECT_NEAR(qfi_mixed(rho, Hamiltonian::sum_z(4)), 0.0, 1e-12);
  DensityMatrix bad = DensityMatrix::Zero(4, 4);
  bad(0, 0) = 1.5;
  bad(1, 1) = -0.5;
  EXPECT_THROW(qfi_mixed(bad, Hamiltonian::sum_z(2)), std::invalid_argument);
  bad(0, 0) = 0.5;
  bad(1, 1) = 0.25;
  EXPECT_THROW(qfi_mixed(bad, Hamiltonian::sum_z(2)), std::invalid_argument);
}

TEST(Evolve, GroupPropertyAndNorm) {
  Rng rng(2);
  for (const char* tag : {"sumZ", "sumX", "xxPairs"}) {
    const auto h = Hamiltonian::from_tag(tag, 4);
    const auto s = random_state(rng, 4);
    const double a = uniform_real(rng, -3, 3), b = uniform_real(rng, -3, 3);
    const auto lhs = evolve(evolve(s, h, a), h, b);
    const auto rhs = evolve(s, h, a + b);
    double norm = 0.0;
    for (std::size_t i = 0; i < lhs.dim(); ++i) {
      EXPECT_NEAR(std::abs(lhs.amplitudes[i] - rhs.amplitudes[i]), 0.0, 1e-10);
      norm += std::norm(lhs.amplitudes[i]);
    }
    EXPECT_NEAR(norm, 1.0, 1e-12);
  }
}

TEST(Trig, InterpolationIsExactOnRandomPolynomials) {
  Rng rng(4);
  for (int n = 0; n <= 8; ++n) {
    TrigPoly p = TrigPoly::zero(n);
    p.c = uniform_real(rng, -1, 1);
    for (int s = 0; s < n; ++s) {
      p.a[static_cast<std::size_t>(s)] = uniform_real(rng, -1, 1);
      p.b[static_cast<std::size_t>(s)] = uniform_real(rng, -1, 1);
    }
    std::vector<double> readings;
    for (double t : uniform_nodes(n)) readings.push_back(p(t));
    const auto fit = fit_trig(readings, n);
    EXPECT_NEAR(fit.c, p.c, 1e-12);
    for (int s = 0; s < n; ++s) {
      EXPECT_NEAR(fit.a[static_cast<std::size_t>(s)], p.a[static_cast<std::size_t>(s)], 1e-12);
      EXPECT_NEAR(fit.b[static_cast<std::size_t>(s)], p.b[static_cast<std::size_t>(s)], 1e-12);
    }
  }
  EXPECT_THROW(fit_trig(std::vector<double>(4, 0.0), 2), std::invalid_argument);
}

TEST(Trig, InferenceFindsEveryPreimage) {
  TrigPoly p = TrigPoly::zero(8);
  p.a[7] = 1.0;
  const auto roots = infer_theta(p, 0.3);
  ASSERT_EQ(roots.size(), 16u);
  for (double t : roots) EXPECT_NEAR(std::cos(8 * t), 0.3, 1e-9);
}

TEST(Trig, SensitivityOfCosineIsInverseSquare) {
  for (int n : {1, 4, 8}) {
    TrigPoly p = TrigPoly::zero(n);
    const double g = 0.37;
    p.a[static_cast<std::size_t>(n - 1)] = std::cos(g);
    p.b[static_cast<std::size_t>(n - 1)] = -std::sin(g);
    for (double t = 0.01; t < 2 * kPi; t += 0.173) {
      const double s = sensitivity(p, t);
      if (std::isfinite(s)) EXPECT_NEAR(s, 1.0 / (n * n), 1e-9);
    }
  }
  EXPECT_TRUE(std::isinf(sensitivity(TrigPoly::zero(2), 0.4)));
}

TEST(Sensing, ExactGhzEightResponse) {
  const auto probe = ghz8_probe();
  const auto h = Hamiltonian::sum_z(8);
  const HamiltonianChannel channel(h);
  const auto obs = Observable::prod_x(8);
  SensingOptions opts;
  opts.reference = [&](double t) { return response_exact(probe, h, obs, t); };
  const auto r = run_sensing(probe, channel, obs, 8, 0, 1, opts);
  // Only the order-8 harmonic survives.
  EXPECT_NEAR(r.poly.c, 0.0, 1e-12);
  for (int s = 0; s < 7; ++s) {
    EXPECT_NEAR(r.poly.a[static_cast<std::size_t>(s)], 0.0, 1e-12);
    EXPECT_NEAR(r.poly.b[static_cast<std::size_t>(s)], 0.0, 1e-12);
  }
  EXPECT_NEAR(std::hypot(r.poly.a[7], r.poly.b[7]), 1.0, 1e-12);
  EXPECT_NEAR(r.min_sensitivity, 1.0 / 64, 1e-9);
  EXPECT_NEAR(r.sql, 0.125, 1e-15);
  EXPECT_NEAR(r.hl, 1.0 / 64, 1e-15);
  ASSERT_TRUE(r.mean_abs_error.has_value());
  EXPECT_LT(*r.mean_abs_error, 1e-12);
}

TEST(Sensing, SamplingIsSeededAndUnbiased) {
  EXPECT_EQ(sample_mean(0.3, 1000, 5), sample_mean(0.3, 1000, 5));
  EXPECT_NE(sample_mean(0.3, 1000, 5), sample_mean(0.3, 1000, 6));
  EXPECT_EQ(sample_mean(1.0, 100, 1), 1.0);
  EXPECT_EQ(sample_mean(-1.0, 100, 1), -1.0);
  EXPECT_NEAR(sample_mean(0.3, 400000, 9), 0.3, 0.01);
}

TEST(Sensing, ReportSerializesInfinitiesAsNull) {
  std::vector<Amplitude> zero(4, 0.0);
  zero[0] = 1.0;
  const auto probe = QubitState::from_amplitudes(zero);
  const HamiltonianChannel channel(Hamiltonian::sum_z(2));
  const auto r = run_sensing(probe, channel, Observable::prod_x(2), 2, 0, 0);
  EXPECT_TRUE(r.all_infinite);
  EXPECT_NE(r.to_json().find("null"), std::string::npos);
  EXPECT_NE(r.sensitivity_csv().find("inf"), std::string::npos);
}
