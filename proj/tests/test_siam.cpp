#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "qsep/siam.hpp"
#include "test_support.hpp"

using namespace qsep;

namespace {

const double kPi = 3.14159265358979323846;

// Series evaluation of exp(-i H t) for a 2x2 complex matrix; the norms used
// in the tests are small enough for plain Taylor summation.
Matrix2cd expm_minus_iht(const Matrix2cd& h, double t) {
  const Matrix2cd a = Complex(0.0, -t) * h;
  Matrix2cd term = Matrix2cd::Identity();
  Matrix2cd sum = term;
  for (int k = 1; k < 60; ++k) {
    term = (term * a) / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-18) break;
  }
  return sum;
}

double weight_total(const std::vector<std::pair<double, double>>& w) {
  double s = 0.0;
  for (const auto& [omega, weight] : w) s += weight;
  return s;
}

}  // namespace

TEST_CASE("flat-band discretization carries its analytic record") {
  const double w = 20.0, t0 = 0.4;
  const int modes = 8;
  SIAMModel model = siam_build(1.3, w, modes, t0);
  CHECK(model.bath_energies.size() == modes);
  CHECK(model.couplings.size() == modes);
  const double de = w / modes;
  CHECK(model.bath_energies(0) ==
        doctest::Approx(1.3 - w / 2 + 0.5 * de).epsilon(1e-14));
  CHECK(model.bath_energies(modes - 1) ==
        doctest::Approx(1.3 + w / 2 - 0.5 * de).epsilon(1e-14));
  REQUIRE(model.analytic.has_value());
  CHECK(std::abs(model.analytic->D0 - modes / w) <= 1e-14);
  CHECK(std::abs(model.analytic->t0 - t0 * std::sqrt(de)) <= 1e-14);
  // Per-mode record: D0 * t_mode^2 collapses to the squared input amplitude.
  CHECK(std::abs(model.analytic->delta0 - t0 * t0) <= 1e-12);

  CHECK_THROWS_AS(siam_build(0.0, 10.0, 1, 0.1), InvalidInputError);
  CHECK_THROWS_AS(siam_build(0.0, -1.0, 8, 0.1), InvalidInputError);
}

TEST_CASE("model constructor validates shapes and the analytic record") {
  VectorXd e(3);
  e << -1.0, 0.0, 1.0;
  VectorXcd t(2);
  t << Complex(0.1, 0), Complex(0.2, 0);
  CHECK_THROWS_AS(SIAMModel(0.0, e, t), InvalidInputError);

  VectorXcd t3(3);
  t3 << Complex(0.1, 0), Complex(0.2, 0), Complex(0.3, 0);
  SIAMAnalytic bad{1.0, 0.5, 0.3};  // delta0 != D0 * t0^2
  CHECK_THROWS_AS(SIAMModel(0.0, e, t3, bad), InvalidInputError);
  SIAMAnalytic good{1.0, 0.5, 0.25};
  CHECK_NOTHROW(SIAMModel(0.0, e, t3, good));
}

TEST_CASE("decoupled impurity keeps all spectral weight on its own level") {
  SIAMModel model = siam_build(2.0, 10.0, 4, 0.0);
  auto weights = siam_spectral_weights(model);
  REQUIRE(static_cast<int>(weights.size()) == 5);
  CHECK(std::abs(weight_total(weights) - 1.0) <= 1e-12);
  int carriers = 0;
  for (const auto& [omega, weight] : weights) {
    if (weight > 0.0) {
      ++carriers;
      CHECK(std::abs(omega - 2.0) <= 1e-14);
      CHECK(std::abs(weight - 1.0) <= 1e-14);
    }
  }
  CHECK(carriers == 1);
}

TEST_CASE("single-mode weights match the two-level closed form") {
  VectorXd e(1);
  e << 1.0;
  VectorXcd t(1);
  t << Complex(0.7, 0.0);
  SIAMModel model(-0.5, e, t);
  auto weights = siam_spectral_weights(model);
  REQUIRE(weights.size() == 2);

  const double a = -0.5, b = 1.0, tc = 0.7;
  const double mid = 0.5 * (a + b);
  const double disc = std::sqrt(0.25 * (a - b) * (a - b) + tc * tc);
  const double lam[2] = {mid - disc, mid + disc};
  for (int k = 0; k < 2; ++k) {
    const double expected_w =
        tc * tc / (tc * tc + (lam[k] - a) * (lam[k] - a));
    CHECK(std::abs(weights[k].first - lam[k]) <= 1e-12);
    CHECK(std::abs(weights[k].second - expected_w) <= 1e-12);
  }
  CHECK(std::abs(weight_total(weights) - 1.0) <= 1e-12);
}

TEST_CASE("secular weights agree with the dense eigensolver route") {
  SIAMModel model = siam_build(0.7, 20.0, 50, 0.35);
  auto fast = siam_spectral_weights(model);
  auto dense = siam_spectral_weights_dense(model);
  REQUIRE(fast.size() == dense.size());
  REQUIRE(static_cast<int>(fast.size()) == 51);
  CHECK(std::abs(weight_total(fast) - 1.0) <= 1e-12);
  for (std::size_t k = 0; k < fast.size(); ++k) {
    CHECK(std::abs(fast[k].first - dense[k].first) <= 1e-11);
    CHECK(std::abs(fast[k].second - dense[k].second) <= 1e-10);
    CHECK(fast[k].second >= 0.0);
    if (k > 0) CHECK(fast[k].first >= fast[k - 1].first);
  }
}

TEST_CASE("degenerate poles and silent modes keep the level count and sum rule") {
  VectorXd e(4);
  e << 1.0, 1.0, 2.5, 3.0;
  VectorXcd t(4);
  t << Complex(0.3, 0), Complex(0.4, 0), Complex(0.0, 0), Complex(0.2, 0);
  SIAMModel model(0.0, e, t);
  auto fast = siam_spectral_weights(model);
  REQUIRE(static_cast<int>(fast.size()) == 5);
  CHECK(std::abs(weight_total(fast) - 1.0) <= 1e-12);

  auto dense = siam_spectral_weights_dense(model);
  for (std::size_t k = 0; k < fast.size(); ++k) {
    CHECK(std::abs(fast[k].first - dense[k].first) <= 1e-10);
    CHECK(std::abs(fast[k].second - dense[k].second) <= 1e-10);
  }
  // The decoupled directions show up as explicit zero-weight levels.
  int silent = 0;
  for (const auto& [omega, weight] : fast)
    if (weight == 0.0) ++silent;
  CHECK(silent == 2);
}

TEST_CASE("binned density validates its inputs") {
  std::vector<std::pair<double, double>> w{{0.0, 0.5}, {1.0, 0.5}};
  CHECK_THROWS_AS(binned_density(w, 0.0, 0.0), InvalidInputError);
  CHECK_THROWS_AS(binned_density(w, 0.0, 1.0, 2), InvalidInputError);
  CHECK_THROWS_AS(
      binned_density(std::vector<std::pair<double, double>>{{0.0, 1.0}}, 0.0,
                     1.0),
      InvalidInputError);
}

TEST_CASE("binned density reproduces a uniform spectral plateau") {
  // Dyadic grid so that bin-edge arithmetic stays exact: spacing 1/8 over
  // [-5, 5], every weight 0.0375, local cell 0.125 -> density 0.3 everywhere.
  std::vector<std::pair<double, double>> weights;
  for (int k = 0; k <= 80; ++k) {
    weights.emplace_back(-5.0 + 0.125 * k, 0.0375);
  }
  BinnedDensity density = binned_density(weights, 0.0, 0.5);
  CHECK(density.bin_width == doctest::Approx(5.0 / 61).epsilon(1e-14));
  REQUIRE(density.centers.size() == density.densities.size());
  REQUIRE(static_cast<int>(density.centers.size()) >= 30);
  for (std::size_t b = 0; b < density.densities.size(); ++b) {
    CHECK(std::abs(density.densities[b] - 0.3) <= 1e-12);
    CHECK(std::abs(density.centers[b]) <= 2.5);
  }
}

TEST_CASE("half width at half maximum interpolates a symmetric profile") {
  BinnedDensity tri;
  tri.bin_width = 0.25;
  for (int k = -12; k <= 12; ++k) {
    const double x = 0.25 * k;
    tri.centers.push_back(x);
    tri.densities.push_back(std::max(0.0, 1.0 - std::abs(x) / 2.0));
  }
  CHECK(hwhm_from_binned(tri) == doctest::Approx(1.0).epsilon(1e-12));

  BinnedDensity tiny;
  tiny.centers = {0.0, 1.0};
  tiny.densities = {1.0, 0.5};
  tiny.bin_width = 1.0;
  CHECK_THROWS_AS(hwhm_from_binned(tiny), NumericError);

  BinnedDensity flat;
  flat.centers = {-1.0, 0.0, 1.0};
  flat.densities = {0.9, 1.0, 0.9};
  flat.bin_width = 1.0;
  CHECK_THROWS_AS(hwhm_from_binned(flat), NumericError);
}

TEST_CASE("calibration locks the measured half-width onto the target") {
  const double target = 0.5;
  CalibratedSIAM cal = calibrate_siam(1.3, 20.0, 500, target);
  CHECK(std::abs(cal.measured_half_width - target) <= 1e-9);
  CHECK(cal.t0 > 0.0);
  // The tuned coupling stays near the golden-rule estimate sqrt(delta0/pi).
  CHECK(cal.t0 == doctest::Approx(std::sqrt(target / kPi)).epsilon(0.2));
  REQUIRE(cal.model.analytic.has_value());
  CHECK(std::abs(cal.model.analytic->delta0 - cal.t0 * cal.t0) <= 1e-12);

  CHECK_THROWS_AS(calibrate_siam(0.0, 20.0, 100, -1.0), InvalidInputError);
}

TEST_CASE("reciprocal fit recovers an exact Lorentzian") {
  const double center = 0.8, hw = 0.45;
  std::vector<double> xs, ys;
  for (int k = -20; k <= 20; ++k) {
    const double x = center + 0.1 * k;
    xs.push_back(x);
    ys.push_back((hw / kPi) / ((x - center) * (x - center) + hw * hw));
  }
  LorentzianFit fit = lorentzian_fit(xs, ys);
  CHECK(std::abs(fit.center - center) <= 1e-10);
  CHECK(std::abs(fit.half_width - hw) <= 1e-10);

  std::vector<double> flat(xs.size(), 0.25);
  CHECK_THROWS_AS(lorentzian_fit(xs, flat), NumericError);
  CHECK_THROWS_AS(lorentzian_fit({0.0, 1.0}, {1.0, 1.0}), InvalidInputError);
  std::vector<double> with_zero = ys;
  with_zero[3] = 0.0;
  CHECK_THROWS_AS(lorentzian_fit(xs, with_zero), InvalidInputError);
}

TEST_CASE("closed-form propagator has unit envelope decay") {
  VectorXd t(4);
  t << 0.0, 0.5, 2.0, 7.0;
  const double w0 = 1.3, d0 = 0.5;
  VectorXcd g = greens_time(w0, d0, t);
  CHECK(std::abs(g(0) - Complex(0.0, -1.0)) <= 1e-15);
  for (int k = 0; k < t.size(); ++k) {
    CHECK(std::abs(std::abs(g(k)) - std::exp(-d0 * t(k))) <= 1e-14);
    const Complex expected =
        Complex(0.0, -1.0) * std::exp(Complex(-d0 * t(k), -w0 * t(k)));
    CHECK(std::abs(g(k) - expected) <= 1e-14);
  }

  VectorXcd free = greens_time(w0, 0.0, t);
  for (int k = 0; k < t.size(); ++k) {
    CHECK(std::abs(std::abs(free(k)) - 1.0) <= 1e-14);
  }

  VectorXd bad(1);
  bad << -0.1;
  CHECK_THROWS_AS(greens_time(w0, d0, bad), InvalidInputError);
  CHECK_THROWS_AS(greens_time(w0, -0.5, t), InvalidInputError);
}

TEST_CASE("quadrature transform of the Lorentzian matches the closed form") {
  const double w0 = 1.3, d0 = 0.5;
  VectorXd t(3);
  t << 0.5, 5.0, 17.5;
  VectorXcd numeric = greens_transform_numeric(w0, d0, t);
  VectorXcd closed = greens_time(w0, d0, t);
  for (int k = 0; k < t.size(); ++k) {
    CHECK(std::abs(numeric(k) - closed(k)) <= 1e-6);
  }
  VectorXd bad(1);
  bad << -1.0;
  CHECK_THROWS_AS(greens_transform_numeric(w0, d0, bad), InvalidInputError);
  CHECK_THROWS_AS(greens_transform_numeric(w0, 0.0, t), InvalidInputError);
}

TEST_CASE("effective two-level model carries conjugate decay eigenvalues") {
  const double w0 = 1.3, d0 = 0.5;
  TwoLevelSpectrum spec = effective_two_level(w0, d0);
  CHECK(std::abs(spec.eigenvalues[0] - Complex(w0, d0)) <= 1e-12);
  CHECK(std::abs(spec.eigenvalues[1] - Complex(w0, -d0)) <= 1e-12);

  TwoLevelSpectrum degenerate = effective_two_level(w0, 0.0);
  CHECK(std::abs(degenerate.eigenvalues[0] - Complex(w0, 0.0)) <= 1e-12);
  CHECK(std::abs(degenerate.eigenvalues[1] - Complex(w0, 0.0)) <= 1e-12);
  CHECK_THROWS_AS(effective_two_level(w0, -0.1), InvalidInputError);
}

TEST_CASE("two-level matrix element matches a series matrix exponential") {
  const double w0 = 1.3, d0 = 0.5;
  EffectiveTwoLevel model{w0, d0};
  Matrix2cd h;
  h << Complex(w0, 0), Complex(d0, 0), Complex(-d0, 0), Complex(w0, 0);
  for (double t : {0.0, 0.3, 1.1, 2.4}) {
    const Matrix2cd u = expm_minus_iht(h, t);
    CHECK(std::abs(two_level_element_00(model, t) - u(0, 0)) <= 1e-12);
    const Complex expected =
        std::exp(Complex(0.0, -w0 * t)) * std::cosh(d0 * t);
    CHECK(std::abs(two_level_element_00(model, t) - expected) <= 1e-13);
  }
}

TEST_CASE("decaying eigenmode amplitude equals the impurity propagator") {
  const double w0 = 1.3, d0 = 0.5;
  EffectiveTwoLevel model{w0, d0};
  VectorXd t(3);
  t << 0.0, 1.5, 6.0;
  VectorXcd g = greens_time(w0, d0, t);
  for (int k = 0; k < t.size(); ++k) {
    const Complex mode = two_level_decaying_mode(model, t(k));
    CHECK(std::abs(mode - Complex(0.0, 1.0) * g(k)) <= 1e-14);
  }
}
