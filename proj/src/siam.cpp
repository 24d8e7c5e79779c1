#include "qsep/siam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsep {

namespace {

constexpr double kWeightSumTol = 1e-12;

// Strictly increasing pole energies with positive |t|^2 after merging
// duplicates; zero-coupling modes are reattached as zero-weight eigenvalues.
struct MergedArrowhead {
  std::vector<double> poles;
  std::vector<double> t2;
  std::vector<double> silent;  // eigenvalues carrying zero impurity weight
};

MergedArrowhead merge_modes(const SIAMModel& model) {
  const int L = static_cast<int>(model.bath_energies.size());
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return model.bath_energies(a) < model.bath_energies(b);
  });

  MergedArrowhead out;
  for (int idx : order) {
    const double w = model.bath_energies(idx);
    const double c2 = std::norm(model.couplings(idx));
    if (c2 == 0.0) {
      out.silent.push_back(w);
      continue;
    }
    if (!out.poles.empty() && out.poles.back() == w) {
      out.t2.back() += c2;
      out.silent.push_back(w);  // degenerate direction decouples
    } else {
      out.poles.push_back(w);
      out.t2.push_back(c2);
    }
  }
  return out;
}

// Root of the secular function f(w) = w - omega_S - sum t2/(w - poles) in
// the open interval (lo, hi), with f(lo+) = -inf and f(hi-) = +inf.
double secular_root(double omega_s, const std::vector<double>& poles,
                    const std::vector<double>& t2, double lo, double hi) {
  const int n = static_cast<int>(poles.size());
  auto f = [&](double w, double& deriv) {
    double val = w - omega_s;
    deriv = 1.0;
    for (int r = 0; r < n; ++r) {
      const double d = w - poles[r];
      val -= t2[r] / d;
      deriv += t2[r] / (d * d);
    }
    return val;
  };
  double a = lo, b = hi;
  double x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    double deriv = 0.0;
    const double fx = f(x, deriv);
    if (fx > 0.0) {
      b = x;
    } else {
      a = x;
    }
    double xn = x - fx / deriv;  // Newton, safeguarded by the bracket
    if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
    if (std::abs(xn - x) <= 1e-15 * std::max(1.0, std::abs(x))) return xn;
    x = xn;
  }
  return x;
}

}  // namespace

SIAMModel::SIAMModel(double impurity_level, VectorXd energies, VectorXcd t,
                     std::optional<SIAMAnalytic> record)
    : omega_S(impurity_level),
      bath_energies(std::move(energies)),
      couplings(std::move(t)),
      analytic(std::move(record)) {
  if (bath_energies.size() != couplings.size()) {
    throw InvalidInputError(
        "SIAMModel: bath energies and couplings must have equal length");
  }
  if (analytic) {
    const double expected = analytic->D0 * analytic->t0 * analytic->t0;
    if (std::abs(analytic->delta0 - expected) >
        1e-12 * std::max(1.0, std::abs(expected))) {
      throw InvalidInputError("SIAMModel: analytic record must satisfy "
                              "delta0 = D0 * t0^2");
    }
  }
}

SIAMModel siam_build(double omega_S, double bandwidth, int modes, double t0) {
  if (modes < 2) throw InvalidInputError("siam_build: need at least 2 modes");
  if (!(bandwidth > 0.0)) {
    throw InvalidInputError("siam_build: bandwidth must be positive");
  }
  const double de = bandwidth / modes;
  VectorXd energies(modes);
  for (int l = 0; l < modes; ++l) {
    energies(l) = omega_S - bandwidth / 2.0 + (l + 0.5) * de;
  }
  const double t_mode = t0 * std::sqrt(de);
  VectorXcd couplings = VectorXcd::Constant(modes, Complex(t_mode, 0.0));
  SIAMAnalytic record;
  record.D0 = modes / bandwidth;
  record.t0 = t_mode;
  record.delta0 = record.D0 * t_mode * t_mode;  // = t0^2
  return SIAMModel(omega_S, std::move(energies), std::move(couplings), record);
}

std::vector<std::pair<double, double>> siam_spectral_weights(
    const SIAMModel& model) {
  const MergedArrowhead merged = merge_modes(model);
  std::vector<std::pair<double, double>> out;

  if (merged.poles.empty()) {
    out.emplace_back(model.omega_S, 1.0);
  } else {
    const int n = static_cast<int>(merged.poles.size());
    const double t_norm = std::sqrt(
        std::accumulate(merged.t2.begin(), merged.t2.end(), 0.0));
    // Outer brackets from the Gershgorin-style bound.
    const double lo0 =
        std::min(model.omega_S, merged.poles.front()) - t_norm - 1.0;
    const double hi0 =
        std::max(model.omega_S, merged.poles.back()) + t_norm + 1.0;
    for (int k = 0; k <= n; ++k) {
      const double lo = k == 0 ? lo0 : merged.poles[k - 1];
      const double hi = k == n ? hi0 : merged.poles[k];
      const double lambda =
          secular_root(model.omega_S, merged.poles, merged.t2, lo, hi);
      double denom = 1.0;
      for (int r = 0; r < n; ++r) {
        const double d = lambda - merged.poles[r];
        denom += merged.t2[r] / (d * d);
      }
      out.emplace_back(lambda, 1.0 / denom);
    }
  }
  for (double w : merged.silent) out.emplace_back(w, 0.0);
  std::sort(out.begin(), out.end());

  double total = 0.0;
  for (const auto& [omega, weight] : out) total += weight;
  if (std::abs(total - 1.0) > kWeightSumTol) {
    throw NumericError("siam_spectral_weights: weights do not sum to 1");
  }
  return out;
}

std::vector<std::pair<double, double>> siam_spectral_weights_dense(
    const SIAMModel& model) {
  const int L = static_cast<int>(model.bath_energies.size());
  MatrixXcd h = MatrixXcd::Zero(L + 1, L + 1);
  h(0, 0) = model.omega_S;
  for (int l = 0; l < L; ++l) {
    h(l + 1, l + 1) = model.bath_energies(l);
    h(l + 1, 0) = model.couplings(l);
    h(0, l + 1) = std::conj(model.couplings(l));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("siam_spectral_weights_dense: eigensolver failed");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(L + 1);
  for (int k = 0; k <= L; ++k) {
    out.emplace_back(es.eigenvalues()(k), std::norm(es.eigenvectors()(0, k)));
  }
  return out;
}

BinnedDensity binned_density(
    const std::vector<std::pair<double, double>>& weights, double omega_S,
    double delta0, int bins) {
  if (!(delta0 > 0.0)) {
    throw InvalidInputError("binned_density: delta0 must be positive");
  }
  if (bins < 3) throw InvalidInputError("binned_density: need at least 3 bins");
  if (weights.size() < 2) {
    throw InvalidInputError("binned_density: need at least 2 eigenvalues");
  }
  std::vector<std::pair<double, double>> sorted = weights;
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());

  // Local spectral cell of each eigenvalue: the half-gap neighborhood.
  std::vector<double> cell(n);
  for (int k = 1; k + 1 < n; ++k) {
    cell[k] = 0.5 * (sorted[k + 1].first - sorted[k - 1].first);
  }
  cell[0] = sorted[1].first - sorted[0].first;
  cell[n - 1] = sorted[n - 1].first - sorted[n - 2].first;

  const double span = 5.0 * delta0;
  const double lo = omega_S - span;
  const double bin_width = 2.0 * span / bins;

  std::vector<double> wsum(bins, 0.0), csum(bins, 0.0);
  for (int k = 0; k < n; ++k) {
    const int b = static_cast<int>(std::floor((sorted[k].first - lo) /
                                              bin_width));
    if (b < 0 || b >= bins) continue;
    wsum[b] += sorted[k].second;
    csum[b] += cell[k];
  }

  BinnedDensity out;
  out.bin_width = bin_width;
  for (int b = 0; b < bins; ++b) {
    if (csum[b] <= 0.0) continue;
    out.centers.push_back(lo + (b + 0.5) * bin_width);
    out.densities.push_back(wsum[b] / csum[b]);
  }
  return out;
}

double hwhm_from_binned(const BinnedDensity& density) {
  const auto& x = density.centers;
  const auto& y = density.densities;
  const int n = static_cast<int>(x.size());
  if (n < 3) throw NumericError("hwhm_from_binned: too few nonempty bins");
  const int peak = static_cast<int>(
      std::max_element(y.begin(), y.end()) - y.begin());
  const double half = y[peak] / 2.0;

  auto interpolate = [&](int below, int above) {
    return x[below] + (half - y[below]) * (x[above] - x[below]) /
                          (y[above] - y[below]);
  };
  int right = -1;
  for (int j = peak + 1; j < n; ++j) {
    if (y[j] < half) {
      right = j;
      break;
    }
  }
  int left = -1;
  for (int j = peak - 1; j >= 0; --j) {
    if (y[j] < half) {
      left = j;
      break;
    }
  }
  if (right < 0 || left < 0) {
    throw NumericError("hwhm_from_binned: no half-maximum crossing found");
  }
  const double r = interpolate(right - 1, right);
  const double l = interpolate(left, left + 1);
  return 0.5 * (r - l);
}

CalibratedSIAM calibrate_siam(double omega_S, double bandwidth, int modes,
                              double delta0_target) {
  if (!(delta0_target > 0.0)) {
    throw InvalidInputError("calibrate_siam: delta0 target must be positive");
  }
  auto measure = [&](double t0) {
    const SIAMModel model = siam_build(omega_S, bandwidth, modes, t0);
    const BinnedDensity density =
        binned_density(siam_spectral_weights(model), omega_S, delta0_target);
    return hwhm_from_binned(density) - delta0_target;
  };

  double a = std::sqrt(delta0_target / M_PI);  // golden-rule start
  double fa = measure(a);
  double b = 0.98 * a;
  double fb = measure(b);
  for (int it = 0; it < 60; ++it) {
    if (std::abs(fb) < 1e-10) {
      CalibratedSIAM out{siam_build(omega_S, bandwidth, modes, b), b,
                         fb + delta0_target};
      return out;
    }
    if (fb == fa) break;
    double next = b - fb * (b - a) / (fb - fa);
    if (!(next > 0.0)) next = 0.5 * b;
    a = b;
    fa = fb;
    b = next;
    fb = measure(b);
  }
  throw ConvergenceError("calibrate_siam: secant iteration failed to lock the "
                         "measured half-width onto the target");
}

LorentzianFit lorentzian_fit(const std::vector<double>& centers,
                             const std::vector<double>& densities) {
  if (centers.size() != densities.size() || centers.size() < 3) {
    throw InvalidInputError("lorentzian_fit: need at least 3 points");
  }
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (!(densities[k] > 0.0)) {
      throw InvalidInputError("lorentzian_fit: densities must be positive");
    }
    const Eigen::Vector3d row(centers[k] * centers[k], centers[k], 1.0);
    normal += row * row.transpose();
    rhs += row / densities[k];
  }
  const Eigen::Vector3d coef = normal.ldlt().solve(rhs);
  if (!(coef(0) > 0.0)) {
    throw NumericError("lorentzian_fit: reciprocal fit is not convex");
  }
  LorentzianFit out;
  out.half_width = M_PI / coef(0);
  out.center = -coef(1) / (2.0 * coef(0));
  return out;
}

VectorXcd greens_time(double omega_S, double delta0, const VectorXd& t_grid) {
  if (delta0 < 0.0) {
    throw InvalidInputError("greens_time: delta0 must be nonnegative");
  }
  VectorXcd g(t_grid.size());
  for (int k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid(k);
    if (t < 0.0) throw InvalidInputError("greens_time: negative time");
    g(k) = Complex(0.0, -1.0) * std::exp(Complex(-delta0 * t, -omega_S * t));
  }
  return g;
}

VectorXcd greens_transform_numeric(double omega_S, double delta0,
                                   const VectorXd& t_grid) {
  if (!(delta0 > 0.0)) {
    throw InvalidInputError(
        "greens_transform_numeric: delta0 must be positive");
  }
  const double du = delta0 / 4.0;
  const double cutoff = 2e6 * delta0;
  const long n = static_cast<long>(cutoff / du);

  // A0(u) = (1/pi) delta0 / (u^2 + delta0^2) at midpoint nodes, fixed once.
  std::vector<double> a0(n);
  for (long k = 0; k < n; ++k) {
    const double u = (k + 0.5) * du;
    a0[k] = (delta0 / M_PI) / (u * u + delta0 * delta0);
  }

  VectorXcd g(t_grid.size());
  for (int j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid(j);
    if (t < 0.0) {
      throw InvalidInputError("greens_transform_numeric: negative time");
    }
    // 2 * int_0^inf A0(u) cos(ut) du by midpoint sum with a cosine
    // three-term recurrence over the nodes u_k = (k + 1/2) du.
    const double theta = du * t;
    const double twoc = 2.0 * std::cos(theta);
    double c = std::cos(0.5 * theta);
    double prev = c;  // cos(-theta/2) = cos(theta/2)
    double sum = 0.0;
    for (long k = 0; k < n; ++k) {
      sum += a0[k] * c;
      const double next = twoc * c - prev;
      prev = c;
      c = next;
    }
    const double integral = 2.0 * du * sum;
    g(j) = Complex(0.0, -1.0) * integral *
           std::exp(Complex(0.0, -omega_S * t));
  }
  return g;
}

TwoLevelSpectrum effective_two_level(double omega_S, double delta0) {
  if (delta0 < 0.0) {
    throw InvalidInputError("effective_two_level: delta0 must be nonnegative");
  }
  Matrix2cd h;
  h << Complex(omega_S, 0.0), Complex(delta0, 0.0), Complex(-delta0, 0.0),
      Complex(omega_S, 0.0);
  Eigen::ComplexEigenSolver<Matrix2cd> es(h, false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("effective_two_level: eigensolver failed");
  }
  std::array<Complex, 2> vals{es.eigenvalues()(0), es.eigenvalues()(1)};
  if (vals[0].imag() < vals[1].imag()) std::swap(vals[0], vals[1]);
  const Complex expected_plus(omega_S, delta0);
  const Complex expected_minus(omega_S, -delta0);
  if (std::abs(vals[0] - expected_plus) > 1e-12 ||
      std::abs(vals[1] - expected_minus) > 1e-12) {
    throw ConsistencyError(
        "effective_two_level: eigenvalues deviate from omega_S +/- i delta0");
  }
  TwoLevelSpectrum out;
  out.model = EffectiveTwoLevel{omega_S, delta0};
  out.eigenvalues = vals;
  return out;
}

Complex two_level_element_00(const EffectiveTwoLevel& model, double t) {
  return std::exp(Complex(0.0, -model.omega_S * t)) * std::cosh(model.delta0 * t);
}

Complex two_level_decaying_mode(const EffectiveTwoLevel& model, double t) {
  return std::exp(Complex(-model.delta0 * t, -model.omega_S * t));
}

}  // namespace qsep
