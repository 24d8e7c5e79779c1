#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "qsep/hilbert.hpp"

namespace qsep {

// =========================================================================
// Finite-bath resonant-level model: spectral weights, Lorentzian
// convergence, and time-domain Green's functions.
// =========================================================================

// Analytic continuum-limit record attached to a discretized model.
struct SIAMAnalytic {
  double D0 = 0.0;     // flat density of states
  double t0 = 0.0;     // per-mode coupling
  double delta0 = 0.0; // D0 * t0^2
};

struct SIAMModel {
  double omega_S = 0.0;        // impurity level
  VectorXd bath_energies;      // omega_l
  VectorXcd couplings;         // t_{Sl}
  std::optional<SIAMAnalytic> analytic;

  SIAMModel(double impurity_level, VectorXd energies, VectorXcd t,
            std::optional<SIAMAnalytic> record = std::nullopt);
};

// Uniform flat-band discretization over [omega_S - W/2, omega_S + W/2] with
// per-mode coupling t_l = t0 * sqrt(W/L).  The analytic record stores the
// per-mode values, so delta0 = D0 * t_l^2 = t0^2; the measured Lorentzian
// half-width of the spectral function converges to pi * t0^2
// (width_convention "golden_rule_pi").  Use calibrate_siam to hit a target
// half-width exactly.
SIAMModel siam_build(double omega_S, double bandwidth, int modes, double t0);

// Impurity spectral weights |<impurity|lambda>|^2 of the (L+1)x(L+1)
// single-particle matrix [[omega_S, t^dag],[t, diag(omega_l)]], sorted by
// eigenvalue.  Solved through the arrowhead secular equation
// f(w) = w - omega_S - sum |t_l|^2/(w - omega_l), one root per pole gap.
std::vector<std::pair<double, double>> siam_spectral_weights(
    const SIAMModel& model);

// Dense-eigensolver reference for cross-checking the secular route.
std::vector<std::pair<double, double>> siam_spectral_weights_dense(
    const SIAMModel& model);

// Weights binned into a density estimate over |omega - omega_S| <= 5*delta0.
// Each bin reports sum(weights) / sum(local spectral cells), where a cell is
// the half-gap neighborhood of an eigenvalue; empty bins are skipped.
struct BinnedDensity {
  std::vector<double> centers;
  std::vector<double> densities;
  double bin_width = 0.0;
};
BinnedDensity binned_density(
    const std::vector<std::pair<double, double>>& weights, double omega_S,
    double delta0, int bins = 61);

// Half width at half maximum of a binned density, by linear interpolation of
// the two half-peak crossings.
double hwhm_from_binned(const BinnedDensity& density);

// Tunes t0 by secant iteration until the measured half-width of the binned
// spectral density equals delta0_target.
struct CalibratedSIAM {
  SIAMModel model;
  double t0 = 0.0;
  double measured_half_width = 0.0;
};
CalibratedSIAM calibrate_siam(double omega_S, double bandwidth, int modes,
                              double delta0_target);

// Least-squares Lorentzian fit through the reciprocal density
// 1/A = a w^2 + b w + c, giving half_width = pi / a, center = -b / (2a).
struct LorentzianFit {
  double center = 0.0;
  double half_width = 0.0;
};
LorentzianFit lorentzian_fit(const std::vector<double>& centers,
                             const std::vector<double>& densities);

// Closed-form retarded impurity Green's function in the continuum limit:
// G(t) = -i exp(-i omega_S t - delta0 t) for t >= 0.
VectorXcd greens_time(double omega_S, double delta0, const VectorXd& t_grid);

// Quadrature inverse Fourier transform of the Lorentzian spectral function,
// G(t) = -i * int A(w) e^{-iwt} dw, for cross-checking greens_time.
VectorXcd greens_transform_numeric(double omega_S, double delta0,
                                   const VectorXd& t_grid);

// Effective non-Hermitian two-level model [[omega_S, delta0],
// [-delta0, omega_S]] with eigenvalues omega_S +/- i delta0.
struct EffectiveTwoLevel {
  double omega_S = 0.0;
  double delta0 = 0.0;
};
struct TwoLevelSpectrum {
  EffectiveTwoLevel model;
  std::array<Complex, 2> eigenvalues;  // omega_S + i delta0, omega_S - i delta0
};
TwoLevelSpectrum effective_two_level(double omega_S, double delta0);

// Literal (0,0) element of exp(-i H_eff t): e^{-i omega_S t} cosh(delta0 t).
Complex two_level_element_00(const EffectiveTwoLevel& model, double t);

// Amplitude of the decaying eigenmode: e^{-i omega_S t - delta0 t}.
Complex two_level_decaying_mode(const EffectiveTwoLevel& model, double t);

}  // namespace qsep
