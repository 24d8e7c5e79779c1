#include "qsep/weakcoupling.hpp"

#include <cmath>

namespace qsep {

namespace {

double blocks_range(const ProjectionBlocks& blocks) {
  auto [lo, hi] = universe_bounds(blocks);
  return std::max(hi - lo, 1e-12 * std::max({std::abs(lo), std::abs(hi), 1.0}));
}

void require_nondegenerate(const EigenSystem& statics, double range) {
  for (int s = 1; s < statics.values.size(); ++s) {
    if (statics.values(s) - statics.values(s - 1) < 1e-8 * range) {
      throw InvalidInputError(
          "weak-coupling expansion requires a non-degenerate static spectrum");
    }
  }
}

}  // namespace

LorentzianModel::LorentzianModel(double center, double hw, double omega_cutoff)
    : omega_S(center), half_width(hw), cutoff(omega_cutoff) {
  if (!(half_width > 0.0)) {
    throw InvalidInputError("LorentzianModel: half_width must be positive");
  }
  if (!(cutoff > half_width)) {
    throw InvalidInputError("LorentzianModel: cutoff must exceed half_width");
  }
}

double first_order_eigenvalue(const ProjectionBlocks& blocks, int static_index,
                              double epsilon) {
  const EigenSystem statics = static_system(blocks);
  if (static_index < 0 || static_index >= statics.values.size()) {
    throw InvalidInputError("first_order_eigenvalue: static index out of range");
  }
  const double range = blocks_range(blocks);
  require_nondegenerate(statics, range);

  const double omega_s = statics.values(static_index);
  const VectorXcd s_vec = statics.vectors.col(static_index);
  if (epsilon == 0.0) return omega_s;

  double omega = omega_s;
  const double tol = 1e-12 * range;
  for (int it = 0; it < 200; ++it) {
    const MatrixXcd m = schur_M(blocks, omega);  // throws inside pole windows
    const double m_ss = s_vec.dot(m * s_vec).real();
    const double update = 0.5 * (omega_s + epsilon * m_ss - omega);
    omega += update;
    if (std::abs(update) <= tol) return omega;
  }
  throw ConvergenceError("first_order_eigenvalue: damped iteration stalled");
}

VectorXcd lippmann_schwinger_state(const ProjectionBlocks& blocks,
                                   int static_index, double epsilon) {
  const EigenSystem statics = static_system(blocks);
  if (static_index < 0 || static_index >= statics.values.size()) {
    throw InvalidInputError(
        "lippmann_schwinger_state: static index out of range");
  }
  const double range = blocks_range(blocks);
  require_nondegenerate(statics, range);

  VectorXcd state = statics.vectors.col(static_index);
  if (epsilon == 0.0) return state;

  const double omega_lambda =
      first_order_eigenvalue(blocks, static_index, epsilon);
  const MatrixXcd m = schur_M(blocks, omega_lambda);
  const double omega_s = statics.values(static_index);
  for (int sp = 0; sp < statics.values.size(); ++sp) {
    if (sp == static_index) continue;
    const double gap = omega_s - statics.values(sp);
    if (std::abs(gap) < 1e-8 * range) {
      throw NumericError(
          "lippmann_schwinger_state: near-degenerate denominator");
    }
    const Complex m_sp_s =
        statics.vectors.col(sp).dot(m * statics.vectors.col(static_index));
    state += (epsilon * m_sp_s / gap) * statics.vectors.col(sp);
  }
  return state / state.norm();
}

double slope_rpa(const ProjectionBlocks& blocks, const CouplingKernel& kernel,
                 int static_index, double omega_lambda, double epsilon) {
  if (blocks.C.norm() == 0.0) return 0.0;
  const EigenSystem statics = static_system(blocks);
  if (static_index < 0 || static_index >= statics.values.size()) {
    throw InvalidInputError("slope_rpa: static index out of range");
  }
  const double k_ss =
      kernel.K_in_static_basis(static_index, static_index).real();
  if (k_ss < 1e-14) {
    throw NumericError("slope_rpa: vanishing diagonal kernel element K_SS");
  }
  const MatrixXcd m = schur_M(blocks, omega_lambda);
  const VectorXcd s_vec = statics.vectors.col(static_index);
  const double m_ss = s_vec.dot(m * s_vec).real();
  return epsilon * m_ss * m_ss / k_ss;
}

double lorentzian_weight(const LorentzianModel& model, double omega) {
  const double u = omega - model.omega_S;
  if (std::abs(u) >= model.cutoff) {
    throw InvalidInputError("lorentzian_weight: omega outside the cutoff");
  }
  const double hw = model.half_width;
  return 1.0 / (M_PI * hw * (1.0 + u * u / (hw * hw)));
}

}  // namespace qsep
