#pragma once

#include "qsep/renorm.hpp"

namespace qsep {

// =========================================================================
// Weak-coupling approximations: perturbative eigenpairs, the diagonal
// (RPA-style) slope estimate, and the Lorentzian weight-factor profile.
// =========================================================================

// Lorentzian profile for the weight factor near a static level.
struct LorentzianModel {
  double omega_S = 0.0;    // center
  double half_width = 0.0; // sqrt(eps * K_SS)
  double cutoff = 0.0;     // Omega > half_width

  LorentzianModel(double center, double hw, double omega_cutoff);
};

// Solves the implicit first-order equation w = w_S + eps * M_SS(w) by
// damped iteration (damping 0.5, at most 200 steps) started from w_S.
double first_order_eigenvalue(const ProjectionBlocks& blocks, int static_index,
                              double epsilon);

// First-order (Lippmann-Schwinger-like) renormalized eigenvector:
// |R> ~ |S> + eps sum_{S'!=S} <S'|M(w_lambda)|S> / (w_S - w_S') |S'>,
// normalized.
VectorXcd lippmann_schwinger_state(const ProjectionBlocks& blocks,
                                   int static_index, double epsilon);

// Diagonal-dominant approximation to minus the branch slope:
// eps * M_SS(w_lambda)^2 / K_SS.  Returns 0 when the coupling block is zero.
double slope_rpa(const ProjectionBlocks& blocks, const CouplingKernel& kernel,
                 int static_index, double omega_lambda, double epsilon);

// Normalized Lorentzian weight profile W~(w - w_S); valid inside the cutoff.
double lorentzian_weight(const LorentzianModel& model, double omega);

}  // namespace qsep
