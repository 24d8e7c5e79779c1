#pragma once

#include "qsep/hilbert.hpp"

namespace qsep {

// =========================================================================
// Reduced density matrices and entanglement-entropy bounds
// =========================================================================

// Density matrix of the subsystem of interest after tracing out the bath.
struct ReducedDensity {
  MatrixXcd matrix;          // D_SOI x D_SOI, Hermitian, PSD, unit trace
  int source_eig_index = 0;  // which eigenstate it came from

  ReducedDensity(MatrixXcd m, int eig_index);
};

// Partial trace of |lambda><lambda| over the bath tensor factor.
ReducedDensity reduce(const ManyBodyOperator& h, int eig_index);

// Raw partial traces of an arbitrary pure state (no eigensolve needed).
MatrixXcd soi_density(const VectorXcd& state, const BipartiteBasis& basis);
MatrixXcd bath_density(const VectorXcd& state, const BipartiteBasis& basis);

// Exact von Neumann entropy, natural log: E = -sum p ln p.
double von_neumann(const ReducedDensity& rho);

// Binary entropy B(Z) = -Z ln Z - (1-Z) ln(1-Z); endpoints give 0.
double entropy_bound(double Z);

}  // namespace qsep
