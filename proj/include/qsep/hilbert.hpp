#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qsep/errors.hpp"

namespace qsep {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;
using VectorXd = Eigen::VectorXd;
using Matrix2cd = Eigen::Matrix2cd;

// ---------------------------------------------------------------------------
// BipartiteBasis: explicit tensor-product labeling of the universe Hilbert
// space.  Flattened index = bath_index * soi_dim + soi_index (bath slower).
// ---------------------------------------------------------------------------
struct BipartiteBasis {
  int soi_dim = 0;
  int bath_dim = 0;

  BipartiteBasis() = default;
  BipartiteBasis(int soi, int bath);

  int total_dim() const { return soi_dim * bath_dim; }
  int flatten(int soi_index, int bath_index) const {
    return bath_index * soi_dim + soi_index;
  }
  std::pair<int, int> unflatten(int k) const {  // -> (soi_index, bath_index)
    return {k % soi_dim, k / soi_dim};
  }
  // True when soi_dim > bath_dim; conventionally the SOI is the smaller
  // factor, but this is only a warning condition, never an error.
  bool convention_violated() const { return soi_dim > bath_dim; }
};

// ---------------------------------------------------------------------------
// ManyBodyOperator: dense Hermitian matrix over a BipartiteBasis.
// ---------------------------------------------------------------------------
struct ManyBodyOperator {
  BipartiteBasis basis;
  MatrixXcd matrix;

  ManyBodyOperator() = default;
  ManyBodyOperator(BipartiteBasis b, MatrixXcd m);  // validates Hermiticity
};

// Relative Hermiticity defect max|H - H^dag| / max|H| (0 for the zero matrix).
double hermiticity_defect(const MatrixXcd& m);

// ---------------------------------------------------------------------------
// Two-site fermionic model: one spin-up and one spin-down particle on sites
// {0, x}.  The spin-up position is the bath factor, the spin-down position
// the SOI factor; basis order {|0u 0d>, |0u xd>, |xu 0d>, |xu xd>}.
// ---------------------------------------------------------------------------
struct TwoSiteParams {
  double omega0 = 0.0;   // fundamental gap
  Complex omega_d;       // hopping (real part) + dipole (imaginary part)
  double V00 = 0.0;      // density-density strengths
  double V0x = 0.0;
  double Vxx = 0.0;
  double J0x = 0.0;      // exchange strength

  TwoSiteParams negated() const {
    return {-omega0, -omega_d, -V00, -V0x, -Vxx, -J0x};
  }
};

ManyBodyOperator build_two_site(const TwoSiteParams& params);

// ---------------------------------------------------------------------------
// EigenSystem: ascending eigenvalues with orthonormal eigenvector columns.
// ---------------------------------------------------------------------------
struct EigenSystem {
  VectorXd values;
  MatrixXcd vectors;
  bool degenerate = false;   // some gap < 1e-8 x spectral range
  double spectral_range = 0.0;
};

EigenSystem diagonalize(const ManyBodyOperator& op);
EigenSystem diagonalize(const MatrixXcd& hermitian);

// Pauli matrix sigma^k, k in {1,2,3}.
Matrix2cd pauli(int axis_index);

}  // namespace qsep
