#include "qsep/hilbert.hpp"

#include <cmath>

namespace qsep {

namespace {

constexpr double kHermTol = 1e-12;
constexpr double kDegenerateGap = 1e-8;  // x spectral range

void require_finite(const MatrixXcd& m, const std::string& context) {
  if (!m.allFinite()) {
    throw InvalidInputError(context + ": non-finite matrix entry");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// BipartiteBasis
// ---------------------------------------------------------------------------

BipartiteBasis::BipartiteBasis(int soi, int bath) : soi_dim(soi), bath_dim(bath) {
  if (soi < 1 || bath < 1) {
    throw InvalidInputError("BipartiteBasis: dimensions must be positive");
  }
}

// ---------------------------------------------------------------------------
// ManyBodyOperator
// ---------------------------------------------------------------------------

double hermiticity_defect(const MatrixXcd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

ManyBodyOperator::ManyBodyOperator(BipartiteBasis b, MatrixXcd m)
    : basis(b), matrix(std::move(m)) {
  require_finite(matrix, "ManyBodyOperator");
  if (matrix.rows() != matrix.cols() || matrix.rows() != basis.total_dim()) {
    throw InvalidInputError("ManyBodyOperator: matrix does not match basis");
  }
  if (hermiticity_defect(matrix) > kHermTol) {
    throw InvalidInputError("ManyBodyOperator: matrix is not Hermitian");
  }
}

// ---------------------------------------------------------------------------
// Two-site model.  Block layout over the spin-up (bath) configurations:
//
//   H = [ H_S(0u)   C'^dag ]      H_S(0u) = [V00 - 3w0/2   wd*/2      ]
//       [ C'        H(xu)  ]                [wd/2          V0x - w0/2 ]
//
//   H(xu)  = [V0x - w0/2   wd*/2     ]     C' = [wd/2   0    ]
//            [wd/2         Vxx + w0/2]          [J0x    wd/2 ]
// ---------------------------------------------------------------------------

ManyBodyOperator build_two_site(const TwoSiteParams& p) {
  if (!std::isfinite(p.omega0) || !std::isfinite(p.omega_d.real()) ||
      !std::isfinite(p.omega_d.imag()) || !std::isfinite(p.V00) ||
      !std::isfinite(p.V0x) || !std::isfinite(p.Vxx) || !std::isfinite(p.J0x)) {
    throw InvalidInputError("build_two_site: non-finite parameter");
  }

  const Complex wd = p.omega_d;
  const Complex wdc = std::conj(wd);

  MatrixXcd h = MatrixXcd::Zero(4, 4);
  // bath |0u> diagonal block
  h(0, 0) = p.V00 - 1.5 * p.omega0;
  h(0, 1) = wdc / 2.0;
  h(1, 0) = wd / 2.0;
  h(1, 1) = p.V0x - 0.5 * p.omega0;
  // bath |xu> diagonal block
  h(2, 2) = p.V0x - 0.5 * p.omega0;
  h(2, 3) = wdc / 2.0;
  h(3, 2) = wd / 2.0;
  h(3, 3) = p.Vxx + 0.5 * p.omega0;
  // coupling block (lower-left), upper-right is its adjoint
  h(2, 0) = wd / 2.0;
  h(3, 0) = p.J0x;
  h(3, 1) = wd / 2.0;
  h(0, 2) = wdc / 2.0;
  h(0, 3) = p.J0x;
  h(1, 3) = wdc / 2.0;

  return ManyBodyOperator(BipartiteBasis(2, 2), std::move(h));
}

// ---------------------------------------------------------------------------
// Diagonalization
// ---------------------------------------------------------------------------

EigenSystem diagonalize(const MatrixXcd& hermitian) {
  require_finite(hermitian, "diagonalize");
  if (hermitian.rows() != hermitian.cols()) {
    throw InvalidInputError("diagonalize: matrix not square");
  }
  if (hermiticity_defect(hermitian) > kHermTol) {
    throw InvalidInputError("diagonalize: matrix is not Hermitian");
  }

  Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(hermitian);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("diagonalize: eigensolver failed to converge");
  }

  EigenSystem sys;
  sys.values = solver.eigenvalues();
  sys.vectors = solver.eigenvectors();
  const int n = static_cast<int>(sys.values.size());
  sys.spectral_range = n > 0 ? sys.values(n - 1) - sys.values(0) : 0.0;
  const double gap_tol = kDegenerateGap * std::max(sys.spectral_range, 1e-300);
  for (int i = 0; i + 1 < n; ++i) {
    if (sys.values(i + 1) - sys.values(i) < gap_tol) {
      sys.degenerate = true;
      break;
    }
  }
  return sys;
}

EigenSystem diagonalize(const ManyBodyOperator& op) {
  return diagonalize(op.matrix);
}

// ---------------------------------------------------------------------------
// Pauli matrices
// ---------------------------------------------------------------------------

Matrix2cd pauli(int axis_index) {
  Matrix2cd s;
  const Complex i(0.0, 1.0);
  switch (axis_index) {
    case 1:
      s << 0, 1, 1, 0;
      break;
    case 2:
      s << 0, -i, i, 0;
      break;
    case 3:
      s << 1, 0, 0, -1;
      break;
    default:
      throw InvalidInputError("pauli: axis index must be 1, 2, or 3");
  }
  return s;
}

}  // namespace qsep
