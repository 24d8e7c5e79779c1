#include "qsep/entanglement.hpp"

#include <algorithm>
#include <cmath>

namespace qsep {

namespace {
constexpr double kTraceTol = 1e-12;
constexpr double kEigFloor = -1e-12;
}  // namespace

ReducedDensity::ReducedDensity(MatrixXcd m, int eig_index)
    : matrix(std::move(m)), source_eig_index(eig_index) {
  if (matrix.rows() != matrix.cols()) {
    throw InvalidInputError("ReducedDensity: matrix must be square");
  }
  if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > kTraceTol) {
    throw InvalidInputError("ReducedDensity: matrix must be Hermitian");
  }
  if (std::abs(matrix.trace().real() - 1.0) > kTraceTol ||
      std::abs(matrix.trace().imag()) > kTraceTol) {
    throw InvalidInputError("ReducedDensity: trace must equal 1");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(matrix,
                                              Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kEigFloor) {
    throw NumericError("ReducedDensity: negative eigenvalue beyond tolerance");
  }
}

MatrixXcd soi_density(const VectorXcd& state, const BipartiteBasis& basis) {
  const int ds = basis.soi_dim;
  const int db = basis.bath_dim;
  MatrixXcd rho = MatrixXcd::Zero(ds, ds);
  for (int i = 0; i < ds; ++i) {
    for (int ip = 0; ip < ds; ++ip) {
      Complex acc = 0.0;
      for (int j = 0; j < db; ++j) {
        acc += state(basis.flatten(i, j)) *
               std::conj(state(basis.flatten(ip, j)));
      }
      rho(i, ip) = acc;
    }
  }
  return rho;
}

MatrixXcd bath_density(const VectorXcd& state, const BipartiteBasis& basis) {
  const int ds = basis.soi_dim;
  const int db = basis.bath_dim;
  MatrixXcd rho = MatrixXcd::Zero(db, db);
  for (int j = 0; j < db; ++j) {
    for (int jp = 0; jp < db; ++jp) {
      Complex acc = 0.0;
      for (int i = 0; i < ds; ++i) {
        acc += state(basis.flatten(i, j)) *
               std::conj(state(basis.flatten(i, jp)));
      }
      rho(j, jp) = acc;
    }
  }
  return rho;
}

ReducedDensity reduce(const ManyBodyOperator& h, int eig_index) {
  const EigenSystem es = diagonalize(h);
  if (eig_index < 0 || eig_index >= es.values.size()) {
    throw InvalidInputError("reduce: eigenstate index out of range");
  }
  return ReducedDensity(soi_density(es.vectors.col(eig_index), h.basis),
                        eig_index);
}

double von_neumann(const ReducedDensity& rho) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho.matrix,
                                              Eigen::EigenvaluesOnly);
  double entropy = 0.0;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    double p = es.eigenvalues()(k);
    if (p < kEigFloor) {
      throw NumericError("von_neumann: negative eigenvalue beyond tolerance");
    }
    p = std::max(p, 0.0);
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy;
}

double entropy_bound(double Z) {
  if (Z < -kTraceTol || Z > 1.0 + kTraceTol) {
    throw InvalidInputError("entropy_bound: Z must lie in [0, 1]");
  }
  const double z = std::clamp(Z, 0.0, 1.0);
  double b = 0.0;
  if (z > 0.0) b -= z * std::log(z);
  if (z < 1.0) b -= (1.0 - z) * std::log(1.0 - z);
  return b;
}

}  // namespace qsep
