#include "qsep/projection.hpp"

#include <cmath>

namespace qsep {

namespace {

constexpr double kNormTol = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// BathState
// ---------------------------------------------------------------------------

BathState::BathState(VectorXcd amps) : amplitudes(std::move(amps)) {
  if (amplitudes.size() == 0) {
    throw InvalidInputError("BathState: empty amplitude vector");
  }
  if (!amplitudes.allFinite()) {
    throw InvalidInputError("BathState: non-finite amplitude");
  }
  if (std::abs(amplitudes.norm() - 1.0) > kNormTol) {
    throw InvalidInputError("BathState: amplitudes are not unit norm");
  }
}

BathState BathState::basis_state(int bath_dim, int index) {
  if (index < 0 || index >= bath_dim) {
    throw InvalidInputError("BathState::basis_state: index out of range");
  }
  VectorXcd v = VectorXcd::Zero(bath_dim);
  v(index) = 1.0;
  return BathState(std::move(v));
}

// ---------------------------------------------------------------------------
// Bloch rotations
// ---------------------------------------------------------------------------

BlochRotation::BlochRotation(std::array<double, 3> n, double phi)
    : axis(n), angle(phi) {
  const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (std::abs(norm - 1.0) > kNormTol) {
    throw InvalidInputError("BlochRotation: axis must be unit norm");
  }
}

Matrix2cd bloch_unitary(const BlochRotation& rot) {
  const Complex i(0.0, 1.0);
  const double c = std::cos(rot.angle / 2.0);
  const double s = std::sin(rot.angle / 2.0);
  Matrix2cd n_sigma = rot.axis[0] * pauli(1) + rot.axis[1] * pauli(2) +
                      rot.axis[2] * pauli(3);
  return c * Matrix2cd::Identity() - i * s * n_sigma;
}

BathState rotate_bath_state(const BathState& base, const BlochRotation& rot,
                            std::pair<int, int> pair) {
  const auto [a, b] = pair;
  if (a == b || a < 0 || b < 0 || a >= base.dim() || b >= base.dim()) {
    throw InvalidInputError("rotate_bath_state: invalid amplitude pair");
  }
  Matrix2cd u = bloch_unitary(rot);
  VectorXcd amps = base.amplitudes;
  const Complex va = amps(a), vb = amps(b);
  amps(a) = u(0, 0) * va + u(0, 1) * vb;
  amps(b) = u(1, 0) * va + u(1, 1) * vb;
  return BathState(std::move(amps));
}

// ---------------------------------------------------------------------------
// Projection: build the rotated product basis and extract blocks.
//
// The bath-side orthonormal frame starts from |bath> and is completed by
// modified Gram-Schmidt over the canonical bath basis vectors, dropping the
// one most parallel to |bath>.  Downstream quantities are invariant to this
// completion choice (property-tested).
// ---------------------------------------------------------------------------

ProjectionBlocks project(const ManyBodyOperator& h, const BathState& bath) {
  const int ds = h.basis.soi_dim;
  const int db = h.basis.bath_dim;
  const int total = h.basis.total_dim();
  if (bath.dim() != db) {
    throw InvalidInputError("project: bath state dimension mismatch");
  }

  // Bath frame: column 0 is |bath>, the rest an orthonormal complement.
  MatrixXcd frame(db, db);
  frame.col(0) = bath.amplitudes;
  int drop;
  bath.amplitudes.cwiseAbs().maxCoeff(&drop);  // most-parallel canonical axis
  int col = 1;
  for (int j = 0; j < db; ++j) {
    if (j == drop) continue;
    VectorXcd v = VectorXcd::Zero(db);
    v(j) = 1.0;
    for (int k = 0; k < col; ++k) {
      v -= frame.col(k).dot(v) * frame.col(k);
    }
    const double norm = v.norm();
    if (norm < 1e-8) {
      throw NumericError("project: bath frame completion degenerated");
    }
    frame.col(col++) = v / norm;
  }

  // Row k of the rotated basis is SOI index (k % ds) with bath frame
  // column (k / ds); bath frame index varies slower, matching the basis
  // flattening convention.
  MatrixXcd rotation = MatrixXcd::Zero(total, total);
  for (int f = 0; f < db; ++f) {
    for (int j = 0; j < db; ++j) {
      for (int i = 0; i < ds; ++i) {
        rotation(f * ds + i, j * ds + i) = std::conj(frame(j, f));
      }
    }
  }

  MatrixXcd rotated = rotation * h.matrix * rotation.adjoint();

  ProjectionBlocks blocks;
  blocks.bath_state = bath;
  blocks.basis = h.basis;
  blocks.rotation = std::move(rotation);
  blocks.H_S = rotated.topLeftCorner(ds, ds);
  blocks.H_R = rotated.bottomRightCorner(total - ds, total - ds);
  blocks.C = rotated.topRightCorner(ds, total - ds);
  blocks.epsilon = 1.0;

  // Hermitize the diagonal blocks exactly (they are Hermitian to rounding).
  blocks.H_S = 0.5 * (blocks.H_S + blocks.H_S.adjoint()).eval();
  blocks.H_R = 0.5 * (blocks.H_R + blocks.H_R.adjoint()).eval();
  return blocks;
}

MatrixXcd reassemble(const ProjectionBlocks& blocks, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidInputError("reassemble: epsilon must lie in [0, 1]");
  }
  const int ds = blocks.soi_dim();
  const int dr = blocks.rest_dim();
  const double root = std::sqrt(epsilon);
  MatrixXcd h(ds + dr, ds + dr);
  h.topLeftCorner(ds, ds) = blocks.H_S;
  h.bottomRightCorner(dr, dr) = blocks.H_R;
  h.topRightCorner(ds, dr) = root * blocks.C;
  h.bottomLeftCorner(dr, ds) = root * blocks.C.adjoint();
  return h;
}

}  // namespace qsep
