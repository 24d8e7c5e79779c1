#pragma once

#include <array>
#include <utility>

#include "qsep/hilbert.hpp"

namespace qsep {

// ---------------------------------------------------------------------------
// BathState: a unit vector in the bath factor selecting the projected
// product subspace SOI (x) |bath>.
// ---------------------------------------------------------------------------
struct BathState {
  VectorXcd amplitudes;

  BathState() = default;
  explicit BathState(VectorXcd amps);  // validates unit norm

  int dim() const { return static_cast<int>(amplitudes.size()); }

  // Canonical basis state |index>.
  static BathState basis_state(int bath_dim, int index);
};

// ---------------------------------------------------------------------------
// BlochRotation: U = cos(phi/2) I - i (n . sigma) sin(phi/2) acting on a
// selected pair of bath amplitudes.
// ---------------------------------------------------------------------------
struct BlochRotation {
  std::array<double, 3> axis{0.0, 0.0, 1.0};
  double angle = 0.0;

  BlochRotation() = default;
  BlochRotation(std::array<double, 3> n, double phi);  // validates |n| = 1
};

Matrix2cd bloch_unitary(const BlochRotation& rot);

BathState rotate_bath_state(const BathState& base, const BlochRotation& rot,
                            std::pair<int, int> pair = {0, 1});

// ---------------------------------------------------------------------------
// ProjectionBlocks: the universe Hamiltonian decomposed in the rotated
// product basis where the first soi_dim rows span SOI (x) |bath> and the
// rest span SOI (x) (orthogonal complement of |bath>).
//
//   H_rotated = [ H_S      C   ]        reassemble(eps):
//               [ C^dag    H_R ]        [ H_S          sqrt(eps) C ]
//                                       [ sqrt(eps) C^dag      H_R ]
// ---------------------------------------------------------------------------
struct ProjectionBlocks {
  BathState bath_state;
  MatrixXcd H_S;       // soi_dim x soi_dim
  MatrixXcd H_R;       // (total - soi_dim) x (total - soi_dim)
  MatrixXcd C;         // soi_dim x (total - soi_dim), upper-right block
  double epsilon = 1.0;
  BipartiteBasis basis;
  MatrixXcd rotation;  // total x total unitary: old basis -> rotated basis rows

  int soi_dim() const { return static_cast<int>(H_S.rows()); }
  int rest_dim() const { return static_cast<int>(H_R.rows()); }
  int total_dim() const { return soi_dim() + rest_dim(); }
};

ProjectionBlocks project(const ManyBodyOperator& h, const BathState& bath);

// Reassemble the eps-scaled universe in the rotated basis.
MatrixXcd reassemble(const ProjectionBlocks& blocks, double epsilon);

}  // namespace qsep
