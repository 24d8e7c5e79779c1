#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qsep/projection.hpp"

namespace qsep {

// ---------------------------------------------------------------------------
// InteractionCurves: omega-sampled, branch-tracked eigenvalues of the
// renormalized SOI Hamiltonian H_S + eps * M(omega).  The sample grid skips
// a small window around every active pole of the rest-space resolvent; the
// remaining samples fall into contiguous pole-free segments.
// ---------------------------------------------------------------------------
struct CurveSegment {
  int first = 0;  // inclusive sample-index range
  int last = 0;
};

struct InteractionCurves {
  std::vector<double> omega_grid;                     // ascending samples
  std::vector<CurveSegment> segments;
  Eigen::MatrixXd omega_R;                            // branches x samples
  std::vector<MatrixXcd> vectors;                     // per sample: branch columns
  std::vector<double> pole_locations;                 // active poles, ascending
  std::vector<std::pair<double, double>> excluded_windows;
  double spectral_range = 0.0;                        // Gershgorin surrogate
  double epsilon = 1.0;

  int n_branches() const { return static_cast<int>(omega_R.rows()); }
  int n_samples() const { return static_cast<int>(omega_grid.size()); }
};

// ---------------------------------------------------------------------------
// FixedPointRecord: one universe eigenvalue recovered from the nonlinear
// eigenproblem, with its slope, separability Z, similarity z, weight W.
// ---------------------------------------------------------------------------
struct FixedPointRecord {
  double omega_lambda = 0.0;
  int branch_id = 0;
  double slope = 0.0;            // d omega_R / d omega at the fixed point, <= 0
  double Z = 1.0;                // degree of separability, = 1/(1 - slope)
  double z = 1.0;                // degree of similarity to the static partner
  double W = 1.0;                // weight factor Z * z
  int static_partner = 0;
  double residual = 0.0;         // |omega_R(omega_lambda) - omega_lambda|
  VectorXcd R;                   // renormalized eigenvector at the fixed point
  bool degenerate_cluster = false;
};

// ---------------------------------------------------------------------------
// CouplingKernel: K = C C^dag via SVD, with elements in the static eigenbasis.
// ---------------------------------------------------------------------------
struct CouplingKernel {
  MatrixXcd K;
  MatrixXcd K_in_static_basis;
  VectorXd singular_values;   // of C, descending
  bool rank_deficient = false;
};

struct KernelFormResult {
  double quadratic_form = 0.0;  // (1/eps) <R|(w - H_S) K^-1 (w - H_S)|R>
  double expanded_sum = 0.0;    // same quantity via the static-pair double sum
};

struct TraceOptions {
  int samples = 2048;
  double pole_window = -1.0;  // < 0: auto, 1e-6 x spectral range
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Schur complement M(omega) = C (omega I - H_R)^{-1} C^dag via linear solves.
MatrixXcd schur_M(const ProjectionBlocks& blocks, double omega);

// Gershgorin enclosure of the reassembled universe spectrum: (lo, hi).
std::pair<double, double> universe_bounds(const ProjectionBlocks& blocks);

InteractionCurves trace_curves(const ProjectionBlocks& blocks, double omega_min,
                               double omega_max, int samples,
                               double pole_window = -1.0);

std::vector<FixedPointRecord> find_fixed_points(const InteractionCurves& curves,
                                                const ProjectionBlocks& blocks);

// Trace over an automatic Gershgorin-padded grid and locate all Lambda fixed
// points, shrinking pole windows (x10, at most 3 times) if a root hides
// inside one.
std::vector<FixedPointRecord> fixed_points_auto(const ProjectionBlocks& blocks,
                                                const TraceOptions& opts = {});

// Analytic slope -eps x^dag x at a fixed point, cross-checked against a
// central finite difference of the tracked branch (1e-5 relative).
double slope_at(const ProjectionBlocks& blocks, double omega_lambda,
                const VectorXcd& eigvec);

// ||(I_SOI (x) |bath><bath|) |lambda>||^2 from the exact eigenvector.
double separability_direct(const ManyBodyOperator& h, const BathState& bath,
                           int eig_index);
// Same, reusing a precomputed eigensystem.
double separability_direct(const EigenSystem& es, const BipartiteBasis& basis,
                           const BathState& bath, int eig_index);

double similarity(const ProjectionBlocks& blocks, const FixedPointRecord& fp,
                  int static_index);

double weight_factor(double Z, double z);

CouplingKernel kernel_build(const ProjectionBlocks& blocks);

KernelFormResult kernel_quadratic_form(const ProjectionBlocks& blocks,
                                       const CouplingKernel& kernel,
                                       const FixedPointRecord& fp);

// Static eigensystem of H_S (ascending).
EigenSystem static_system(const ProjectionBlocks& blocks);

/// Universe eigenvector reconstructed from a fixed-point record:
// sqrt(Z) [R; sqrt(eps) x], normalized; lives in the rotated product basis.
VectorXcd reconstruct_universe_vector(const ProjectionBlocks& blocks,
                                      const FixedPointRecord& fp);

}  // namespace qsep
