#include "qsep/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qsep {

namespace {

constexpr int kBisectionIterations = 80;
constexpr int kMaxRefineDepth = 4;
constexpr double kOverlapThreshold = 0.5;
constexpr double kRootTolFactor = 1e-11;      // x spectral range
constexpr double kClusterTolFactor = 1e-8;    // x spectral range
constexpr double kPoleWindowFactor = 1e-6;    // x spectral range
constexpr int kPoleShrinkAttempts = 3;
constexpr int kContinuationSteps = 8;

// ---------------------------------------------------------------------------
// Resolvent: spectral evaluator for M(w) = C (w - H_R)^{-1} C^dag and the
// vector x = (w - H_R)^{-1} C^dag R.  Poles whose residue vanishes (zero
// coupling column) are removable and skipped entirely.
// ---------------------------------------------------------------------------
struct Resolvent {
  VectorXd poles;          // eigenvalues of H_R, ascending
  MatrixXcd V;             // eigenvectors of H_R
  MatrixXcd CV;            // C * V
  std::vector<int> active; // indices of poles with nonvanishing residue
  double coupling_norm = 0.0;

  explicit Resolvent(const ProjectionBlocks& blocks) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(blocks.H_R);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("Resolvent: rest-space eigensolver failed");
    }
    poles = es.eigenvalues();
    V = es.eigenvectors();
    CV = blocks.C * V;
    coupling_norm = blocks.C.norm();
    const double residue_tol = 1e-13 * std::max(coupling_norm, 1e-300);
    for (int r = 0; r < poles.size(); ++r) {
      if (CV.col(r).norm() > residue_tol) active.push_back(r);
    }
  }

  double min_active_distance(double w) const {
    double d = std::numeric_limits<double>::infinity();
    for (int r : active) d = std::min(d, std::abs(w - poles(r)));
    return d;
  }

  MatrixXcd M(double w) const {
    const int ds = static_cast<int>(CV.rows());
    MatrixXcd m = MatrixXcd::Zero(ds, ds);
    for (int r : active) {
      m += CV.col(r) * CV.col(r).adjoint() / (w - poles(r));
    }
    return m;
  }

  // squared norm of x = (w - H_R)^{-1} C^dag R
  double x_norm_sq(double w, const VectorXcd& R) const {
    double s = 0.0;
    for (int r : active) {
      const Complex amp = CV.col(r).dot(R);  // conj(CV_r) . R
      const double dr = w - poles(r);
      s += std::norm(amp) / (dr * dr);
    }
    return s;
  }

  VectorXcd x_vector(double w, const VectorXcd& R) const {
    VectorXcd coef = VectorXcd::Zero(poles.size());
    for (int r : active) {
      coef(r) = CV.col(r).dot(R) / (w - poles(r));
    }
    return V * coef;
  }

  // second-moment operator G = eps * C (w - H_R)^{-2} C^dag
  MatrixXcd slope_operator(double w, double eps) const {
    const int ds = static_cast<int>(CV.rows());
    MatrixXcd g = MatrixXcd::Zero(ds, ds);
    for (int r : active) {
      const double dr = w - poles(r);
      g += CV.col(r) * CV.col(r).adjoint() * (eps / (dr * dr));
    }
    return g;
  }
};

double spectral_width(const ProjectionBlocks& blocks) {
  auto [lo, hi] = universe_bounds(blocks);
  return std::max(hi - lo, 1e-12 * std::max({std::abs(lo), std::abs(hi), 1.0}));
}

Eigen::SelfAdjointEigenSolver<MatrixXcd> solve_renormalized(
    const ProjectionBlocks& blocks, const Resolvent& res, double w) {
  MatrixXcd a = blocks.H_S + blocks.epsilon * res.M(w);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("renormalized eigensolver failed");
  }
  return es;
}

// Greedy branch assignment: perm[b] = column of cur matching branch b of prev.
// Returns the minimum matched overlap.
double greedy_match(const MatrixXcd& prev, const MatrixXcd& cur,
                    std::vector<int>& perm) {
  const int n = static_cast<int>(prev.cols());
  Eigen::MatrixXd overlap(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      overlap(i, j) = std::abs(prev.col(i).dot(cur.col(j)));
    }
  }
  perm.assign(n, -1);
  std::vector<char> row_used(n, 0), col_used(n, 0);
  double min_overlap = 1.0;
  for (int pick = 0; pick < n; ++pick) {
    double best = -1.0;
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (row_used[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (col_used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    perm[bi] = bj;
    row_used[bi] = 1;
    col_used[bj] = 1;
    min_overlap = std::min(min_overlap, best);
  }
  return min_overlap;
}

// Match branches from frame at w_a to frame at w_b, recursively inserting
// midpoints (up to kMaxRefineDepth) when eigenvectors rotate too fast.
std::vector<int> match_through(const ProjectionBlocks& blocks,
                               const Resolvent& res, double w_a,
                               const MatrixXcd& v_a, double w_b,
                               const MatrixXcd& v_b, int depth) {
  std::vector<int> perm;
  const double min_overlap = greedy_match(v_a, v_b, perm);
  if (min_overlap >= kOverlapThreshold) return perm;
  if (depth >= kMaxRefineDepth) {
    throw ConvergenceError("trace_curves: branch tracking failed (overlap " +
                           std::to_string(min_overlap) + ")");
  }
  const double w_m = 0.5 * (w_a + w_b);
  const MatrixXcd v_m = solve_renormalized(blocks, res, w_m).eigenvectors();
  const std::vector<int> p1 =
      match_through(blocks, res, w_a, v_a, w_m, v_m, depth + 1);
  const std::vector<int> p2 =
      match_through(blocks, res, w_m, v_m, w_b, v_b, depth + 1);
  std::vector<int> composed(perm.size());
  for (std::size_t b = 0; b < perm.size(); ++b) composed[b] = p2[p1[b]];
  return composed;
}

struct RawRoot {
  double omega;
  double residual;
  int branch_id;
  VectorXcd R;
};

// Bisection for the unique root of g(w) = omega_R(w) - w in [a, b], where
// g(a) >= 0 > g(b) and g is strictly decreasing.  The branch is selected by
// eigenvalue rank: rank-ordered curves stay continuous and monotone through
// avoided crossings, where overlap tracking against a rolling reference
// vector can hop branches and stall the bisection.
RawRoot bisect_root(const ProjectionBlocks& blocks, const Resolvent& res,
                    double a, double b, int rank, double root_tol) {
  RawRoot best_root{0.5 * (a + b), std::numeric_limits<double>::infinity(),
                    rank, VectorXcd()};
  for (int it = 0; it < kBisectionIterations; ++it) {
    const double w = 0.5 * (a + b);
    auto es = solve_renormalized(blocks, res, w);
    const double g = es.eigenvalues()(rank) - w;
    if (std::abs(g) < best_root.residual) {
      best_root.omega = w;
      best_root.residual = std::abs(g);
      best_root.R = es.eigenvectors().col(rank);
    }
    // Refine all the way to the floating-point floor; the tolerance only
    // caps what counts as an acceptable final residual.
    if (b - a <= 8.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, std::abs(w))) {
      break;
    }
    if (g > 0) {
      a = w;
    } else {
      b = w;
    }
  }
  (void)root_tol;
  return best_root;
}

// Newton continuation of one fixed point from eps_full down to ~1e-3 x
// eps_full, returning the index of the static eigenvalue it approaches.
// Falls back to the maximal-overlap partner when the path degenerates.
int continue_to_static(const ProjectionBlocks& blocks, const Resolvent& res,
                       const FixedPointRecord& fp, const EigenSystem& statics,
                       double range) {
  const auto overlap_partner = [&]() {
    int best = 0;
    double best_ov = -1.0;
    for (int s = 0; s < statics.values.size(); ++s) {
      const double ov = std::abs(statics.vectors.col(s).dot(fp.R));
      if (ov > best_ov) {
        best_ov = ov;
        best = s;
      }
    }
    return best;
  };

  const double eps_full = blocks.epsilon;
  if (eps_full == 0.0) return overlap_partner();

  // The renormalized-level curves are smooth only between consecutive
  // resolvent poles, so every Newton iterate must stay inside the pole
  // interval that brackets the current position.  A step that would cross
  // a pole is replaced by a half-step towards that pole; fixed points that
  // genuinely descend onto a pole as eps -> 0 then approach it from within
  // their own interval instead of tunnelling onto a foreign branch.
  const auto clamp_into_segment = [&](double from, double step) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int r : res.active) {
      const double p = res.poles(r);
      if (p < from) lo = std::max(lo, p);
      if (p > from) hi = std::min(hi, p);
    }
    double next = from + step;
    if (next >= hi) next = 0.5 * (from + hi);
    if (next <= lo) next = 0.5 * (from + lo);
    return next;
  };

  double w = fp.omega_lambda;
  VectorXcd ref = fp.R;
  ProjectionBlocks scaled = blocks;
  for (int j = 1; j <= kContinuationSteps; ++j) {
    scaled.epsilon =
        eps_full * std::pow(1e-3, static_cast<double>(j) / kContinuationSteps);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      if (res.min_active_distance(w) < 1e-13 * range) break;
      auto es = solve_renormalized(scaled, res, w);
      int sel = 0;
      double best = -1.0;
      for (int c = 0; c < es.eigenvectors().cols(); ++c) {
        const double ov = std::abs(ref.dot(es.eigenvectors().col(c)));
        if (ov > best) {
          best = ov;
          sel = c;
        }
      }
      ref = es.eigenvectors().col(sel);
      const double g = es.eigenvalues()(sel) - w;
      const double slope = -scaled.epsilon * res.x_norm_sq(w, ref);
      const double step = g / (1.0 - slope);
      w = clamp_into_segment(w, step);
      if (std::abs(step) <= 1e-13 * range) {
        ok = true;
        break;
      }
    }
    if (!ok || !std::isfinite(w)) return overlap_partner();
  }

  // A path that terminates nearer to a resolvent pole than to any static
  // eigenvalue belongs to a level that detaches from the static spectrum in
  // the weak-coupling limit; pair those by state overlap instead.
  double pole_d = res.min_active_distance(w);
  double static_d = std::numeric_limits<double>::infinity();
  for (int s = 0; s < statics.values.size(); ++s) {
    static_d = std::min(static_d, std::abs(w - statics.values(s)));
  }
  if (pole_d < static_d) return overlap_partner();

  int nearest = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int s = 0; s < statics.values.size(); ++s) {
    const double d = std::abs(w - statics.values(s));
    if (d < best_d) {
      best_d = d;
      nearest = s;
    }
  }
  // Break ties between (near-)degenerate static levels by overlap.
  const double tie_tol = kClusterTolFactor * range;
  int partner = nearest;
  double best_ov = -1.0;
  for (int s = 0; s < statics.values.size(); ++s) {
    if (std::abs(statics.values(s) - statics.values(nearest)) > tie_tol) continue;
    const double ov = std::abs(statics.vectors.col(s).dot(fp.R));
    if (ov > best_ov) {
      best_ov = ov;
      partner = s;
    }
  }
  return partner;
}

// Trivial limits: coupling absent (C = 0) or eps = 0 — fixed points are
// exactly the static eigenvalues, perfectly separable.
std::vector<FixedPointRecord> static_records(const ProjectionBlocks& blocks) {
  EigenSystem statics = static_system(blocks);
  std::vector<FixedPointRecord> records;
  for (int s = 0; s < statics.values.size(); ++s) {
    FixedPointRecord fp;
    fp.omega_lambda = statics.values(s);
    fp.branch_id = s;
    fp.slope = 0.0;
    fp.Z = 1.0;
    fp.z = 1.0;
    fp.W = 1.0;
    fp.static_partner = s;
    fp.residual = 0.0;
    fp.R = statics.vectors.col(s);
    records.push_back(std::move(fp));
  }
  return records;
}

void fill_similarity(const ProjectionBlocks& blocks, const Resolvent& res,
                     std::vector<FixedPointRecord>& records, double range) {
  const EigenSystem statics = static_system(blocks);
  for (auto& fp : records) {
    fp.static_partner = continue_to_static(blocks, res, fp, statics, range);
    fp.z = std::norm(statics.vectors.col(fp.static_partner).dot(fp.R));
    fp.W = weight_factor(fp.Z, fp.z);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

std::pair<double, double> universe_bounds(const ProjectionBlocks& blocks) {
  const MatrixXcd h = reassemble(blocks, blocks.epsilon);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < h.rows(); ++i) {
    double radius = 0.0;
    for (int j = 0; j < h.cols(); ++j) {
      if (j != i) radius += std::abs(h(i, j));
    }
    lo = std::min(lo, h(i, i).real() - radius);
    hi = std::max(hi, h(i, i).real() + radius);
  }
  return {lo, hi};
}

MatrixXcd schur_M(const ProjectionBlocks& blocks, double omega) {
  Resolvent res(blocks);
  const double range = spectral_width(blocks);
  const double window = kPoleWindowFactor * range;
  const double dist = res.min_active_distance(omega);
  if (dist < window) {
    double pole = 0.0;
    for (int r : res.active) {
      if (std::abs(omega - res.poles(r)) == dist) pole = res.poles(r);
    }
    throw PoleProximityError("schur_M: omega inside a pole window", pole);
  }
  // Fully decoupled rest space: every pole is removable and M vanishes
  // identically, even at the rest eigenvalues themselves.
  if (res.active.empty()) {
    return MatrixXcd::Zero(blocks.soi_dim(), blocks.soi_dim());
  }
  // Literal evaluation by linear solves (w I - H_R) X = C^dag.
  const int dr = blocks.rest_dim();
  MatrixXcd lhs = omega * MatrixXcd::Identity(dr, dr) - blocks.H_R;
  MatrixXcd x = lhs.partialPivLu().solve(blocks.C.adjoint());
  MatrixXcd m = blocks.C * x;
  return 0.5 * (m + m.adjoint());
}

InteractionCurves trace_curves(const ProjectionBlocks& blocks, double omega_min,
                               double omega_max, int samples,
                               double pole_window) {
  if (!(omega_min < omega_max)) {
    throw InvalidInputError("trace_curves: omega_min must be below omega_max");
  }
  if (samples < 2) {
    throw InvalidInputError("trace_curves: need at least 2 samples");
  }

  Resolvent res(blocks);
  const double range = spectral_width(blocks);
  const double window = pole_window > 0 ? pole_window : kPoleWindowFactor * range;

  InteractionCurves curves;
  curves.spectral_range = range;
  curves.epsilon = blocks.epsilon;
  for (int r : res.active) curves.pole_locations.push_back(res.poles(r));
  for (double p : curves.pole_locations) {
    curves.excluded_windows.emplace_back(p - window, p + window);
  }

  // Uniform grid plus window-edge samples, minus points inside windows.
  std::vector<double> grid;
  grid.reserve(samples + 2 * curves.pole_locations.size());
  const double step = (omega_max - omega_min) / (samples - 1);
  for (int k = 0; k < samples; ++k) grid.push_back(omega_min + k * step);
  for (auto [lo, hi] : curves.excluded_windows) {
    if (lo > omega_min && lo < omega_max) grid.push_back(lo);
    if (hi > omega_min && hi < omega_max) grid.push_back(hi);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  auto inside_window = [&](double w) {
    for (auto [lo, hi] : curves.excluded_windows) {
      if (w > lo && w < hi) return true;
    }
    return false;
  };
  std::erase_if(grid, inside_window);
  if (grid.empty()) {
    throw NumericError("trace_curves: all samples fall inside pole windows");
  }
  curves.omega_grid = grid;

  const int n = static_cast<int>(grid.size());
  const int ds = blocks.soi_dim();
  curves.omega_R.resize(ds, n);
  curves.vectors.resize(n);

  // Segment boundaries: a window between consecutive samples splits them.
  auto window_between = [&](double a, double b) {
    for (double p : curves.pole_locations) {
      if (p > a && p < b) return true;
    }
    return false;
  };

  int seg_start = 0;
  for (int k = 0; k < n; ++k) {
    auto es = solve_renormalized(blocks, res, grid[k]);
    Eigen::VectorXd vals = es.eigenvalues();
    MatrixXcd vecs = es.eigenvectors();
    const bool new_segment =
        k > 0 && window_between(grid[k - 1], grid[k]);
    if (new_segment) {
      curves.segments.push_back({seg_start, k - 1});
      seg_start = k;
    }
    if (k == seg_start) {
      curves.omega_R.col(k) = vals;
      curves.vectors[k] = std::move(vecs);
    } else {
      const std::vector<int> perm = match_through(
          blocks, res, grid[k - 1], curves.vectors[k - 1], grid[k], vecs, 0);
      for (int b = 0; b < ds; ++b) curves.omega_R(b, k) = vals(perm[b]);
      MatrixXcd ordered(ds, ds);
      for (int b = 0; b < ds; ++b) ordered.col(b) = vecs.col(perm[b]);
      curves.vectors[k] = std::move(ordered);
    }
  }
  curves.segments.push_back({seg_start, n - 1});
  return curves;
}

std::vector<FixedPointRecord> find_fixed_points(const InteractionCurves& curves,
                                                const ProjectionBlocks& blocks) {
  if (curves.omega_grid.empty()) {
    throw InvalidInputError("find_fixed_points: empty curves");
  }
  Resolvent res(blocks);
  const double range = curves.spectral_range;
  const double root_tol = kRootTolFactor * range;
  const double cluster_tol = kClusterTolFactor * range;
  const int ds = blocks.soi_dim();
  const double eps = blocks.epsilon;

  // Scan the rank-ordered curves: sorting decreasing curves pointwise keeps
  // them decreasing, so every rank-b curve crosses the diagonal at most once
  // per segment and the crossing is bisectable without eigenvector tracking.
  Eigen::MatrixXd ranked = curves.omega_R;
  for (int k = 0; k < static_cast<int>(curves.omega_grid.size()); ++k) {
    std::sort(ranked.col(k).begin(), ranked.col(k).end());
  }

  std::vector<RawRoot> roots;
  for (const auto& seg : curves.segments) {
    for (int b = 0; b < ds; ++b) {
      for (int k = seg.first; k < seg.last; ++k) {
        const double ga = ranked(b, k) - curves.omega_grid[k];
        const double gb = ranked(b, k + 1) - curves.omega_grid[k + 1];
        if (ga >= 0.0 && gb < 0.0) {
          roots.push_back(bisect_root(blocks, res, curves.omega_grid[k],
                                      curves.omega_grid[k + 1], b, root_tol));
        }
      }
      // Root sitting exactly on a segment-end sample.
      for (int k : {seg.first, seg.last}) {
        const double g = ranked(b, k) - curves.omega_grid[k];
        if (std::abs(g) <= root_tol) {
          auto es = solve_renormalized(blocks, res, curves.omega_grid[k]);
          roots.push_back(RawRoot{curves.omega_grid[k], std::abs(g), b,
                                  es.eigenvectors().col(b)});
        }
      }
    }
  }

  std::sort(roots.begin(), roots.end(),
            [](const RawRoot& a, const RawRoot& b) { return a.omega < b.omega; });
  // Drop numerical duplicates (same branch, same location).
  std::vector<RawRoot> unique_roots;
  for (auto& r : roots) {
    bool dup = false;
    for (const auto& u : unique_roots) {
      if (u.branch_id == r.branch_id &&
          std::abs(u.omega - r.omega) <= 10 * root_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) unique_roots.push_back(std::move(r));
  }

  // Group roots into degeneracy clusters.
  std::vector<FixedPointRecord> records;
  std::size_t i = 0;
  while (i < unique_roots.size()) {
    std::size_t j = i + 1;
    while (j < unique_roots.size() &&
           unique_roots[j].omega - unique_roots[j - 1].omega < cluster_tol) {
      ++j;
    }
    const std::size_t m = j - i;
    if (m == 1) {
      const RawRoot& r = unique_roots[i];
      FixedPointRecord fp;
      fp.omega_lambda = r.omega;
      fp.branch_id = r.branch_id;
      fp.residual = r.residual;
      fp.R = r.R;
      fp.slope = -eps * res.x_norm_sq(r.omega, r.R);
      fp.Z = 1.0 / (1.0 - fp.slope);
      records.push_back(std::move(fp));
    } else {
      // Degenerate cluster: the branch limit is set by the slope operator
      // G = eps C (w - H_R)^{-2} C^dag restricted to the degenerate
      // eigenspace of H_S + eps M(w).  Its eigenvectors are the canonical
      // branch vectors; its eigenvalues give the slopes.
      double w_star = 0.0;
      double worst_residual = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        w_star += unique_roots[k].omega;
        worst_residual = std::max(worst_residual, unique_roots[k].residual);
      }
      w_star /= static_cast<double>(m);

      auto es = solve_renormalized(blocks, res, w_star);
      const double sub_tol =
          std::max(cluster_tol, 100 * std::max(worst_residual, root_tol));
      std::vector<int> sub;
      for (int c = 0; c < ds; ++c) {
        if (std::abs(es.eigenvalues()(c) - w_star) <= sub_tol) sub.push_back(c);
      }
      if (sub.size() != m) {
        // Subspace identification failed; keep per-root records unpolished.
        for (std::size_t k = i; k < j; ++k) {
          const RawRoot& r = unique_roots[k];
          FixedPointRecord fp;
          fp.omega_lambda = r.omega;
          fp.branch_id = r.branch_id;
          fp.residual = r.residual;
          fp.R = r.R;
          fp.slope = -eps * res.x_norm_sq(r.omega, r.R);
          fp.Z = 1.0 / (1.0 - fp.slope);
          fp.degenerate_cluster = true;
          records.push_back(std::move(fp));
        }
      } else {
        MatrixXcd basis(ds, m);
        for (std::size_t c = 0; c < m; ++c) {
          basis.col(c) = es.eigenvectors().col(sub[c]);
        }
        const MatrixXcd g_full = res.slope_operator(w_star, eps);
        MatrixXcd g_proj = basis.adjoint() * g_full * basis;
        g_proj = 0.5 * (g_proj + g_proj.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> gs(g_proj);
        // Ascending g-eigenvalue = descending Z.
        for (std::size_t c = 0; c < m; ++c) {
          FixedPointRecord fp;
          fp.omega_lambda = w_star;
          fp.branch_id = unique_roots[i + c].branch_id;
          fp.residual = worst_residual;
          fp.R = basis * gs.eigenvectors().col(c);
          fp.slope = -gs.eigenvalues()(c);
          fp.Z = 1.0 / (1.0 - fp.slope);
          fp.degenerate_cluster = true;
          records.push_back(std::move(fp));
        }
      }
    }
    i = j;
  }

  fill_similarity(blocks, res, records, range);
  return records;
}

std::vector<FixedPointRecord> fixed_points_auto(const ProjectionBlocks& blocks,
                                                const TraceOptions& opts) {
  const int total = blocks.total_dim();

  Resolvent res(blocks);
  if (blocks.epsilon == 0.0 || res.active.empty()) {
    return static_records(blocks);
  }

  auto [lo, hi] = universe_bounds(blocks);
  const double range = spectral_width(blocks);
  const double pad = 0.05 * range + 1e-9;
  double window = opts.pole_window > 0 ? opts.pole_window
                                       : kPoleWindowFactor * range;

  std::vector<FixedPointRecord> records;
  for (int attempt = 0; attempt <= kPoleShrinkAttempts; ++attempt) {
    InteractionCurves curves =
        trace_curves(blocks, lo - pad, hi + pad, opts.samples, window);
    records = find_fixed_points(curves, blocks);
    if (static_cast<int>(records.size()) >= total) break;
    window /= 10.0;  // a fixed point may hide inside a pole window
  }
  if (static_cast<int>(records.size()) < total) {
    double pole = res.poles(0);
    // Blame the active pole nearest to any found record gap; report the first.
    throw PoleProximityError(
        "fixed_points_auto: found " + std::to_string(records.size()) +
            " of " + std::to_string(total) +
            " fixed points; a root is unresolvably close to a resolvent pole",
        pole);
  }
  return records;
}

double slope_at(const ProjectionBlocks& blocks, double omega_lambda,
                const VectorXcd& eigvec) {
  Resolvent res(blocks);
  const double range = spectral_width(blocks);
  const double window = kPoleWindowFactor * range;
  if (res.min_active_distance(omega_lambda) < window) {
    throw PoleProximityError("slope_at: omega inside a pole window",
                             omega_lambda);
  }
  const double eps = blocks.epsilon;
  const double analytic = -eps * res.x_norm_sq(omega_lambda, eigvec);

  // Central finite difference of the tracked branch.
  double h = 1e-6 * range;
  while (h > 1e-9 * range &&
         (res.min_active_distance(omega_lambda + h) < window ||
          res.min_active_distance(omega_lambda - h) < window)) {
    h /= 2.0;
  }
  auto branch_value = [&](double w) {
    auto es = solve_renormalized(blocks, res, w);
    int sel = 0;
    double best = -1.0;
    for (int c = 0; c < es.eigenvectors().cols(); ++c) {
      const double ov = std::abs(eigvec.dot(es.eigenvectors().col(c)));
      if (ov > best) {
        best = ov;
        sel = c;
      }
    }
    return es.eigenvalues()(sel);
  };
  const double fd =
      (branch_value(omega_lambda + h) - branch_value(omega_lambda - h)) /
      (2.0 * h);
  const double tol = 1e-5 * std::max(std::abs(analytic), 1e-9 * range);
  if (std::abs(fd - analytic) > tol) {
    std::ostringstream msg;
    msg << "slope_at: finite-difference slope " << fd
        << " disagrees with analytic slope " << analytic;
    throw ConsistencyError(msg.str());
  }
  return analytic;
}

double separability_direct(const EigenSystem& es, const BipartiteBasis& basis,
                           const BathState& bath, int eig_index) {
  if (eig_index < 0 || eig_index >= es.values.size()) {
    throw InvalidInputError("separability_direct: eigenstate index out of range");
  }
  if (bath.dim() != basis.bath_dim) {
    throw InvalidInputError("separability_direct: bath dimension mismatch");
  }
  const int ds = basis.soi_dim;
  double total = 0.0;
  for (int i = 0; i < ds; ++i) {
    Complex amp = 0.0;
    for (int j = 0; j < basis.bath_dim; ++j) {
      amp += std::conj(bath.amplitudes(j)) * es.vectors(basis.flatten(i, j),
                                                        eig_index);
    }
    total += std::norm(amp);
  }
  return total;
}

double separability_direct(const ManyBodyOperator& h, const BathState& bath,
                           int eig_index) {
  const EigenSystem es = diagonalize(h);
  return separability_direct(es, h.basis, bath, eig_index);
}

double similarity(const ProjectionBlocks& blocks, const FixedPointRecord& fp,
                  int static_index) {
  const EigenSystem statics = static_system(blocks);
  if (static_index < 0 || static_index >= statics.values.size()) {
    throw InvalidInputError("similarity: static index out of range");
  }
  return std::norm(statics.vectors.col(static_index).dot(fp.R));
}

double weight_factor(double Z, double z) {
  constexpr double slack = 1e-9;
  if (Z < -slack || Z > 1.0 + slack || z < -slack || z > 1.0 + slack) {
    throw InvalidInputError("weight_factor: Z and z must lie in [0, 1]");
  }
  return std::clamp(Z, 0.0, 1.0) * std::clamp(z, 0.0, 1.0);
}

CouplingKernel kernel_build(const ProjectionBlocks& blocks) {
  if (blocks.C.norm() == 0.0) {
    throw DegenerateKernelError("kernel_build: coupling block is zero");
  }
  const int ds = blocks.soi_dim();
  const int dr = blocks.rest_dim();

  Eigen::JacobiSVD<MatrixXcd> svd(blocks.C,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  CouplingKernel kernel;
  kernel.singular_values = svd.singularValues();
  kernel.K = blocks.C * blocks.C.adjoint();
  kernel.K = 0.5 * (kernel.K + kernel.K.adjoint()).eval();

  const double sigma_max = kernel.singular_values(0);
  const double sigma_min =
      kernel.singular_values(kernel.singular_values.size() - 1);
  kernel.rank_deficient = dr < ds || sigma_min < 1e-10 * sigma_max;

  const EigenSystem statics = static_system(blocks);
  kernel.K_in_static_basis =
      statics.vectors.adjoint() * kernel.K * statics.vectors;

  if (!kernel.rank_deficient) {
    // C^dag K^{-1} C must be the orthogonal projector onto range(C^dag).
    MatrixXcd proj = blocks.C.adjoint() *
                     kernel.K.ldlt().solve(blocks.C);
    const double herm = (proj - proj.adjoint()).cwiseAbs().maxCoeff();
    const double idem = (proj * proj - proj).cwiseAbs().maxCoeff();
    if (herm > 1e-10 * (1.0 + proj.cwiseAbs().maxCoeff()) ||
        idem > 1e-10 * (1.0 + proj.cwiseAbs().maxCoeff())) {
      throw ConsistencyError("kernel_build: C^dag K^-1 C is not a projector");
    }
  }
  return kernel;
}

KernelFormResult kernel_quadratic_form(const ProjectionBlocks& blocks,
                                       const CouplingKernel& kernel,
                                       const FixedPointRecord& fp) {
  if (kernel.rank_deficient) {
    throw DegenerateKernelError(
        "kernel_quadratic_form: kernel is rank deficient");
  }
  if (blocks.epsilon <= 0.0) {
    throw InvalidInputError("kernel_quadratic_form: epsilon must be positive");
  }
  const int ds = blocks.soi_dim();
  const VectorXcd y =
      fp.omega_lambda * fp.R - blocks.H_S * fp.R;  // (w - H_S)|R>

  KernelFormResult out;
  const VectorXcd q = kernel.K.ldlt().solve(y);
  out.quadratic_form = y.dot(q).real() / blocks.epsilon;

  // Diagnostic route: the same quantity expanded over static pairs.
  const EigenSystem statics = static_system(blocks);
  const VectorXcd y_static = statics.vectors.adjoint() * y;
  const MatrixXcd k_inv_static = kernel.K_in_static_basis.inverse();
  Complex acc = 0.0;
  for (int s = 0; s < ds; ++s) {
    for (int sp = 0; sp < ds; ++sp) {
      acc += std::conj(y_static(s)) * k_inv_static(s, sp) * y_static(sp);
    }
  }
  out.expanded_sum = acc.real() / blocks.epsilon;
  return out;
}

EigenSystem static_system(const ProjectionBlocks& blocks) {
  return diagonalize(blocks.H_S);
}

VectorXcd reconstruct_universe_vector(const ProjectionBlocks& blocks,
                                      const FixedPointRecord& fp) {
  Resolvent res(blocks);
  const VectorXcd x = res.x_vector(fp.omega_lambda, fp.R);
  VectorXcd v(blocks.total_dim());
  v.head(blocks.soi_dim()) = fp.R;
  v.tail(blocks.rest_dim()) = std::sqrt(blocks.epsilon) * x;
  v *= std::sqrt(fp.Z);
  return v / v.norm();
}

}  // namespace qsep
