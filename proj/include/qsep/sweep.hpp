#pragma once

#include <array>
#include <string>
#include <vector>

#include "qsep/projection.hpp"

namespace qsep {

// =========================================================================
// Bath-state scans, separability optimization, and parameter-plane heatmaps
// =========================================================================

// Z(phi) traces for every eigenstate under rotations about one fixed axis.
struct PhiSweep {
  VectorXd phi;        // uniform grid on [0, 2pi)
  Eigen::MatrixXd Z;   // (eigenstate, phi-sample), eigenvalue order
};
PhiSweep bath_phi_sweep(const ManyBodyOperator& h, const BathState& base,
                        const std::array<double, 3>& axis, int phi_steps);

// Bloch-sphere scan resolution: polar x azimuthal axis grid x rotation
// angle, plus local 4x zoom rounds around the best cell.
struct ScanResolution {
  int n_polar = 16;
  int n_azimuth = 32;
  int n_angle = 64;
  int refine_rounds = 2;
};

struct MaxSeparability {
  double z_max = 0.0;
  double theta = 0.0;  // argmax axis polar angle
  double psi = 0.0;    // argmax axis azimuthal angle
  double phi = 0.0;    // argmax rotation angle
};
MaxSeparability max_separability(const ManyBodyOperator& h, int eig_index,
                                 const ScanResolution& res);

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int steps = 2;
};

struct GridSpec {
  GridAxis j0x;
  GridAxis v0x;
  ScanResolution bath_scan;
};

struct HeatmapPoint {
  double j0x = 0.0;
  double v0x = 0.0;
  std::array<double, 4> zmax{};                 // GS, E1, E2, E3
  std::array<std::array<double, 3>, 4> argmax{};  // (theta, psi, phi) each
  double mean = 0.0;
  double stddev = 0.0;  // population std over the four eigenstates
};

struct SweepResult {
  TwoSiteParams base;
  GridSpec grid;
  std::vector<HeatmapPoint> points;  // row-major: j0x outer, v0x inner
};

// Per-point max separability of all four eigenstates over the (J0x, V0x)
// plane.  workers = 0 uses the hardware concurrency; results are identical
// for any worker count.
SweepResult heatmap(const TwoSiteParams& base, const GridSpec& grid,
                    int workers = 0);

// CSV columns: J0x,V0x,zmax_gs,zmax_e1,zmax_e2,zmax_e3,zmax_mean,zmax_std
// (12 significant digits, row-major); JSON adds scan metadata.
void persist(const SweepResult& result, const std::string& path,
             const std::string& format);

}  // namespace qsep
