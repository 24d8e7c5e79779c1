#include "qsep/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "qsep/entanglement.hpp"
#include "qsep/io.hpp"

#include "json.hpp"

namespace qsep {

namespace {

// Z(b) = <b| rho_bath |b> for one eigenstate's bath-reduced density.
double bath_quadratic(const MatrixXcd& rho, const VectorXcd& b) {
  const double z = b.dot(rho * b).real();
  return std::clamp(z, 0.0, 1.0);
}

struct RotatedPair {
  Complex b0, b1;
};

// Closed-form rotation of a 2-dim bath state: U = c I - i s (n . sigma).
RotatedPair rotate_pair(Complex base0, Complex base1, double nx, double ny,
                        double nz, double c, double s) {
  const Complex u00(c, -s * nz);
  const Complex u01 = Complex(0.0, -s) * Complex(nx, -ny);
  const Complex u10 = Complex(0.0, -s) * Complex(nx, ny);
  const Complex u11(c, s * nz);
  return {u00 * base0 + u01 * base1, u10 * base0 + u11 * base1};
}

double pair_quadratic(const MatrixXcd& rho, const RotatedPair& b) {
  const double z =
      std::real(std::conj(b.b0) * (rho(0, 0) * b.b0 + rho(0, 1) * b.b1) +
                std::conj(b.b1) * (rho(1, 0) * b.b0 + rho(1, 1) * b.b1));
  return std::clamp(z, 0.0, 1.0);
}

struct AxisPoint {
  double nx, ny, nz;
};

double evaluate_rotation(const MatrixXcd& rho, const BathState& base,
                         double theta, double psi, double phi) {
  const AxisPoint n{std::sin(theta) * std::cos(psi),
                    std::sin(theta) * std::sin(psi), std::cos(theta)};
  const double c = std::cos(phi / 2.0);
  const double s = std::sin(phi / 2.0);
  if (base.dim() == 2) {
    return pair_quadratic(
        rho, rotate_pair(base.amplitudes(0), base.amplitudes(1), n.nx, n.ny,
                         n.nz, c, s));
  }
  const BathState rotated =
      rotate_bath_state(base, BlochRotation({n.nx, n.ny, n.nz}, phi));
  return bath_quadratic(rho, rotated.amplitudes);
}

}  // namespace

PhiSweep bath_phi_sweep(const ManyBodyOperator& h, const BathState& base,
                        const std::array<double, 3>& axis, int phi_steps) {
  if (phi_steps < 2) {
    throw InvalidInputError("bath_phi_sweep: need at least 2 phi steps");
  }
  const double axis_norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] +
                                     axis[2] * axis[2]);
  if (std::abs(axis_norm - 1.0) > 1e-12) {
    throw InvalidInputError("bath_phi_sweep: axis must be a unit vector");
  }
  if (base.dim() != h.basis.bath_dim) {
    throw InvalidInputError("bath_phi_sweep: bath dimension mismatch");
  }

  const EigenSystem es = diagonalize(h);
  const int levels = static_cast<int>(es.values.size());
  std::vector<MatrixXcd> rho(levels);
  for (int e = 0; e < levels; ++e) {
    rho[e] = bath_density(es.vectors.col(e), h.basis);
  }

  PhiSweep out;
  out.phi.resize(phi_steps);
  out.Z.resize(levels, phi_steps);
  for (int k = 0; k < phi_steps; ++k) {
    const double phi = 2.0 * M_PI * k / phi_steps;
    out.phi(k) = phi;
    const BathState rotated = rotate_bath_state(base, BlochRotation(axis, phi));
    for (int e = 0; e < levels; ++e) {
      out.Z(e, k) = bath_quadratic(rho[e], rotated.amplitudes);
    }
  }
  return out;
}

MaxSeparability max_separability(const ManyBodyOperator& h, int eig_index,
                                 const ScanResolution& res) {
  if (res.n_polar < 8 || res.n_azimuth < 8 || res.n_angle < 16) {
    throw InvalidInputError(
        "max_separability: resolution must be at least (8, 8, 16)");
  }
  if (res.refine_rounds < 0) {
    throw InvalidInputError("max_separability: negative refine rounds");
  }
  const EigenSystem es = diagonalize(h);
  if (eig_index < 0 || eig_index >= es.values.size()) {
    throw InvalidInputError("max_separability: eigenstate index out of range");
  }
  const MatrixXcd rho = bath_density(es.vectors.col(eig_index), h.basis);
  const BathState base = BathState::basis_state(h.basis.bath_dim, 0);
  const bool pair_path = h.basis.bath_dim == 2;

  const double d_theta = M_PI / (res.n_polar - 1);
  const double d_psi = 2.0 * M_PI / res.n_azimuth;
  const double d_phi = 2.0 * M_PI / res.n_angle;

  MaxSeparability best;
  best.z_max = -1.0;

  // Precompute the axis table and the half-angle table for the base scan.
  std::vector<AxisPoint> axes;
  axes.reserve(res.n_polar * res.n_azimuth);
  std::vector<std::pair<double, double>> axis_angles(axes.capacity());
  for (int i = 0; i < res.n_polar; ++i) {
    const double theta = i * d_theta;
    for (int j = 0; j < res.n_azimuth; ++j) {
      const double psi = j * d_psi;
      axes.push_back({std::sin(theta) * std::cos(psi),
                      std::sin(theta) * std::sin(psi), std::cos(theta)});
      axis_angles[axes.size() - 1] = {theta, psi};
    }
  }
  std::vector<std::pair<double, double>> half_trig(res.n_angle);
  for (int k = 0; k < res.n_angle; ++k) {
    const double phi = k * d_phi;
    half_trig[k] = {std::cos(phi / 2.0), std::sin(phi / 2.0)};
  }

  for (std::size_t a = 0; a < axes.size(); ++a) {
    for (int k = 0; k < res.n_angle; ++k) {
      double z;
      if (pair_path) {
        z = pair_quadratic(
            rho, rotate_pair(base.amplitudes(0), base.amplitudes(1),
                             axes[a].nx, axes[a].ny, axes[a].nz,
                             half_trig[k].first, half_trig[k].second));
      } else {
        z = evaluate_rotation(rho, base, axis_angles[a].first,
                              axis_angles[a].second, k * d_phi);
      }
      if (z > best.z_max) {
        best.z_max = z;
        best.theta = axis_angles[a].first;
        best.psi = axis_angles[a].second;
        best.phi = k * d_phi;
      }
    }
  }

  // Local refinement: each round shrinks the cell 4x and rescans +/- one
  // old cell around the running best.
  double st = d_theta, sp = d_psi, sf = d_phi;
  for (int round = 0; round < res.refine_rounds; ++round) {
    st /= 4.0;
    sp /= 4.0;
    sf /= 4.0;
    const MaxSeparability center = best;
    for (int mi = -4; mi <= 4; ++mi) {
      const double theta = std::clamp(center.theta + mi * st, 0.0, M_PI);
      for (int mj = -4; mj <= 4; ++mj) {
        const double psi = center.psi + mj * sp;
        for (int mk = -4; mk <= 4; ++mk) {
          const double phi = center.phi + mk * sf;
          const double z = evaluate_rotation(rho, base, theta, psi, phi);
          if (z > best.z_max) {
            best.z_max = z;
            best.theta = theta;
            best.psi = psi;
            best.phi = phi;
          }
        }
      }
    }
  }
  return best;
}

SweepResult heatmap(const TwoSiteParams& base, const GridSpec& grid,
                    int workers) {
  auto axis_values = [](const GridAxis& axis) {
    if (axis.steps < 1) {
      throw InvalidInputError("heatmap: axis needs at least 1 step");
    }
    std::vector<double> vals(axis.steps);
    if (axis.steps == 1) {
      vals[0] = axis.min;
    } else {
      for (int k = 0; k < axis.steps; ++k) {
        vals[k] = axis.min + (axis.max - axis.min) * k / (axis.steps - 1);
      }
    }
    return vals;
  };
  const std::vector<double> j_vals = axis_values(grid.j0x);
  const std::vector<double> v_vals = axis_values(grid.v0x);

  SweepResult result;
  result.base = base;
  result.grid = grid;
  const std::size_t n_points = j_vals.size() * v_vals.size();
  result.points.resize(n_points);

  auto compute_point = [&](std::size_t index) {
    const std::size_t a = index / v_vals.size();
    const std::size_t b = index % v_vals.size();
    TwoSiteParams p = base;
    p.J0x = j_vals[a];
    p.V0x = v_vals[b];
    const ManyBodyOperator h = build_two_site(p);

    HeatmapPoint point;
    point.j0x = p.J0x;
    point.v0x = p.V0x;
    double sum = 0.0;
    for (int e = 0; e < 4; ++e) {
      const MaxSeparability m = max_separability(h, e, grid.bath_scan);
      point.zmax[e] = m.z_max;
      point.argmax[e] = {m.theta, m.psi, m.phi};
      sum += m.z_max;
    }
    point.mean = sum / 4.0;
    double var = 0.0;
    for (double z : point.zmax) var += (z - point.mean) * (z - point.mean);
    point.stddev = std::sqrt(var / 4.0);
    result.points[index] = point;
  };

  int n_workers = workers > 0
                      ? workers
                      : static_cast<int>(
                            std::max(1u, std::thread::hardware_concurrency()));
  n_workers = static_cast<int>(
      std::min<std::size_t>(n_workers, n_points));
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < n_points; ++i) compute_point(i);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::size_t i = w; i < n_points; i += n_workers) {
            compute_point(i);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return result;
}

void persist(const SweepResult& result, const std::string& path,
             const std::string& format) {
  if (format == "csv") {
    std::ostringstream out;
    out << "J0x,V0x,zmax_gs,zmax_e1,zmax_e2,zmax_e3,zmax_mean,zmax_std\n";
    for (const auto& p : result.points) {
      out << fmt12(p.j0x) << ',' << fmt12(p.v0x);
      for (double z : p.zmax) out << ',' << fmt12(z);
      out << ',' << fmt12(p.mean) << ',' << fmt12(p.stddev) << '\n';
    }
    atomic_write(path, out.str());
    return;
  }
  if (format == "json") {
    nlohmann::json doc;
    doc["model"] = {{"omega0", result.base.omega0},
                    {"omega_d", {result.base.omega_d.real(),
                                 result.base.omega_d.imag()}},
                    {"V00", result.base.V00},
                    {"V0x", result.base.V0x},
                    {"Vxx", result.base.Vxx},
                    {"J0x", result.base.J0x}};
    doc["grid"] = {
        {"J0x", {result.grid.j0x.min, result.grid.j0x.max, result.grid.j0x.steps}},
        {"V0x", {result.grid.v0x.min, result.grid.v0x.max, result.grid.v0x.steps}}};
    doc["bath_scan"] = {{"n_polar", result.grid.bath_scan.n_polar},
                        {"n_azimuth", result.grid.bath_scan.n_azimuth},
                        {"n_angle", result.grid.bath_scan.n_angle},
                        {"refine_rounds", result.grid.bath_scan.refine_rounds}};
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : result.points) {
      points.push_back({{"j0x", p.j0x},
                        {"v0x", p.v0x},
                        {"zmax", p.zmax},
                        {"argmax", p.argmax},
                        {"mean", p.mean},
                        {"std", p.stddev}});
    }
    doc["points"] = std::move(points);
    atomic_write(path, doc.dump(2) + "\n");
    return;
  }
  throw InvalidInputError("persist: format must be csv or json");
}

}  // namespace qsep
