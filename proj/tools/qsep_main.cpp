#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qsep/entanglement.hpp"
#include "qsep/io.hpp"
#include "qsep/renorm.hpp"
#include "qsep/siam.hpp"
#include "qsep/sweep.hpp"
#include "qsep/weakcoupling.hpp"

namespace {

using nlohmann::json;
using namespace qsep;

struct CommonOptions {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::string bath = "0up";
  double epsilon = 1.0;
  int workers = 0;
};

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    atomic_write(out_path, content);
  }
}

ManyBodyOperator load_model(const std::string& config_path) {
  const std::string text = read_file(config_path);
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw InvalidInputError("failed to parse " + config_path + " as JSON");
  }
  if (doc.contains("soi_dim")) {
    return load_hamiltonian_json(config_path);
  }
  return build_two_site(load_two_site_json(text, false));
}

int cmd_spectrum(const CommonOptions& opt) {
  const ManyBodyOperator h = load_model(opt.config);
  const EigenSystem es = diagonalize(h);
  json vals = json::array();
  for (int k = 0; k < es.values.size(); ++k) vals.push_back(es.values(k));
  emit(opt.out, vals.dump() + "\n");
  return 0;
}

int cmd_curves(const CommonOptions& opt, double omega_min, double omega_max,
               int samples) {
  const ManyBodyOperator h = load_model(opt.config);
  const BathState bath = resolve_bath_spec(opt.bath, h.basis.bath_dim);
  ProjectionBlocks blocks = project(h, bath);
  blocks.epsilon = opt.epsilon;

  double lo = omega_min, hi = omega_max;
  if (!(lo < hi)) {
    auto [glo, ghi] = universe_bounds(blocks);
    const double pad = 0.05 * (ghi - glo) + 1e-9;
    lo = glo - pad;
    hi = ghi + pad;
  }
  const InteractionCurves curves = trace_curves(blocks, lo, hi, samples);

  std::ostringstream csv;
  csv << "omega,branch,omega_R,slope_fd\n";
  for (int b = 0; b < curves.n_branches(); ++b) {
    for (const auto& seg : curves.segments) {
      for (int k = seg.first; k <= seg.last; ++k) {
        const int km = std::max(k - 1, seg.first);
        const int kp = std::min(k + 1, seg.last);
        double slope_fd = 0.0;
        if (kp > km) {
          slope_fd = (curves.omega_R(b, kp) - curves.omega_R(b, km)) /
                     (curves.omega_grid[kp] - curves.omega_grid[km]);
        }
        csv << fmt12(curves.omega_grid[k]) << ',' << b << ','
            << fmt12(curves.omega_R(b, k)) << ',' << fmt12(slope_fd) << '\n';
      }
    }
  }
  emit(opt.out, csv.str());
  return 0;
}

int cmd_fixed_points(const CommonOptions& opt) {
  const ManyBodyOperator h = load_model(opt.config);
  const BathState bath = resolve_bath_spec(opt.bath, h.basis.bath_dim);
  ProjectionBlocks blocks = project(h, bath);
  blocks.epsilon = opt.epsilon;

  const std::vector<FixedPointRecord> records = fixed_points_auto(blocks, {});
  const EigenSystem universe = diagonalize(h);

  json out;
  out["epsilon"] = opt.epsilon;
  out["spectral_range"] = universe.spectral_range;
  out["non_degeneracy_assumption_violated"] = universe.degenerate;

  json record_list = json::array();
  for (const auto& fp : records) {
    json r;
    r["omega_lambda"] = fp.omega_lambda;
    r["branch_id"] = fp.branch_id;
    r["slope"] = fp.slope;
    r["Z"] = fp.Z;
    r["z"] = fp.z;
    r["W"] = fp.W;
    r["static_partner"] = fp.static_partner;
    r["residual"] = fp.residual;
    r["degenerate_cluster"] = fp.degenerate_cluster;

    // Kernel-route slope diagnostic (exact resolvent value vs kernel form).
    try {
      const CouplingKernel kernel = kernel_build(blocks);
      const KernelFormResult form = kernel_quadratic_form(blocks, kernel, fp);
      r["kernel_estimate"] = form.quadratic_form;
      r["kernel_discrepancy"] = (-fp.slope) - form.quadratic_form;
    } catch (const NumericError&) {
      r["kernel_estimate"] = nullptr;
      r["kernel_discrepancy"] = nullptr;
    }

    // Entropy of the matching universe eigenstate, with the bound B(Z).
    int nearest = 0;
    for (int k = 0; k < universe.values.size(); ++k) {
      if (std::abs(universe.values(k) - fp.omega_lambda) <
          std::abs(universe.values(nearest) - fp.omega_lambda)) {
        nearest = k;
      }
    }
    r["entropy_exact"] = von_neumann(reduce(h, nearest));
    r["entropy_bound"] = entropy_bound(std::clamp(fp.Z, 0.0, 1.0));
    record_list.push_back(std::move(r));
  }
  out["records"] = std::move(record_list);
  emit(opt.out, out.dump(2) + "\n");
  return 0;
}

int cmd_bath_sweep(const CommonOptions& opt, const std::string& axis_spec,
                   int phi_steps) {
  const ManyBodyOperator h = load_model(opt.config);
  const BathState base = resolve_bath_spec(opt.bath, h.basis.bath_dim);

  std::vector<std::pair<std::string, std::array<double, 3>>> axes;
  if (axis_spec == "all") {
    axes = {{"x", {1.0, 0.0, 0.0}},
            {"y", {0.0, 1.0, 0.0}},
            {"z", {0.0, 0.0, 1.0}}};
  } else if (axis_spec == "x") {
    axes = {{"x", {1.0, 0.0, 0.0}}};
  } else if (axis_spec == "y") {
    axes = {{"y", {0.0, 1.0, 0.0}}};
  } else if (axis_spec == "z") {
    axes = {{"z", {0.0, 0.0, 1.0}}};
  } else {
    std::array<double, 3> n{};
    if (std::sscanf(axis_spec.c_str(), "%lf,%lf,%lf", &n[0], &n[1], &n[2]) !=
        3) {
      throw InvalidInputError("--axis must be x, y, z, all, or nx,ny,nz");
    }
    axes = {{axis_spec, n}};
  }

  std::ostringstream csv;
  csv << "axis,phi,z_gs,z_e1,z_e2,z_e3\n";
  for (const auto& [name, axis] : axes) {
    const PhiSweep sweep = bath_phi_sweep(h, base, axis, phi_steps);
    for (int k = 0; k < sweep.phi.size(); ++k) {
      csv << name << ',' << fmt12(sweep.phi(k));
      for (int e = 0; e < sweep.Z.rows(); ++e) {
        csv << ',' << fmt12(sweep.Z(e, k));
      }
      csv << '\n';
    }
  }
  emit(opt.out, csv.str());
  return 0;
}

int cmd_heatmap(const CommonOptions& opt) {
  const std::string text = read_file(opt.config);
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw InvalidInputError("failed to parse " + opt.config + " as JSON");
  }
  if (!doc.contains("model")) {
    throw InvalidInputError("heatmap config needs a \"model\" object");
  }
  const TwoSiteParams base = load_two_site_json(doc["model"].dump(), false);

  GridSpec grid;
  grid.j0x = {-2.0, 2.0, 81};
  grid.v0x = {-2.0, 2.0, 81};
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    auto read_axis = [&](const char* key, GridAxis fallback) {
      if (!g.contains(key)) return fallback;
      const json& a = g[key];
      if (!a.is_array() || a.size() != 3) {
        throw InvalidInputError(std::string("grid axis \"") + key +
                                "\" must be [min, max, steps]");
      }
      return GridAxis{a[0].get<double>(), a[1].get<double>(), a[2].get<int>()};
    };
    grid.j0x = read_axis("J0x", grid.j0x);
    grid.v0x = read_axis("V0x", grid.v0x);
  }
  if (doc.contains("bath_scan")) {
    const json& s = doc["bath_scan"];
    grid.bath_scan.n_polar = s.value("n_polar", grid.bath_scan.n_polar);
    grid.bath_scan.n_azimuth = s.value("n_azimuth", grid.bath_scan.n_azimuth);
    grid.bath_scan.n_angle = s.value("n_angle", grid.bath_scan.n_angle);
    grid.bath_scan.refine_rounds =
        s.value("refine_rounds", grid.bath_scan.refine_rounds);
  }
  int workers = doc.value("workers", 0);
  if (opt.workers > 0) workers = opt.workers;

  const SweepResult result = heatmap(base, grid, workers);
  if (opt.out.empty()) {
    throw InvalidInputError("heatmap requires --out");
  }
  persist(result, opt.out, opt.format);
  return 0;
}

int cmd_siam(const CommonOptions& opt, double omega_s, double delta0,
             double bandwidth, int modes) {
  const CalibratedSIAM cal = calibrate_siam(omega_s, bandwidth, modes, delta0);
  const std::vector<std::pair<double, double>> weights =
      siam_spectral_weights(cal.model);
  const BinnedDensity binned = binned_density(weights, omega_s, delta0);
  const LorentzianFit fit = lorentzian_fit(binned.centers, binned.densities);

  json out;
  out["omega_s"] = omega_s;
  out["delta0_target"] = delta0;
  out["L"] = modes;
  out["bandwidth"] = bandwidth;
  out["t0"] = cal.t0;
  out["measured_half_width"] = cal.measured_half_width;
  out["width_convention"] = "golden_rule_pi";
  json w = json::array();
  for (const auto& [omega, weight] : weights) {
    w.push_back({omega, weight});
  }
  out["weights"] = std::move(w);
  json b = json::array();
  for (std::size_t k = 0; k < binned.centers.size(); ++k) {
    b.push_back({binned.centers[k], binned.densities[k]});
  }
  out["binned"] = std::move(b);
  out["lorentzian_fit"] = {{"center", fit.center},
                           {"half_width", fit.half_width}};
  emit(opt.out, out.dump(2) + "\n");
  return 0;
}

int cmd_greens(const CommonOptions& opt, double omega_s, double delta0,
               double tmax, int samples) {
  if (samples < 2) throw InvalidInputError("greens: need at least 2 samples");
  if (tmax <= 0.0) {
    tmax = delta0 > 0.0 ? 10.0 / delta0 : 10.0;
  }
  VectorXd t_grid(samples);
  for (int k = 0; k < samples; ++k) {
    t_grid(k) = tmax * k / (samples - 1);
  }
  const VectorXcd g = greens_time(omega_s, delta0, t_grid);
  std::ostringstream csv;
  csv << "t,re_G,im_G,abs_G\n";
  for (int k = 0; k < samples; ++k) {
    csv << fmt12(t_grid(k)) << ',' << fmt12(g(k).real()) << ','
        << fmt12(g(k).imag()) << ',' << fmt12(std::abs(g(k))) << '\n';
  }
  emit(opt.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bath-projected renormalization, separability, and SIAM "
               "spectral tools"};
  app.require_subcommand(1);

  CommonOptions opt;
  double omega_min = 0.0, omega_max = 0.0;
  int samples = 2048;
  std::string axis_spec = "all";
  double omega_s = 0.0, delta0 = 0.5, bandwidth = 20.0, tmax = 0.0;
  int modes = 2000;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", opt.config, "Model/config JSON path");
    if (needs_config) c->required();
    cmd->add_option("--out", opt.out, "Output path (stdout when omitted)");
    cmd->add_option("--format", opt.format, "Output format: csv|json");
    cmd->add_option("--workers", opt.workers, "Worker thread count");
    cmd->add_option("--bath", opt.bath,
                    "Bath state: \"0up\" or a JSON file path");
    cmd->add_option("--epsilon", opt.epsilon,
                    "Interaction scale in [0, 1] (default 1)");
  };

  CLI::App* spectrum = app.add_subcommand("spectrum", "Universe eigenvalues");
  add_common(spectrum, true);

  CLI::App* curves = app.add_subcommand(
      "curves", "Renormalized interaction curves omega_R(omega)");
  add_common(curves, true);
  curves->add_option("--omega-min", omega_min, "Lower edge of the omega grid");
  curves->add_option("--omega-max", omega_max, "Upper edge of the omega grid");
  curves->add_option("--samples", samples, "Grid samples (default 2048)");

  CLI::App* fixed_points = app.add_subcommand(
      "fixed-points", "Fixed points with Z, z, W, entropy diagnostics");
  add_common(fixed_points, true);

  CLI::App* bath_sweep = app.add_subcommand(
      "bath-sweep", "Z(phi) traces under Bloch rotations of the bath");
  add_common(bath_sweep, true);
  bath_sweep->add_option("--axis", axis_spec,
                         "Rotation axis: x|y|z|all|nx,ny,nz");
  bath_sweep->add_option("--samples", samples, "Angle steps (default 2048)");

  CLI::App* heatmap_cmd = app.add_subcommand(
      "heatmap", "Max-separability heatmap over the (J0x, V0x) plane");
  add_common(heatmap_cmd, true);

  CLI::App* siam = app.add_subcommand(
      "siam", "Calibrated finite-bath impurity spectral function");
  add_common(siam, false);
  siam->add_option("--omega-s", omega_s, "Impurity level (default 0)");
  siam->add_option("--delta0", delta0, "Target half-width (default 0.5)");
  siam->add_option("--bandwidth", bandwidth, "Bath bandwidth (default 20)");
  siam->add_option("--modes", modes, "Bath mode count L (default 2000)");

  CLI::App* greens = app.add_subcommand(
      "greens", "Time-domain impurity Green's function");
  add_common(greens, false);
  greens->add_option("--omega-s", omega_s, "Impurity level (default 0)");
  greens->add_option("--delta0", delta0, "Decay rate (default 0.5)");
  greens->add_option("--tmax", tmax, "Final time (default 10/delta0)");
  greens->add_option("--samples", samples, "Time samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(opt);
    if (curves->parsed()) return cmd_curves(opt, omega_min, omega_max, samples);
    if (fixed_points->parsed()) return cmd_fixed_points(opt);
    if (bath_sweep->parsed()) {
      return cmd_bath_sweep(opt, axis_spec, samples == 2048 ? 64 : samples);
    }
    if (heatmap_cmd->parsed()) return cmd_heatmap(opt);
    if (siam->parsed()) {
      return cmd_siam(opt, omega_s, delta0, bandwidth, modes);
    }
    if (greens->parsed()) {
      return cmd_greens(opt, omega_s, delta0, tmax,
                        samples == 2048 ? 101 : samples);
    }
    throw InvalidInputError("no command selected");
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
