#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <variant>

#include "cavity/config.hpp"
#include "cavity/error.hpp"
#include "cavity/gaffney.hpp"
#include "cavity/piola.hpp"

namespace cavity {

namespace {

namespace fs = std::filesystem;

// run.log carries the timestamps and timings; CSV files never do.
class RunLog {
 public:
  RunLog(const fs::path& path, const RunOptions& opts) : file_(path), opts_(opts) {
    if (!file_) fail(Errc::io_failure, "cannot write " + path.string());
  }

  // Always logged; echoed to the console only in verbose mode.
  void detail(const std::string& msg) {
    stamp(msg);
    if (opts_.verbose && opts_.console) *opts_.console << msg << "\n";
  }
  // Logged and echoed.
  void info(const std::string& msg) {
    stamp(msg);
    if (opts_.console) *opts_.console << msg << "\n";
  }

 private:
  void stamp(const std::string& msg) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    file_ << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << " " << msg << "\n";
    file_.flush();
  }

  std::ofstream file_;
  const RunOptions& opts_;
};

class Job {
 public:
  Job(const RunConfig& cfg, const RunOptions& opts)
      : cfg_(cfg), threads_(opts.threads), dir_(opts.out_dir.empty() ? cfg.output : opts.out_dir), log_(prepare(dir_) / "run.log", opts) {
    result_.artifacts.push_back((dir_ / "run.log").string());
  }

  RunResult execute() {
    log_.detail("command " + std::string(to_string(cfg_.command)) + ", threads " + std::to_string(threads_));
    const auto t0 = std::chrono::steady_clock::now();
    switch (cfg_.command) {
      case Command::mesh: mesh(); break;
      case Command::solve: solve(); break;
      case Command::cube_bench: cube_bench(); break;
      case Command::sweep: sweep(); break;
      case Command::piola_verify: piola_verify(); break;
      case Command::mazya: mazya(); break;
      case Command::check_atlas: check_atlas(); break;
    }
    std::ostringstream os;
    os << "done in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s"
       << (result_.checks_passed ? "" : " (checks failed)");
    log_.detail(os.str());
    return result_;
  }

 private:
  static fs::path prepare(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(Errc::io_failure, "cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
  }

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const fs::path path = dir_ / name;
    std::ofstream f(path);
    if (!f) fail(Errc::io_failure, "cannot write " + path.string());
    writer(f);
    f.flush();
    if (!f) fail(Errc::io_failure, "write to " + path.string() + " failed");
    result_.artifacts.push_back(path.string());
    log_.detail("wrote " + path.string());
  }

  AtlasDomain base_domain() const { return cfg_.domain.empty() ? default_box_domain() : load_domain(cfg_.domain); }

  PerturbationFamily family() const {
    const SweepConfig& s = cfg_.sweep;
    return PerturbationFamily::oscillatory(base_domain(), s.alpha, s.cell, s.cutoff, s.kappa_exponent, s.chart);
  }

  EigenOptions eigen_options() const {
    EigenOptions o;
    o.count = cfg_.solver.m;
    o.tol = cfg_.solver.tol;
    o.shift = cfg_.solver.shift;
    o.block_size = cfg_.solver.block_size;
    o.max_iter = cfg_.solver.max_iter;
    o.verify_count = cfg_.solver.verify_count;
    o.seed = cfg_.solver.seed;
    return o;
  }

  // mesh/solve domain: the base, or the family member at mesh.eps.
  TetMesh domain_mesh() const {
    const AtlasDomain dom = cfg_.mesh.eps > 0.0 ? family().at(cfg_.mesh.eps) : base_domain();
    dom.validate();
    return box_chart_mesh(dom, cfg_.mesh.n, cfg_.mesh.policy);
  }

  void mesh() {
    const TetMesh m = domain_mesh();
    const MeshQuality q = mesh_quality(m);
    write("mesh.txt", [&](std::ostream& os) { write_mesh(os, m); });
    write("mesh_quality.csv", [&](std::ostream& os) {
      os << "# cavity-mesh-quality 1\n";
      os << "vertices,tets,boundary_faces,volume,min_signed_volume,max_aspect_ratio,h_max,watertight\n";
      os << std::setprecision(12) << m.vertices.size() << ',' << m.tets.size() << ',' << m.boundary_faces.size()
         << ',' << m.volume() << ',' << q.min_signed_volume << ',' << q.max_aspect_ratio << ',' << q.h_max << ','
         << (is_watertight(m) ? 1 : 0) << '\n';
    });
    std::ostringstream os;
    os << "mesh: " << m.vertices.size() << " vertices, " << m.tets.size() << " tets, max aspect "
       << q.max_aspect_ratio;
    log_.info(os.str());
  }

  void solve() {
    const FemSpace space = build_space(domain_mesh(), cfg_.solver.order);
    const FemForms forms(space);
    const SparseSymOp M = forms.mass();
    Spectrum s = solve_gevp(forms.stiffness(cfg_.solver.tau), M, eigen_options());
    classify_modes(s, M, forms.div_div(), cfg_.solver.tau);
    write("spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, s); });
    std::ostringstream os;
    os << "solve: " << space.free_dofs() << " dofs, eigenvalues";
    for (int i = 0; i < s.size(); ++i) os << " " << s.eigenvalues[i];
    log_.info(os.str());
  }

  void cube_bench() {
    const CubeConfig& c = cfg_.cube;
    const CubeBenchmark b = cube_benchmark(cfg_.solver.tau, cfg_.mesh.n, cfg_.solver.order, cfg_.solver.m, c.window,
                                           eigen_options());
    const bool covered = static_cast<int>(b.rows.size()) >= c.clusters;
    const bool ok = covered && b.pass(c.clusters, c.window);
    result_.checks_passed = ok;
    write("spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, benchmark_spectrum(b, c.clusters)); });
    write("cube.csv", [&](std::ostream& os) { write_cube_csv(os, b, c.clusters); });
    std::ostringstream os;
    os << "cube-bench: " << b.dofs << " dofs, " << std::min<int>(b.rows.size(), c.clusters) << " of " << c.clusters
       << " clusters paired, " << (ok ? "all within " : "not all within ") << c.window << " relative";
    log_.info(os.str());
    if (!covered) log_.info("cube-bench: solver.m is too small to cover the requested clusters");
    {
      std::ostringstream t;
      t << "cube-bench solve " << b.seconds << " s";
      log_.detail(t.str());
    }

    if (c.tau_factors.empty()) return;
    const TaggedValues base = benchmark_tagged_values(b, c.clusters);
    std::vector<TauComparison> comparisons;
    for (double tau : c.tau_factors) {
      TauComparison cmp;
      cmp.scaled = cube_tagged_values(tau * cfg_.solver.tau, cfg_.mesh.n, cfg_.solver.order, c.tau_m, c.window_shifts,
                                      c.window_count, eigen_options());
      cmp.report = compare_tau_branches(base, cmp.scaled, tau);
      std::ostringstream t;
      t << "tau x" << tau << ": max gradient deviation " << cmp.report.max_gradient_deviation
        << ", max maxwell change " << cmp.report.max_maxwell_change;
      log_.info(t.str());
      comparisons.push_back(std::move(cmp));
    }
    write("tau.csv", [&](std::ostream& os) { write_tau_csv(os, base, comparisons); });
  }

  void sweep() {
    const SweepConfig& s = cfg_.sweep;
    SweepOptions o = make_sweep_options();
    o.mesh = cfg_.mesh.policy;
    o.solver = eigen_options();
    o.tau = cfg_.solver.tau;
    o.track = s.track;
    o.gap_tol = s.gap_tol;
    o.cluster_tol = s.cluster_tol;
    o.e_clusters = s.e_clusters;
    o.e_quad = s.e_quad;
    o.gaffney = s.gaffney;
    o.log = [this](const std::string& msg) { log_.detail(msg); };
    const SweepReport r = sweep_epsilon(family(), s.alpha, s.eps_list, o);
    result_.checks_passed = r.exploratory || r.pass();
    write("report.csv", [&](std::ostream& os) { write_sweep_csv(os, r); });
    std::ostringstream summary;
    write_sweep_summary(summary, r);
    std::istringstream lines(summary.str());
    for (std::string line; std::getline(lines, line);) log_.info(line);
  }

  void piola_verify() {
    const PerturbationFamily fam = family();
    const AtlasChart& chart = fam.base.atlas.charts.at(cfg_.sweep.chart);
    const Rect W = chart.base_rect();
    const double z_lo = chart.bounds[2].lo;
    const double top = fam.base.profiles.at(cfg_.sweep.chart).value(Vec2(0.5 * (W.x.lo + W.x.hi), 0.5 * (W.y.lo + W.y.hi)));
    const PiolaQuadrature quad{cfg_.piola.points, cfg_.piola.cells};
    std::vector<PiolaMap> maps;
    for (double eps : cfg_.sweep.eps_list) maps.push_back(PiolaMap::from_family(fam, eps, cfg_.piola.margin));
    for (const auto& name : cfg_.piola.fields) {
      const AnalyticVectorField phi = box_test_field(name, W, z_lo, top);
      std::vector<PiolaReport> rows;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        rows.push_back(verify_piolamain(phi, maps[i], quad));
        rows.back().eps = cfg_.sweep.eps_list[i];
      }
      bool ok = true;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ok = ok && rows[i].identity_on_compact == 0.0;
        if (i > 0)
          ok = ok && rows[i].overlap_distance < rows[i - 1].overlap_distance &&
               std::abs(rows[i].norm_target - rows[i].norm_source) <
                   std::abs(rows[i - 1].norm_target - rows[i - 1].norm_source);
      }
      result_.checks_passed = result_.checks_passed && ok;
      write("piola_" + name + ".csv", [&](std::ostream& os) { write_piola_csv(os, rows); });
      log_.info("piola-verify " + name + ": " + (ok ? "identity exact, distances decreasing" : "checks failed"));
    }
  }

  // Sampled bound min(L t, 2 G) from the gradient over the largest ball.
  ModulusOfContinuity sampled_modulus(const ProfileFunction& g, const Vec2& xbar, double rho) const {
    const int n = 96;
    const double h = 2.0 * rho / n;
    std::vector<Vec2> grad((n + 1) * (n + 1));
    double G = 0.0, L = 0.0;
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        const Vec2 x = xbar + Vec2(-rho + i * h, -rho + j * h);
        grad[j * (n + 1) + i] = g.gradient(x);
        if ((x - xbar).norm() <= rho) G = std::max(G, grad[j * (n + 1) + i].norm());
        if (i > 0) L = std::max(L, (grad[j * (n + 1) + i] - grad[j * (n + 1) + i - 1]).norm() / h);
        if (j > 0) L = std::max(L, (grad[j * (n + 1) + i] - grad[(j - 1) * (n + 1) + i]).norm() / h);
      }
    return ModulusOfContinuity::power(1.0, L, std::max(2.0 * G, std::numeric_limits<double>::min()));
  }

  ModulusOfContinuity modulus(const ProfileFunction& g, double rho) const {
    const ModulusConfig& m = cfg_.mazya.modulus;
    if (m.kind == "power") return ModulusOfContinuity::power(m.exponent, m.coefficient, m.cap);
    if (m.kind == "lipschitz_capped") return ModulusOfContinuity::lipschitz_capped(m.slope);
    if (m.kind == "log_counterexample") return ModulusOfContinuity::log_counterexample();
    const double s = std::abs(g.scale());
    if (g.kind() == ProfileKind::log_counterexample && s == 1.0) return ModulusOfContinuity::log_counterexample();
    if (const auto* p = std::get_if<ProfileFunction::HoelderPower>(&g.params()); p && p->power < 2.0)
      return ModulusOfContinuity::power(p->power - 1.0, s * std::abs(p->coefficient) * p->power * std::pow(2.0, 2.0 - p->power));
    return sampled_modulus(g, cfg_.mazya.xbar, rho);
  }

  void mazya() {
    const MazyaConfig& m = cfg_.mazya;
    const auto rows = mazya_criterion(m.profile, m.xbar, m.delta, m.rho_list, m.dimension, m.quad_n);
    const double rho_max = *std::max_element(m.rho_list.begin(), m.rho_list.end());
    const ModulusOfContinuity omega = modulus(m.profile, rho_max);
    const DiniResult dini = dini_integral(omega, 1e-12 * rho_max, rho_max);
    write("mazya.csv", [&](std::ostream& os) { write_mazya_csv(os, std::string(to_string(m.profile.kind())), rows, dini); });
    bool flagged = false;
    for (const auto& r : rows) flagged = flagged || r.flagged;
    result_.checks_passed = !flagged && !dini.divergent;
    std::ostringstream os;
    os << "mazya: " << rows.size() << " radii, dini " << (dini.divergent ? "divergent" : "finite")
       << (flagged ? ", D32 quadrature flagged" : "");
    log_.info(os.str());
  }

  void check_atlas() {
    const PerturbationFamily fam = family();
    fam.base.validate();
    const AtlasCheckConfig& a = cfg_.atlas;
    const double base_norm = check_atlas_class(fam.base, a.k, a.gamma, a.grid_n);
    const ConvergenceReport conv = check_convergence_conditions(fam, cfg_.sweep.eps_list, a.grid_n);
    std::vector<double> norms;
    for (double eps : cfg_.sweep.eps_list) {
      const AtlasDomain d = fam.at(eps);
      d.validate();
      norms.push_back(check_atlas_class(d, a.k, a.gamma, a.grid_n));
    }
    write("atlas.csv", [&](std::ostream& os) {
      os << "# cavity-atlas 1\n";
      os << "eps,kappa,sup_gap,ratio0,ratio1,ratio2,kappa_dominates,class_norm\n";
      os << std::setprecision(12) << 0 << ",,,,,,," << base_norm << '\n';
      for (std::size_t i = 0; i < conv.rows.size(); ++i) {
        const ConvergenceRow& r = conv.rows[i];
        os << r.eps << ',' << r.kappa << ',' << r.sup_gap << ',' << r.ratios[0] << ',' << r.ratios[1] << ','
           << r.ratios[2] << ',' << (r.kappa_dominates ? 1 : 0) << ',' << norms[i] << '\n';
      }
    });
    result_.checks_passed = conv.all_decreasing();
    std::ostringstream os;
    os << "check-atlas: base class norm " << base_norm << ", kappa conditions "
       << (conv.all_decreasing() ? "decreasing" : "not decreasing");
    log_.info(os.str());
  }

  const RunConfig& cfg_;
  int threads_;
  fs::path dir_;
  RunLog log_;
  RunResult result_;
};

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) { return Job(config, options).execute(); }

}  // namespace cavity
