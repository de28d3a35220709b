#include "repulsion/cli.hpp"

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "repulsion/certify.hpp"
#include "repulsion/descent.hpp"
#include "repulsion/errors.hpp"
#include "repulsion/io.hpp"

namespace repulsion::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kCertificateFailed = 1;
constexpr int kBadInput = 2;
constexpr int kStalled = 3;

struct DescentOptions {
  std::string manifold = "sphere:2";
  std::string kernel;
  std::string out = ".";
  std::string init;
  DescentConfig cfg;
};

void add_descent_options(CLI::App* sub, DescentOptions& o) {
  auto& c = o.cfg;
  sub->add_option("--manifold", o.manifold, "euclidean:d, sphere:d or hyperbolic:d:K=<K>")->capture_default_str();
  sub->add_option("--kernel", o.kernel, "power:delta=, attrep:alpha=,beta=, cospow:p=, table:path=");
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--atoms", c.n_atoms)->capture_default_str();
  sub->add_option("--max-iters", c.max_iters)->capture_default_str();
  sub->add_option("--step", c.step_init)->capture_default_str();
  sub->add_option("--backtrack", c.backtrack_factor)->capture_default_str();
  sub->add_option("--armijo-c", c.armijo_c)->capture_default_str();
  sub->add_option("--weight-step", c.weight_step)->capture_default_str();
  sub->add_option("--merge-eps", c.merge_eps)->capture_default_str();
  sub->add_option("--merge-every", c.merge_every)->capture_default_str();
  sub->add_option("--anneal-temp", c.anneal_temp0)->capture_default_str();
  sub->add_option("--anneal-decay", c.anneal_decay)->capture_default_str();
  sub->add_option("--grad-tol", c.stop_grad_tol)->capture_default_str();
  sub->add_option("--seed", c.seed)->capture_default_str();
  sub->add_option("--restarts", c.restarts)->capture_default_str();
  sub->add_option("--confine-radius", c.confine_radius, "euclidean only; 0 disables")->capture_default_str();
  sub->add_option("--workers", c.workers)->capture_default_str();
}

ojson descent_echo(const DescentOptions& o) {
  const auto& c = o.cfg;
  ojson j;
  j["manifold"] = o.manifold;
  j["kernel"] = o.kernel;
  if (!o.init.empty()) j["init"] = o.init;
  j["atoms"] = c.n_atoms;
  j["max_iters"] = c.max_iters;
  j["step"] = c.step_init;
  j["backtrack"] = c.backtrack_factor;
  j["armijo_c"] = c.armijo_c;
  j["weight_step"] = c.weight_step;
  j["merge_eps"] = c.merge_eps;
  j["merge_every"] = c.merge_every;
  j["anneal_temp"] = c.anneal_temp0;
  j["anneal_decay"] = c.anneal_decay;
  j["grad_tol"] = c.stop_grad_tol;
  j["seed"] = c.seed;
  j["restarts"] = c.restarts;
  j["confine_radius"] = c.confine_radius;
  j["workers"] = c.workers;
  j["mode"] = c.mode == EvalMode::certified ? "certified" : "fast";
  return j;
}

Kernel require_kernel(const std::string& spec) {
  if (spec.empty()) throw InvalidInput("missing required key: kernel");
  return Kernel::parse(spec);
}

int cmd_minimize(DescentOptions& o) {
  const auto M = Manifold::parse(o.manifold);
  const auto F = require_kernel(o.kernel);
  o.cfg.mode = default_eval_mode();
  o.cfg.validate();
  fs::create_directories(o.out);

  Trajectory traj = [&] {
    if (o.init.empty()) return multi_start(M, F, o.cfg);
    return minimize(M, F, io::read_measure(o.init, M), o.cfg);
  }();
  const auto support = support_clusters(traj.final, o.cfg.merge_eps).size();

  io::write_measure(fs::path(o.out) / "final_measure.csv", traj.final);
  io::write_file_atomic(fs::path(o.out) / "trajectory.csv", io::trajectory_csv(traj));
  ojson summary;
  summary["final_energy"] = traj.final_energy;
  summary["support_card"] = support;
  summary["converged"] = traj.converged;
  summary["iterations"] = traj.iterations;
  summary["seed"] = o.cfg.seed;
  summary["best_restart"] = traj.restart;
  summary["best_restart_seed"] = traj.seed;
  summary["config"] = descent_echo(o);
  io::write_file_atomic(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
  std::printf("final_energy %s\nsupport_card %zu\n", io::format_double(traj.final_energy).c_str(), support);
  return kOk;
}

struct CertifyOptions {
  std::string measure;
  std::string manifold;
  std::string kernel;
  std::string compare;
  std::string out = ".";
  double ball_radius = 0.0;
  double r0 = 0.0;
  int samples = 1000;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  double rel_tol = 1e-6;
  double support_tol = 1e-6;
  double energy_tol = 1e-9;
};

int cmd_certify(const CertifyOptions& o) {
  std::optional<Manifold> declared;
  if (!o.manifold.empty()) declared = Manifold::parse(o.manifold);
  const auto mu = io::read_measure(o.measure, declared);
  const auto& M = mu.manifold();
  const auto F = require_kernel(o.kernel);
  if (o.ball_radius < 0.0 || o.r0 < 0.0) throw InvalidInput("radii must be nonnegative");
  fs::create_directories(o.out);

  const double ball = o.ball_radius > 0.0 ? o.ball_radius : 0.2 * mu.diameter();
  std::vector<CertificateReport> reports;
  reports.push_back(constant_potential_check(M, F, mu, o.rel_tol));
  if (ball > 0.0) {
    reports.push_back(second_variation_check(M, F, mu, ball, o.samples, o.seed, o.tol));
  } else {
    CertificateReport vacuous;
    vacuous.condition = "second_variation";
    vacuous.tolerance = o.tol;
    vacuous.witness = "vacuous: single atom";
    vacuous.config = {{"ball_radius", 0.0}};
    reports.push_back(vacuous);
  }
  const auto cls = F.classify();
  if (cls.kind == RepulsionKind::weakly_repulsive) {
    double r0 = o.r0 > 0.0 ? o.r0 : std::min(cls.decreasing_radius, ball);
    if (r0 > 0.0 && F.eval(r0) < 0.0) reports.push_back(sqrt_triangle_check(M, F, mu, r0, o.tol));
  }
  if (!o.compare.empty()) {
    const auto nu = io::read_measure(o.compare, M);
    reports.push_back(nested_support_check(M, F, mu, nu, o.support_tol, o.energy_tol));
  }

  int status = kOk;
  for (const auto& r : reports) {
    io::write_file_atomic(fs::path(o.out) / (r.condition + ".json"), io::certificate_json(r));
    std::printf("%-18s %s  worst_margin %s  samples %lld\n", r.condition.c_str(), r.passed ? "PASS" : "FAIL",
                io::format_double(r.worst_margin).c_str(), static_cast<long long>(r.samples_checked));
    if (!r.passed) {
      std::fprintf(stderr, "certificate failed: %s (%s)\n", r.condition.c_str(), r.witness.c_str());
      status = kCertificateFailed;
    }
  }
  return status;
}

int cmd_sweep(DescentOptions& o, const std::string& deltas) {
  const auto M = Manifold::parse(o.manifold);
  if (!o.kernel.empty()) throw InvalidInput("sweep takes --deltas, not --kernel");
  std::vector<double> list;
  {
    std::istringstream is(deltas);
    std::string item;
    while (std::getline(is, item, ',')) {
      char* end = nullptr;
      const double d = std::strtod(item.c_str(), &end);
      if (item.empty() || *end != '\0') throw InvalidInput("bad delta '" + item + "'");
      list.push_back(d);
    }
  }
  if (list.empty()) throw InvalidInput("missing required key: deltas");
  o.cfg.mode = default_eval_mode();
  o.cfg.validate();
  fs::create_directories(o.out);

  std::vector<io::PhaseRow> rows;
  for (const double delta : list) {
    io::PhaseRow row;
    row.delta = delta;
    try {
      const auto F = Kernel::power_law(delta);
      const auto traj = multi_start(M, F, o.cfg);
      const auto clusters = support_clusters(traj.final, o.cfg.merge_eps);
      row.final_energy = traj.final_energy;
      row.support_card = clusters.size();
      for (const auto& c : clusters) {
        row.max_cluster_diameter = std::max(row.max_cluster_diameter, cluster_diameter(traj.final, c));
      }
    } catch (const StallError& e) {
      row.status = "stall";
      row.final_energy = std::nan("");
      std::fprintf(stderr, "delta %g: %s\n", delta, e.what());
    } catch (const std::exception& e) {
      row.status = "error";
      row.final_energy = std::nan("");
      std::fprintf(stderr, "delta %g: %s\n", delta, e.what());
    }
    std::printf("delta %s  energy %s  support %zu  %s\n", io::format_double(delta).c_str(),
                io::format_double(row.final_energy).c_str(), row.support_card, row.status.c_str());
    rows.push_back(row);
  }
  io::write_file_atomic(fs::path(o.out) / "phase_table.csv", io::phase_table_csv(rows));
  return kOk;
}

int cmd_dinf(const std::string& a, const std::string& b, const std::string& manifold) {
  std::optional<Manifold> declared;
  if (!manifold.empty()) declared = Manifold::parse(manifold);
  const auto mu = io::read_measure(a, declared);
  const auto nu = io::read_measure(b, declared);
  if (!(mu.manifold() == nu.manifold())) {
    throw InvalidInput("manifold mismatch: " + mu.manifold().to_string() + " vs " + nu.manifold().to_string());
  }
  std::printf("%.17g\n", d_infinity(mu, nu));
  return kOk;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_plot(const std::string& path, const std::string& svg, const std::string& manifold) {
  std::optional<Manifold> declared;
  if (!manifold.empty()) declared = Manifold::parse(manifold);
  const auto mu = io::read_measure(path, declared);
  const auto& M = mu.manifold();
  const bool circle = M.kind == ManifoldKind::sphere && M.dim == 1;
  const bool globe = M.kind == ManifoldKind::sphere && M.dim == 2;
  const bool plane = M.kind == ManifoldKind::euclidean && M.dim == 2;
  if (!circle && !globe && !plane) throw InvalidInput("cannot plot measures on " + M.to_string());

  constexpr double kCenter = 400.0, kRadius = 350.0;
  double scale = kRadius;
  if (plane) {
    double extent = 0.0;
    for (const auto& a : mu.atoms()) extent = std::max(extent, a.point.cwiseAbs().maxCoeff());
    scale = extent > 0.0 ? kRadius / extent : kRadius;
  }
  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n"
      "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n";
  if (circle || globe) {
    out += "<circle cx=\"400.000\" cy=\"400.000\" r=\"350.000\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
  } else {
    out += "<line x1=\"50.000\" y1=\"400.000\" x2=\"750.000\" y2=\"400.000\" stroke=\"#cccccc\"/>\n"
           "<line x1=\"400.000\" y1=\"50.000\" x2=\"400.000\" y2=\"750.000\" stroke=\"#cccccc\"/>\n";
  }
  for (const auto& a : mu.atoms()) {
    if (a.weight <= 0.0) continue;
    const double px = kCenter + scale * a.point[0];
    const double py = kCenter - scale * a.point[1];
    const double r = 3.0 + 20.0 * std::sqrt(a.weight);
    // back hemisphere drawn hollow
    const bool hidden = globe && a.point[2] < 0.0;
    out += "<circle cx=\"" + fixed(px) + "\" cy=\"" + fixed(py) + "\" r=\"" + fixed(r) + "\" " +
           (hidden ? "fill=\"none\" stroke=\"#c03030\" stroke-width=\"2\"" : "fill=\"#3050c0\" fill-opacity=\"0.8\"") +
           "/>\n";
  }
  out += "</svg>\n";
  io::write_file_atomic(svg, out);
  return kOk;
}

// Splices the key=value lines of a --config file in as flags right after the
// subcommand name, so flags given on the command line come later and win.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  std::size_t sub = 1;
  while (sub < args.size() && !app.get_subcommand_no_throw(args[sub])) ++sub;
  if (sub >= args.size()) return args;
  std::string path;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InvalidInput("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto l = s.find_first_not_of(" \t\r\"");
      if (l == std::string::npos) return std::string{};
      return s.substr(l, s.find_last_not_of(" \t\r\"") - l + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    injected.push_back("--" + key);
    injected.push_back(trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Interaction-energy minimization and local-minimizer certificates"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  DescentOptions mopt;
  auto* minimize_cmd = app.add_subcommand("minimize", "multi-start descent for one kernel");
  add_descent_options(minimize_cmd, mopt);
  minimize_cmd->add_option("--init", mopt.init, "start from this measure CSV instead of random restarts");

  DescentOptions sopt;
  std::string deltas = "-1,0.5,1,1.5,3";
  auto* sweep_cmd = app.add_subcommand("sweep", "phase table of power kernels over delta");
  add_descent_options(sweep_cmd, sopt);
  sweep_cmd->add_option("--deltas", deltas, "comma separated list")->capture_default_str();

  CertifyOptions copt;
  auto* certify_cmd = app.add_subcommand("certify", "necessary conditions for a local minimizer");
  certify_cmd->add_option("measure", copt.measure)->required();
  certify_cmd->add_option("--manifold", copt.manifold);
  certify_cmd->add_option("--kernel", copt.kernel);
  certify_cmd->add_option("--compare", copt.compare, "second measure for the nested-support check");
  certify_cmd->add_option("--out", copt.out)->capture_default_str();
  certify_cmd->add_option("--ball-radius", copt.ball_radius, "0 means 0.2 * diameter");
  certify_cmd->add_option("--r0", copt.r0, "0 means min(decreasing radius, ball radius)");
  certify_cmd->add_option("--samples", copt.samples)->capture_default_str();
  certify_cmd->add_option("--seed", copt.seed)->capture_default_str();
  certify_cmd->add_option("--tol", copt.tol)->capture_default_str();
  certify_cmd->add_option("--rel-tol", copt.rel_tol)->capture_default_str();
  certify_cmd->add_option("--support-tol", copt.support_tol)->capture_default_str();
  certify_cmd->add_option("--energy-tol", copt.energy_tol)->capture_default_str();

  std::string dinf_a, dinf_b, dinf_manifold;
  auto* dinf_cmd = app.add_subcommand("dinf", "bottleneck distance between two measures");
  dinf_cmd->add_option("a", dinf_a)->required();
  dinf_cmd->add_option("b", dinf_b)->required();
  dinf_cmd->add_option("--manifold", dinf_manifold);

  std::string plot_in, plot_out, plot_manifold;
  auto* plot_cmd = app.add_subcommand("plot", "SVG of a measure on S^1, S^2 or R^2");
  plot_cmd->add_option("measure", plot_in)->required();
  plot_cmd->add_option("svg", plot_out)->required();
  plot_cmd->add_option("--manifold", plot_manifold);

  std::string config_path;
  for (auto* sub : {minimize_cmd, sweep_cmd, certify_cmd, dinf_cmd, plot_cmd}) {
    sub->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  }

  std::vector<std::string> args;
  try {
    args = expand_config(std::vector<std::string>(argv, argv + argc), app);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }

  try {
    if (*minimize_cmd) return cmd_minimize(mopt);
    if (*sweep_cmd) return cmd_sweep(sopt, deltas);
    if (*certify_cmd) return cmd_certify(copt);
    if (*dinf_cmd) return cmd_dinf(dinf_a, dinf_b, dinf_manifold);
    if (*plot_cmd) return cmd_plot(plot_in, plot_out, plot_manifold);
  } catch (const StallError& e) {
    std::cerr << "stall: " << e.what() << "\n";
    return kStalled;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}

}  // namespace repulsion::cli
