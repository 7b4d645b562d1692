#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pencrit/asymptotics.hpp"
#include "pencrit/error.hpp"
#include "pencrit/estimate.hpp"
#include "pencrit/experiments.hpp"
#include "pencrit/io.hpp"
#include "pencrit/log.hpp"
#include "pencrit/select.hpp"
#include "pencrit/simulate.hpp"

namespace pencrit::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string data;
  std::string family;
  std::string candidates = "nested";
  std::string penalty = "log";
  std::string theta;
  std::string subset;
  std::string m_star;
  std::string m_tilde;
  std::string innovation = "gaussian";
  std::string emission = "poisson";
  std::string plan;
  std::string out;
  std::string csv;
  std::string plot_data;
  std::size_t n = 0;
  std::size_t burn_in = kDefaultBurnIn;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  int starts = OptimizerOptions{}.starts;
  double kappa = 1.0;
  std::size_t draws = 100000;
  bool trace = false;
  bool sandwich = false;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_text_file(path, content);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

FamilySpec family_of(const Options& o) {
  if (o.family.empty()) throw InvalidArgument("--family is required");
  return load_family_config(o.family);
}

Trajectory data_of(const Options& o, const FamilySpec& spec) {
  if (o.data.empty()) throw InvalidArgument("--data is required");
  auto traj = read_trajectory_csv(o.data, spec.is_count_family() ? SeriesKind::Count : SeriesKind::Real);
  if (traj.obs_dim() != static_cast<std::size_t>(spec.obs_dim())) {
    throw InvalidArgument(o.data + ": has " + std::to_string(traj.obs_dim()) + " y columns, family needs " +
                          std::to_string(spec.obs_dim()));
  }
  if (traj.cov_dim() != static_cast<std::size_t>(spec.cov_dim())) {
    throw InvalidArgument(o.data + ": has " + std::to_string(traj.cov_dim()) + " x columns, family needs " +
                          std::to_string(spec.cov_dim()));
  }
  return traj;
}

OptimizerOptions optimizer_of(const Options& o) {
  OptimizerOptions opt;
  if (o.starts < 1) throw InvalidArgument("--starts must be >= 1");
  opt.starts = o.starts;
  opt.record_trace = o.trace;
  return opt;
}

ModelSubset subset_of(const std::string& text, const FamilySpec& spec, const char* flag) {
  if (text.empty()) throw InvalidArgument(std::string(flag) + " is required");
  auto m = ModelSubset::parse(text);
  m.check_range(static_cast<std::size_t>(spec.param_dim()));
  return m;
}

int run_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto spec = family_of(o);
  if (o.theta.empty()) throw InvalidArgument("--theta is required");
  if (o.n == 0) throw InvalidArgument("--n must be >= 1");
  const auto theta = parse_param_vector(o.theta, spec);
  const auto innovation = parse_innovation(o.innovation);
  const auto emission = parse_emission(o.emission);
  const std::uint64_t seed = resolve_seed(o);
  const auto traj = simulate(spec, theta, o.n, o.burn_in, innovation, emission, RngStream{seed, 0});
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  emit(o.out, csv.str(), out);
  if (!o.out.empty() && o.out != "-") {
    json meta{{"command", "simulate"},
              {"family", to_json(spec)},
              {"theta", parse_real_list(o.theta)},
              {"n", o.n},
              {"burn_in", o.burn_in},
              {"seed", seed},
              {"innovation", o.innovation},
              {"emission", o.emission}};
    write_text_file(o.out + ".meta.json", dump(meta));
  } else if (!o.seed) {
    err << "seed: " << seed << "\n";
  }
  return kExitOk;
}

void err_note(const FitResult& fit) {
  logger().warn("fit on {} did not meet the convergence tolerances (projected gradient {:.3g})", fit.subset.to_string(),
                fit.gradient_norm);
}

int run_fit(const Options& o, std::ostream& out) {
  const auto spec = family_of(o);
  const auto traj = data_of(o, spec);
  const auto m = o.subset.empty() ? ModelSubset::full(static_cast<std::size_t>(spec.param_dim()))
                                  : subset_of(o.subset, spec, "--subset");
  const auto fit = fit_mce(spec, traj, m, optimizer_of(o));
  json j = to_json(fit);
  if (o.sandwich) j["sandwich"] = to_json(estimate_sandwich(spec, traj, fit));
  j["config"] = {{"command", "fit"}, {"data", o.data},     {"family", to_json(spec)},
                 {"subset", to_json(m)}, {"starts", o.starts}};
  emit(o.out, dump(j), out);
  if (!fit.converged) err_note(fit);
  return kExitOk;
}

int run_select(const Options& o, std::ostream& out) {
  const auto spec = family_of(o);
  const auto traj = data_of(o, spec);
  const auto candidates = parse_candidates(o.candidates, spec);
  const auto sched = parse_penalty(o.penalty);
  const auto sel = select_model(spec, traj, candidates, sched, optimizer_of(o));
  json j = to_json(sel);
  j["config"] = {{"command", "select"}, {"data", o.data},       {"family", to_json(spec)},
                 {"candidates", o.candidates}, {"penalty", sched.name()}, {"n", traj.size()},
                 {"starts", o.starts}};
  emit(o.out, dump(j), out);
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_selection_csv(csv, sel);
    write_text_file(o.csv, csv.str());
  }
  return kExitOk;
}

int run_limits(const Options& o, std::ostream& out) {
  const auto spec = family_of(o);
  const auto m_star = subset_of(o.m_star, spec, "--m-star");
  const auto m_tilde = subset_of(o.m_tilde, spec, "--m-tilde");
  if (!m_star.is_strict_subset_of(m_tilde)) {
    throw InvalidArgument("--m-star " + m_star.to_string() + " must be a strict subset of --m-tilde " +
                          m_tilde.to_string());
  }
  if (!(o.kappa >= 0.0)) throw InvalidArgument("--kappa must be >= 0");
  if (o.draws < kMinOverfitDraws) throw InvalidArgument("--draws must be >= 10000");
  const std::uint64_t seed = resolve_seed(o);
  json config{{"command", "limits"}, {"family", to_json(spec)}, {"m_star", to_json(m_star)},
              {"m_tilde", to_json(m_tilde)}, {"kappa", o.kappa}, {"draws", o.draws}, {"seed", seed}};
  Trajectory traj;
  if (!o.data.empty()) {
    traj = data_of(o, spec);
    config["data"] = o.data;
  } else {
    if (o.theta.empty() || o.n == 0) throw InvalidArgument("limits needs --data, or --theta with --n to simulate");
    traj = simulate(spec, parse_param_vector(o.theta, spec), o.n, o.burn_in, parse_innovation(o.innovation),
                    parse_emission(o.emission), RngStream{seed, 0});
    config["theta"] = parse_real_list(o.theta);
    config["n"] = o.n;
    config["burn_in"] = o.burn_in;
  }
  const auto jl = joint_limit_matrices(spec, traj, m_star, m_tilde, optimizer_of(o));
  const auto p = overfit_probability(jl, o.kappa, m_tilde.size() - m_star.size(), o.draws, RngStream{seed, 1});
  json j = to_json(jl);
  j["overfit_probability"] = {{"kappa", o.kappa}, {"prob", p.prob}, {"mc_stderr", p.mc_stderr}};
  j["config"] = config;
  emit(o.out, dump(j), out);
  return kExitOk;
}

int run_experiment_cmd(const Options& o, std::ostream& out) {
  if (o.plan.empty()) throw InvalidArgument("--plan is required");
  auto plan = load_plan(o.plan);
  if (o.seed) plan.base_seed = *o.seed;
  if (o.threads > 0) plan.threads = o.threads;
  const std::string out_path = !o.out.empty() ? o.out : plan.output_path;
  const auto report = run_experiment(plan);
  json j = to_json(report);
  j["config"] = to_json(plan);
  emit(out_path, dump(j), out);
  if (!out_path.empty() && out_path != "-") {
    std::ostringstream csv;
    write_cells_csv(csv, report);
    write_text_file(o.csv.empty() ? out_path + ".cells.csv" : o.csv, csv.str());
  }
  if (!o.plot_data.empty()) {
    std::ostringstream csv;
    write_plot_data(csv, report);
    write_text_file(o.plot_data, csv.str());
  }
  return kExitOk;
}

void build(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto* sim = app.add_subcommand("simulate", "Simulate a trajectory and write it as CSV");
  sim->add_option("--family", o.family, "Family config file")->required();
  sim->add_option("--theta", o.theta, "True parameter, comma-separated")->required();
  sim->add_option("--n", o.n, "Sample size")->required();
  sim->add_option("--burn-in", o.burn_in, "Discarded warm-up steps")->capture_default_str();
  sim->add_option("--seed", o.seed, "Random seed (drawn and recorded when omitted)");
  sim->add_option("--innovation", o.innovation, "gaussian | student:nu")->capture_default_str();
  sim->add_option("--emission", o.emission, "poisson | negbin:r")->capture_default_str();
  sim->add_option("--out", o.out, "Output CSV (stdout when omitted); metadata goes to <out>.meta.json");

  auto* fit = app.add_subcommand("fit", "Minimum contrast fit of one model");
  fit->add_option("--data", o.data, "Trajectory CSV")->required();
  fit->add_option("--family", o.family, "Family config file")->required();
  fit->add_option("--subset", o.subset, "Free coordinates, 1-based (default: all)");
  fit->add_option("--starts", o.starts, "Optimizer starts")->capture_default_str();
  fit->add_flag("--trace", o.trace, "Record the optimizer trace");
  fit->add_flag("--sandwich", o.sandwich, "Add F, G and Sigma at the fit");
  fit->add_option("--out", o.out, "Output JSON (stdout when omitted)");

  auto* sel = app.add_subcommand("select", "Penalized contrast model selection");
  sel->add_option("--data", o.data, "Trajectory CSV")->required();
  sel->add_option("--family", o.family, "Family config file")->required();
  sel->add_option("--candidates", o.candidates, "nested:K | nested | all | file:path")->capture_default_str();
  sel->add_option("--penalty", o.penalty, "const:c | loglog:c | log | sqrt | file:path")->capture_default_str();
  sel->add_option("--starts", o.starts, "Optimizer starts")->capture_default_str();
  sel->add_option("--out", o.out, "Output JSON (stdout when omitted)");
  sel->add_option("--csv", o.csv, "Also write the criterion table as CSV");

  auto* lim = app.add_subcommand("limits", "Joint limit matrices and bounded-penalty overfit probability");
  lim->add_option("--family", o.family, "Family config file")->required();
  lim->add_option("--m-star", o.m_star, "Smaller model, 1-based")->required();
  lim->add_option("--m-tilde", o.m_tilde, "Larger model, 1-based")->required();
  lim->add_option("--data", o.data, "Trajectory CSV (or simulate with --theta and --n)");
  lim->add_option("--theta", o.theta, "Parameter to simulate from");
  lim->add_option("--n", o.n, "Simulated sample size");
  lim->add_option("--burn-in", o.burn_in, "Discarded warm-up steps")->capture_default_str();
  lim->add_option("--innovation", o.innovation, "gaussian | student:nu")->capture_default_str();
  lim->add_option("--emission", o.emission, "poisson | negbin:r")->capture_default_str();
  lim->add_option("--kappa", o.kappa, "Limit of the bounded penalty")->capture_default_str();
  lim->add_option("--draws", o.draws, "Monte Carlo draws of W")->capture_default_str();
  lim->add_option("--seed", o.seed, "Random seed (drawn and recorded when omitted)");
  lim->add_option("--starts", o.starts, "Optimizer starts")->capture_default_str();
  lim->add_option("--out", o.out, "Output JSON (stdout when omitted)");

  auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo plan config");
  exp->add_option("--plan", o.plan, "Plan config file")->required();
  exp->add_option("--seed", o.seed, "Override the plan's base_seed");
  exp->add_option("--threads", o.threads, "Worker threads (0 = auto)")->capture_default_str();
  exp->add_option("--out", o.out, "Report JSON (default: plan output, else stdout)");
  exp->add_option("--csv", o.csv, "Per-cell CSV (default: <out>.cells.csv)");
  exp->add_option("--plot-data", o.plot_data, "Tidy CSV for plotting");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized contrast model selection for time series", "pencrit"};
  Options o;
  build(app, o);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return run_simulate(o, out, err);
    if (name == "fit") return run_fit(o, out);
    if (name == "select") return run_select(o, out);
    if (name == "limits") return run_limits(o, out);
    return run_experiment_cmd(o, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ComputationError& e) {
    err << "computation failed: " << e.what() << "\n";
    return kExitComputation;
  } catch (const std::exception& e) {
    err << "computation failed: " << e.what() << "\n";
    return kExitComputation;
  }
}

}  // namespace pencrit::cli
