#include "pencrit/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pencrit/error.hpp"
#include "pencrit/log.hpp"

namespace pencrit {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

template <class Int>
bool parse_int(const std::string& text, Int& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

double require_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  if (!parse_double(text, v)) throw ParseError(what + ": '" + text + "' is not a number");
  return v;
}

std::size_t require_size(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  if (!parse_int(text, v)) throw ParseError(what + ": '" + text + "' is not a non-negative integer");
  return v;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write file '" + path + "'");
  out << content;
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

// ---------------------------------------------------------------- key=value config

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.entries_.count(key) > 0) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                       std::to_string(cfg.entries_.at(key).line) + ")");
    }
    cfg.entries_.emplace(key, Entry{value, lineno});
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) { return parse(read_text_file(path), path); }

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

const KeyValueConfig::Entry& KeyValueConfig::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ParseError(source_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

void KeyValueConfig::reject_unknown(const std::vector<std::string>& known,
                                    const std::vector<std::string>& prefixes) const {
  for (const auto& [key, entry] : entries_) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    const bool prefixed = std::any_of(prefixes.begin(), prefixes.end(),
                                      [&](const std::string& p) { return key.rfind(p, 0) == 0; });
    if (!prefixed) fail(key, "unknown key");
  }
}

void KeyValueConfig::fail(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  throw ParseError(where + ": key '" + key + "': " + message);
}

namespace {

template <class F>
auto with_key(const KeyValueConfig& cfg, const std::string& key, F&& f) -> decltype(f(std::string{})) {
  try {
    return f(cfg.at(key).value);
  } catch (const ParseError& e) {
    cfg.fail(key, e.what());
  } catch (const InvalidArgument& e) {
    cfg.fail(key, e.what());
  }
}

int config_int(const KeyValueConfig& cfg, const std::string& key, int fallback) {
  if (!cfg.has(key)) return fallback;
  return with_key(cfg, key, [](const std::string& v) {
    int out = 0;
    if (!parse_int(v, out)) throw ParseError("'" + v + "' is not an integer");
    return out;
  });
}

double config_double(const KeyValueConfig& cfg, const std::string& key, double fallback) {
  if (!cfg.has(key)) return fallback;
  return with_key(cfg, key, [](const std::string& v) { return require_double(v, "value"); });
}

std::size_t config_size(const KeyValueConfig& cfg, const std::string& key, std::size_t fallback) {
  if (!cfg.has(key)) return fallback;
  return with_key(cfg, key, [](const std::string& v) { return require_size(v, "value"); });
}

}  // namespace

const std::vector<std::string>& family_config_keys() {
  static const std::vector<std::string> keys{"family", "p", "q", "cov_dim", "h_floor", "c_floor"};
  return keys;
}

namespace {

FamilySpec family_from_checked(const KeyValueConfig& cfg) {
  const auto kind = with_key(cfg, "family", [](const std::string& v) { return family_kind_from_string(v); });
  FamilySpec spec = FamilySpec::arx(1);
  try {
    switch (kind) {
      case FamilyKind::ARX:
        spec = FamilySpec::arx(config_int(cfg, "p", 1), config_int(cfg, "q", 0), config_int(cfg, "cov_dim", 0));
        break;
      case FamilyKind::ARCH: spec = FamilySpec::arch(config_int(cfg, "p", 1)); break;
      case FamilyKind::INGARCH_P: spec = FamilySpec::ingarch(config_int(cfg, "p", 1)); break;
      case FamilyKind::INGARCH_11: spec = FamilySpec::ingarch11(); break;
      case FamilyKind::BIV_INGARCH: spec = FamilySpec::biv_ingarch(); break;
    }
  } catch (const InvalidArgument& e) {
    cfg.fail("family", e.what());
  }
  if (kind != FamilyKind::ARX) {
    for (const char* k : {"q", "cov_dim"}) {
      if (cfg.has(k)) cfg.fail(k, "only valid for family arx");
    }
  }
  if (cfg.has("h_floor") || cfg.has("c_floor")) {
    const double h = config_double(cfg, "h_floor", spec.h_floor());
    const double c = config_double(cfg, "c_floor", spec.c_floor());
    try {
      spec = spec.with_floors(h, c);
    } catch (const InvalidArgument& e) {
      cfg.fail(cfg.has("h_floor") ? "h_floor" : "c_floor", e.what());
    }
  }
  for (const auto& [key, entry] : cfg.entries()) {
    if (key.rfind("box.", 0) != 0) continue;
    const std::string name = key.substr(4);
    with_key(cfg, key, [&](const std::string& v) {
      const auto idx = spec.coordinate_index(name);
      const auto bounds = parse_real_list(v, 2);
      spec = spec.with_box(idx, Interval{bounds[0], bounds[1]});
      return 0;
    });
  }
  return spec;
}

}  // namespace

FamilySpec family_from_config(const KeyValueConfig& cfg) {
  cfg.reject_unknown(family_config_keys(), {"box."});
  return family_from_checked(cfg);
}

FamilySpec load_family_config(const std::string& path) { return family_from_config(KeyValueConfig::load(path)); }

ExperimentPlan plan_from_config(const KeyValueConfig& cfg) {
  std::vector<std::string> known = family_config_keys();
  for (const char* k : {"experiment", "theta_true", "true_subset", "m_tilde", "candidates", "schedules", "n_grid",
                        "replications", "base_seed", "burn_in", "innovation", "emission", "starts", "threads",
                        "limit_n", "limit_draws", "c_grid", "path_kmin", "path_kmax", "output"}) {
    known.emplace_back(k);
  }
  cfg.reject_unknown(known, {"box."});

  ExperimentPlan plan;
  plan.spec = family_from_checked(cfg);
  plan.kind = with_key(cfg, "experiment", [](const std::string& v) { return experiment_kind_from_string(v); });
  plan.theta_true = with_key(cfg, "theta_true", [&](const std::string& v) { return parse_param_vector(v, plan.spec); });
  const auto subset_key = [&](const std::string& key) {
    return with_key(cfg, key, [&](const std::string& v) {
      auto m = ModelSubset::parse(v);
      m.check_range(static_cast<std::size_t>(plan.spec.param_dim()));
      return m;
    });
  };
  if (cfg.has("true_subset")) plan.true_subset = subset_key("true_subset");
  if (cfg.has("m_tilde")) plan.m_tilde = subset_key("m_tilde");
  if (cfg.has("candidates")) {
    plan.candidates = with_key(cfg, "candidates", [&](const std::string& v) { return parse_candidates(v, plan.spec); });
  } else if (plan.kind != ExperimentKind::Normality) {
    plan.candidates = nested_models(plan.spec);
  }
  if (cfg.has("schedules")) {
    plan.schedules = with_key(cfg, "schedules", [](const std::string& v) {
      std::vector<PenaltySchedule> out;
      for (const auto& item : split(v, ';')) out.push_back(parse_penalty(item));
      return out;
    });
  }
  if (cfg.has("n_grid")) {
    plan.n_grid = with_key(cfg, "n_grid", [](const std::string& v) {
      std::vector<std::size_t> out;
      for (const auto& item : split(v, ',')) out.push_back(require_size(item, "n"));
      return out;
    });
  }
  plan.replications = config_size(cfg, "replications", plan.replications);
  plan.base_seed = with_key(cfg, "base_seed", [](const std::string& v) {
    std::uint64_t s = 0;
    if (!parse_int(v, s)) throw ParseError("'" + v + "' is not an unsigned 64-bit seed");
    return s;
  });
  plan.burn_in = config_size(cfg, "burn_in", plan.burn_in);
  if (cfg.has("innovation")) {
    plan.innovation = with_key(cfg, "innovation", [](const std::string& v) { return parse_innovation(v); });
  }
  if (cfg.has("emission")) {
    plan.emission = with_key(cfg, "emission", [](const std::string& v) { return parse_emission(v); });
  }
  plan.optimizer.starts = config_int(cfg, "starts", plan.optimizer.starts);
  if (plan.optimizer.starts < 1) cfg.fail("starts", "must be >= 1");
  plan.threads = static_cast<unsigned>(config_size(cfg, "threads", plan.threads));
  plan.limit_n = config_size(cfg, "limit_n", plan.limit_n);
  plan.limit_draws = config_size(cfg, "limit_draws", plan.limit_draws);
  if (cfg.has("c_grid")) {
    plan.c_grid = with_key(cfg, "c_grid", [](const std::string& v) { return parse_real_list(v); });
  }
  plan.path_kmin = config_int(cfg, "path_kmin", plan.path_kmin);
  plan.path_kmax = config_int(cfg, "path_kmax", plan.path_kmax);
  plan.output_path = cfg.get("output", "");
  try {
    plan.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(cfg.source() + ": " + e.what());
  }
  return plan;
}

ExperimentPlan load_plan(const std::string& path) { return plan_from_config(KeyValueConfig::load(path)); }

// ---------------------------------------------------------------- small parsers

std::vector<double> parse_real_list(const std::string& text, std::size_t expected) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(require_double(item, "list entry"));
  if (expected > 0 && out.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " comma-separated values, got " +
                     std::to_string(out.size()));
  }
  return out;
}

ParamVector parse_param_vector(const std::string& text, const FamilySpec& spec) {
  const auto v = parse_real_list(text, static_cast<std::size_t>(spec.param_dim()));
  return ParamVector(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

PenaltySchedule parse_penalty(const std::string& text) {
  const std::string t = trim(text);
  if (t == "log") return PenaltySchedule::log();
  if (t == "sqrt") return PenaltySchedule::sqrt();
  if (t.rfind("const:", 0) == 0) return PenaltySchedule::constant(require_double(t.substr(6), "const:c"));
  if (t.rfind("loglog:", 0) == 0) return PenaltySchedule::loglog(require_double(t.substr(7), "loglog:c"));
  if (t.rfind("file:", 0) == 0) {
    const std::string path = t.substr(5);
    std::istringstream is(read_text_file(path));
    std::string line;
    std::vector<std::pair<std::size_t, double>> table;
    int row = 0;
    while (std::getline(is, line)) {
      ++row;
      const std::string l = trim(line);
      if (l.empty() || l[0] == '#') continue;
      if (row == 1 && l.find_first_of("0123456789") != 0) continue;  // header
      const auto cols = split(l, ',');
      if (cols.size() != 2) {
        throw ParseError(path + ": row " + std::to_string(row) + ": expected 2 columns (n,kappa), found " +
                         std::to_string(cols.size()));
      }
      table.emplace_back(require_size(cols[0], path + ": row " + std::to_string(row) + " n"),
                         require_double(cols[1], path + ": row " + std::to_string(row) + " kappa"));
    }
    return PenaltySchedule::custom(std::move(table));
  }
  throw ParseError("unknown penalty '" + t + "' (const:c, loglog:c, log, sqrt, file:path)");
}

std::vector<ModelSubset> parse_candidates(const std::string& text, const FamilySpec& spec) {
  const std::string t = trim(text);
  if (t == "all") return enumerate_models(spec, EnumerationPolicy::AllSubsets, spec.default_mandatory());
  if (t == "nested") return nested_models(spec);
  if (t.rfind("nested:", 0) == 0) {
    int k = 0;
    if (!parse_int(t.substr(7), k) || k < 0) throw ParseError("nested:K needs an integer K >= 0, got '" + t + "'");
    return nested_models(spec, k);
  }
  if (t.rfind("file:", 0) == 0) {
    const std::string path = t.substr(5);
    std::istringstream is(read_text_file(path));
    std::string line;
    std::vector<ModelSubset> list;
    int row = 0;
    while (std::getline(is, line)) {
      ++row;
      const std::string l = trim(line);
      if (l.empty() || l[0] == '#') continue;
      try {
        list.push_back(ModelSubset::parse(l));
      } catch (const std::exception& e) {
        throw ParseError(path + ": line " + std::to_string(row) + ": " + e.what());
      }
    }
    return enumerate_models(spec, EnumerationPolicy::ExplicitList, spec.default_mandatory(), list);
  }
  throw ParseError("unknown candidate policy '" + t + "' (nested:K, all, file:path)");
}

Innovation parse_innovation(const std::string& text) {
  const std::string t = trim(text);
  if (t == "gaussian") return Innovation::gaussian();
  if (t.rfind("student:", 0) == 0) return Innovation::student(require_double(t.substr(8), "student:nu"));
  throw ParseError("unknown innovation '" + t + "' (gaussian, student:nu)");
}

Emission parse_emission(const std::string& text) {
  const std::string t = trim(text);
  if (t == "poisson") return Emission::poisson();
  if (t.rfind("negbin:", 0) == 0) return Emission::negbin(require_double(t.substr(7), "negbin:r"));
  throw ParseError("unknown emission '" + t + "' (poisson, negbin:r)");
}

// ---------------------------------------------------------------- CSV

Trajectory read_trajectory_csv(std::istream& in, SeriesKind kind, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file, header 't,y1,...' required");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || header[0] != "t") {
    throw ParseError(source + ": row 1: header must start with 't,y1'");
  }
  std::size_t dy = 0;
  std::size_t dx = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string expect_y = "y" + std::to_string(dy + 1);
    const std::string expect_x = "x" + std::to_string(dx + 1);
    if (dx == 0 && header[c] == expect_y) {
      ++dy;
    } else if (header[c] == expect_x) {
      ++dx;
    } else {
      throw ParseError(source + ": row 1: unexpected column '" + header[c] + "' (expected " +
                       (dx == 0 ? expect_y + " or " : std::string{}) + expect_x + ")");
    }
  }
  if (dy == 0) throw ParseError(source + ": row 1: no y columns");
  const std::size_t ncols = 1 + dy + dx;
  std::vector<double> obs;
  std::vector<double> cov;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const std::string l = trim(line);
    if (l.empty()) continue;
    const auto cols = split(l, ',');
    if (cols.size() != ncols) {
      throw ParseError(source + ": row " + std::to_string(row) + ": expected " + std::to_string(ncols) +
                       " columns, found " + std::to_string(cols.size()));
    }
    for (std::size_t c = 1; c < ncols; ++c) {
      double v = 0.0;
      if (!parse_double(cols[c], v) || !std::isfinite(v)) {
        throw ParseError(source + ": row " + std::to_string(row) + ", column '" + header[c] + "': '" + cols[c] +
                         "' is not a finite number");
      }
      if (c <= dy) {
        if (kind == SeriesKind::Count && (v < 0.0 || v != std::floor(v))) {
          throw ParseError(source + ": row " + std::to_string(row) + ", column '" + header[c] +
                           "': count series need non-negative integers, got '" + cols[c] + "'");
        }
        obs.push_back(v);
      } else {
        cov.push_back(v);
      }
    }
  }
  if (obs.empty()) throw ParseError(source + ": no data rows");
  return {kind, dy, std::move(obs), dx, std::move(cov)};
}

Trajectory read_trajectory_csv(const std::string& path, SeriesKind kind) {
  std::istringstream is(read_text_file(path));
  return read_trajectory_csv(is, kind, path);
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw ComputationError("format_real: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t";
  for (std::size_t i = 0; i < traj.obs_dim(); ++i) out << ",y" << i + 1;
  for (std::size_t k = 0; k < traj.cov_dim(); ++k) out << ",x" << k + 1;
  out << '\n';
  for (std::size_t t = 1; t <= traj.size(); ++t) {
    out << t;
    for (std::size_t i = 0; i < traj.obs_dim(); ++i) {
      const double v = traj.y(t, i);
      if (traj.kind() == SeriesKind::Count) {
        out << ',' << static_cast<long long>(v);
      } else {
        out << ',' << format_real(v);
      }
    }
    for (std::size_t k = 0; k < traj.cov_dim(); ++k) out << ',' << format_real(traj.x(t, k));
    out << '\n';
  }
}

// ---------------------------------------------------------------- JSON

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const ModelSubset& m) { return m.one_based(); }

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json schedule_json(const PenaltySchedule& s) {
  json j{{"name", s.name()}};
  if (s.kind == PenaltySchedule::Kind::Custom) {
    json table = json::array();
    for (const auto& [n, k] : s.table) table.push_back({n, k});
    j["table"] = table;
  }
  return j;
}

}  // namespace

json to_json(const FamilySpec& spec) {
  json box = json::object();
  for (std::size_t i = 0; i < spec.box().size(); ++i) {
    box[spec.coordinate_names()[i]] = {spec.box()[i].lo, spec.box()[i].hi};
  }
  return {{"family", to_string(spec.kind())}, {"p", spec.p()},           {"q", spec.q()},
          {"obs_dim", spec.obs_dim()},        {"cov_dim", spec.cov_dim()}, {"param_dim", spec.param_dim()},
          {"coordinates", spec.coordinate_names()},
          {"box", box},                       {"h_floor", spec.h_floor()}, {"c_floor", spec.c_floor()}};
}

json to_json(const FitResult& fit) {
  json j{{"subset", to_json(fit.subset)},
         {"theta_hat", vector_json(fit.theta_hat.values)},
         {"contrast_at_min", fit.contrast_at_min},
         {"converged", fit.converged},
         {"iterations", fit.iterations},
         {"gradient_norm", fit.gradient_norm},
         {"n", fit.n}};
  if (fit.optimizer_trace) {
    json trace = json::array();
    for (const auto& tp : *fit.optimizer_trace) trace.push_back({{"iterate", vector_json(tp.iterate)}, {"value", tp.value}});
    j["optimizer_trace"] = trace;
  }
  return j;
}

json to_json(const SandwichMatrices& s) {
  return {{"subset", to_json(s.subset)},      {"F_hat", to_json(s.F_hat)},
          {"G_hat", to_json(s.G_hat)},        {"Sigma_hat", to_json(s.Sigma_hat)},
          {"condition_F", s.condition_F}};
}

json to_json(const SelectionResult& s) {
  json table = json::array();
  for (const auto& r : s.table) {
    json row{{"subset", to_json(r.subset)},
             {"contrast", r.excluded ? json(nullptr) : json(r.contrast_at_min)},
             {"penalty", r.penalty},
             {"criterion", r.excluded ? json(nullptr) : json(r.criterion)},
             {"excluded", r.excluded}};
    if (r.excluded) row["failure"] = r.failure;
    table.push_back(std::move(row));
  }
  return {{"table", table}, {"winner", to_json(s.winner)}, {"kappa_used", s.kappa_used}, {"tie_broken", s.tie_broken}};
}

json to_json(const JointLimit& jl) {
  return {{"m_star", to_json(jl.m_star)},
          {"m_tilde", to_json(jl.m_tilde)},
          {"sigma_joint", to_json(jl.sigma_joint)},
          {"q_matrix", to_json(jl.q_matrix)},
          {"eigenvalues", vector_json(jl.eigenvalues)},
          {"counts", {{"negative", jl.negatives}, {"zero", jl.zeros}, {"positive", jl.positives}}},
          {"sigma_min_eigenvalue", jl.sigma_min_eigenvalue},
          {"max_imag_part", jl.max_imag_part},
          {"contrast_scale", jl.contrast_scale}};
}

json to_json(const ExperimentPlan& plan) {
  json cands = json::array();
  for (const auto& c : plan.candidates) cands.push_back(to_json(c));
  json scheds = json::array();
  for (const auto& s : plan.schedules) scheds.push_back(schedule_json(s));
  json j{{"experiment", to_string(plan.kind)},
         {"family", to_json(plan.spec)},
         {"theta_true", vector_json(plan.theta_true.values)},
         {"true_subset", to_json(plan.resolved_true_subset())},
         {"candidates", cands},
         {"schedules", scheds},
         {"n_grid", plan.n_grid},
         {"replications", plan.replications},
         {"base_seed", plan.base_seed},
         {"burn_in", plan.burn_in},
         {"innovation", plan.innovation.kind == Innovation::Kind::Gaussian
                            ? std::string("gaussian")
                            : "student:" + format_real(plan.innovation.nu)},
         {"emission", plan.emission.kind == Emission::Kind::Poisson ? std::string("poisson")
                                                                   : "negbin:" + format_real(plan.emission.r)},
         {"starts", plan.optimizer.starts},
         {"threads", plan.threads},
         {"limit_n", plan.limit_n},
         {"limit_draws", plan.limit_draws},
         {"c_grid", plan.c_grid},
         {"path_kmin", plan.path_kmin},
         {"path_kmax", plan.path_kmax}};
  if (plan.m_tilde) j["m_tilde"] = to_json(*plan.m_tilde);
  return j;
}

json to_json(const ExperimentReport& report, bool include_timing) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json cj{{"schedule", c.schedule},         {"n", c.n},
            {"replications", c.replications}, {"failures", c.failures},
            {"hit_rate", c.hit_rate},         {"overfit_rate", c.overfit_rate},
            {"underfit_rate", c.underfit_rate}, {"mc_stderr", c.mc_stderr},
            {"overfit_stderr", c.overfit_stderr}};
    if (c.predicted_overfit) cj["predicted_overfit"] = *c.predicted_overfit;
    if (c.predicted_stderr) cj["predicted_stderr"] = *c.predicted_stderr;
    if (c.agrees) cj["agrees"] = *c.agrees;
    cells.push_back(std::move(cj));
  }
  json j{{"experiment", to_string(report.kind)}, {"true_subset", to_json(report.true_subset)}, {"cells", cells}};
  if (report.normality) {
    const auto& nb = *report.normality;
    json nj{{"n", nb.n},
            {"replications", nb.replications},
            {"subset", to_json(nb.subset)},
            {"empirical_cov", to_json(nb.empirical_cov)},
            {"mean_sigma_hat", to_json(nb.mean_sigma_hat)},
            {"relative_error", to_json(nb.relative_error)},
            {"max_relative_error", nb.max_relative_error},
            {"jb_pvalues", nb.jb_pvalues},
            {"jb_pass_fraction", nb.jb_pass_fraction}};
    if (nb.m_tilde) {
      nj["m_tilde"] = to_json(*nb.m_tilde);
      nj["empirical_cross"] = to_json(nb.empirical_cross);
      nj["predicted_cross"] = to_json(nb.predicted_cross);
      nj["cross_sign_match"] = nb.cross_sign_match.value_or(false);
    }
    j["normality"] = nj;
  }
  if (report.joint_limit) j["joint_limit"] = to_json(*report.joint_limit);
  if (!report.strong.empty()) {
    json sj = json::array();
    for (const auto& s : report.strong) {
      json winners = json::array();
      for (const auto& w : s.winners) winners.push_back(to_json(w));
      sj.push_back({{"c", s.c}, {"n_path", s.n_path}, {"winners", winners}, {"last_miss_n", s.last_miss_n}});
    }
    j["strong"] = sj;
  }
  json md{{"base_seed", report.metadata.base_seed},
          {"threads", report.metadata.threads},
          {"version", report.metadata.version},
          {"planned_fits", report.metadata.planned_fits},
          {"stream_collisions", report.metadata.stream_collisions}};
  if (include_timing) md["wall_seconds"] = report.metadata.wall_seconds;
  j["metadata"] = md;
  return j;
}

void write_selection_csv(std::ostream& out, const SelectionResult& s) {
  out << "subset,contrast,penalty,criterion,winner_flag\n";
  for (const auto& r : s.table) {
    out << '"' << r.subset.to_string() << "\"," << (r.excluded ? "NA" : format_real(r.contrast_at_min)) << ','
        << format_real(r.penalty) << ',' << (r.excluded ? "NA" : format_real(r.criterion)) << ','
        << (r.subset == s.winner ? 1 : 0) << '\n';
  }
}

void write_cells_csv(std::ostream& out, const ExperimentReport& report) {
  out << "experiment,schedule,n,replications,failures,hit_rate,overfit_rate,underfit_rate,mc_stderr,"
         "overfit_stderr,predicted_overfit,predicted_stderr\n";
  for (const auto& c : report.cells) {
    out << to_string(report.kind) << ',' << c.schedule << ',' << c.n << ',' << c.replications << ',' << c.failures
        << ',' << format_real(c.hit_rate) << ',' << format_real(c.overfit_rate) << ','
        << format_real(c.underfit_rate) << ',' << format_real(c.mc_stderr) << ',' << format_real(c.overfit_stderr)
        << ',' << (c.predicted_overfit ? format_real(*c.predicted_overfit) : "") << ','
        << (c.predicted_stderr ? format_real(*c.predicted_stderr) : "") << '\n';
  }
}

void write_plot_data(std::ostream& out, const ExperimentReport& report) {
  out << "experiment,schedule,n,metric,value\n";
  const std::string kind = to_string(report.kind);
  auto row = [&](const std::string& sched, std::size_t n, const char* metric, double v) {
    out << kind << ',' << sched << ',' << n << ',' << metric << ',' << format_real(v) << '\n';
  };
  for (const auto& c : report.cells) {
    row(c.schedule, c.n, "hit_rate", c.hit_rate);
    row(c.schedule, c.n, "overfit_rate", c.overfit_rate);
    row(c.schedule, c.n, "underfit_rate", c.underfit_rate);
    row(c.schedule, c.n, "mc_stderr", c.mc_stderr);
    if (c.predicted_overfit) row(c.schedule, c.n, "predicted_overfit", *c.predicted_overfit);
  }
  for (const auto& s : report.strong) {
    const std::string sched = "loglog:" + format_real(s.c);
    for (std::size_t i = 0; i < s.n_path.size(); ++i) {
      row(sched, s.n_path[i], "hit", s.winners[i] == report.true_subset ? 1.0 : 0.0);
      row(sched, s.n_path[i], "winner_size", static_cast<double>(s.winners[i].size()));
    }
  }
  if (report.normality) {
    const auto& nb = *report.normality;
    for (Eigen::Index i = 0; i < nb.empirical_cov.rows(); ++i) {
      row("none", nb.n, "empirical_var", nb.empirical_cov(i, i));
      row("none", nb.n, "mean_sigma_hat_var", nb.mean_sigma_hat(i, i));
    }
  }
}

}  // namespace pencrit
