#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pencrit/asymptotics.hpp"
#include "pencrit/estimate.hpp"
#include "pencrit/experiments.hpp"
#include "pencrit/model_zoo.hpp"
#include "pencrit/select.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

/// Whole file as a string; InvalidArgument naming the path when it cannot be read.
[[nodiscard]] std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// `key = value` lines; `#` starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  /// ParseError names `source` and the line for malformed or duplicate keys.
  [[nodiscard]] static KeyValueConfig parse(const std::string& text, const std::string& source);
  [[nodiscard]] static KeyValueConfig load(const std::string& path);

  [[nodiscard]] bool has(const std::string& key) const;
  /// ParseError when absent.
  [[nodiscard]] const Entry& at(const std::string& key) const;
  [[nodiscard]] std::string get(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  /// ParseError for any key not in `known` and not starting with one of `prefixes`.
  void reject_unknown(const std::vector<std::string>& known, const std::vector<std::string>& prefixes) const;
  /// "<source>:<line>: key '<key>': <message>"
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// Keys: family, p, q, cov_dim, h_floor, c_floor, box.<coordinate> = lo, hi.
[[nodiscard]] FamilySpec family_from_config(const KeyValueConfig& cfg);
[[nodiscard]] FamilySpec load_family_config(const std::string& path);
[[nodiscard]] const std::vector<std::string>& family_config_keys();

/// Family keys plus the plan keys (experiment, theta_true, true_subset, m_tilde, candidates,
/// schedules, n_grid, replications, base_seed, burn_in, innovation, emission, starts, threads,
/// limit_n, limit_draws, c_grid, path_kmin, path_kmax, output).
[[nodiscard]] ExperimentPlan plan_from_config(const KeyValueConfig& cfg);
[[nodiscard]] ExperimentPlan load_plan(const std::string& path);

/// const:c | loglog:c | log | sqrt | file:path (CSV with header n,kappa).
[[nodiscard]] PenaltySchedule parse_penalty(const std::string& text);
/// nested:K | nested | all | file:path (one subset per line, 1-based, braces optional).
[[nodiscard]] std::vector<ModelSubset> parse_candidates(const std::string& text, const FamilySpec& spec);
/// Comma-separated reals; checks the length against `expected` when nonzero.
[[nodiscard]] std::vector<double> parse_real_list(const std::string& text, std::size_t expected = 0);
[[nodiscard]] ParamVector parse_param_vector(const std::string& text, const FamilySpec& spec);
[[nodiscard]] Innovation parse_innovation(const std::string& text);
[[nodiscard]] Emission parse_emission(const std::string& text);

/// Header `t,y1[,y2][,x1,...]`. ParseError names the row and column count on mismatch.
[[nodiscard]] Trajectory read_trajectory_csv(std::istream& in, SeriesKind kind, const std::string& source);
[[nodiscard]] Trajectory read_trajectory_csv(const std::string& path, SeriesKind kind);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Shortest round-trip decimal form.
[[nodiscard]] std::string format_real(double v);

[[nodiscard]] nlohmann::json to_json(const Eigen::MatrixXd& m);
[[nodiscard]] nlohmann::json to_json(const ModelSubset& m);
[[nodiscard]] nlohmann::json to_json(const FamilySpec& spec);
[[nodiscard]] nlohmann::json to_json(const FitResult& fit);
[[nodiscard]] nlohmann::json to_json(const SandwichMatrices& s);
[[nodiscard]] nlohmann::json to_json(const SelectionResult& s);
[[nodiscard]] nlohmann::json to_json(const JointLimit& jl);
[[nodiscard]] nlohmann::json to_json(const ExperimentPlan& plan);
/// `include_timing = false` drops wall time so reruns compare equal.
[[nodiscard]] nlohmann::json to_json(const ExperimentReport& report, bool include_timing = true);

/// subset,contrast,penalty,criterion,winner_flag
void write_selection_csv(std::ostream& out, const SelectionResult& s);
/// One row per cell.
void write_cells_csv(std::ostream& out, const ExperimentReport& report);
/// Tidy long format: experiment,schedule,n,metric,value.
void write_plot_data(std::ostream& out, const ExperimentReport& report);

}  // namespace pencrit
