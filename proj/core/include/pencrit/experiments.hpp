#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pencrit/asymptotics.hpp"
#include "pencrit/estimate.hpp"
#include "pencrit/model_zoo.hpp"
#include "pencrit/select.hpp"
#include "pencrit/simulate.hpp"

namespace pencrit {

enum class ExperimentKind { Consistency, NonConsistency, Normality, Strong };

[[nodiscard]] std::string to_string(ExperimentKind kind);
[[nodiscard]] ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::Consistency;
  FamilySpec spec = FamilySpec::arx(1, 0, 0);
  ParamVector theta_true;
  /// m*; when empty, the support of theta_true plus the family's mandatory coordinates.
  std::optional<ModelSubset> true_subset;
  /// Larger model for the joint limit (nonconsistency, joint normality).
  std::optional<ModelSubset> m_tilde;
  std::vector<ModelSubset> candidates;
  std::vector<PenaltySchedule> schedules;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  std::uint64_t base_seed = 1;
  std::size_t burn_in = kDefaultBurnIn;
  Innovation innovation;
  Emission emission;
  OptimizerOptions optimizer;
  unsigned threads = 0;  // 0 = hardware concurrency
  // nonconsistency: empirical joint limit from one long path
  std::size_t limit_n = 100000;
  std::size_t limit_draws = 100000;
  // strong: one path n = 2^k, k = path_kmin..path_kmax, LOGLOG(c) for c in c_grid
  std::vector<double> c_grid{0.5, 1.0, 2.0, 4.0};
  int path_kmin = 6;
  int path_kmax = 14;
  std::string output_path;

  [[nodiscard]] ModelSubset resolved_true_subset() const;
  /// Throws InvalidArgument on a malformed plan.
  void validate() const;
};

inline constexpr std::size_t kMaxPlanFits = 1000000;
inline constexpr double kMaxCellFailureFraction = 0.10;

struct CellRecord {
  std::string schedule;
  std::size_t n = 0;
  std::size_t replications = 0;  // successful
  std::size_t failures = 0;
  std::size_t hits = 0;
  std::size_t overfits = 0;
  std::size_t underfits = 0;
  double hit_rate = 0.0;
  double overfit_rate = 0.0;
  double underfit_rate = 0.0;
  double mc_stderr = 0.0;          // of hit_rate
  double overfit_stderr = 0.0;
  std::optional<double> predicted_overfit;
  std::optional<double> predicted_stderr;
  std::optional<bool> agrees;      // |observed - predicted| <= 3 combined s.e. (largest n only)
};

struct NormalityBlock {
  std::size_t n = 0;
  std::size_t replications = 0;
  ModelSubset subset;
  Eigen::MatrixXd empirical_cov;   // of sqrt(n)(theta_hat - theta*) on m*
  Eigen::MatrixXd mean_sigma_hat;
  /// |emp_ij - sig_ij| / sqrt(sig_ii sig_jj)
  Eigen::MatrixXd relative_error;
  double max_relative_error = 0.0;
  std::vector<double> jb_pvalues;  // Jarque-Bera, per coordinate of m*
  double jb_pass_fraction = 0.0;   // share of coordinates with p >= 0.01
  // joint block for (m*, m~)
  std::optional<ModelSubset> m_tilde;
  Eigen::MatrixXd empirical_cross;  // |m*| x |m~|
  Eigen::MatrixXd predicted_cross;  // mean over replications of the empirical Sigma(m*,m~) cross block
  std::optional<bool> cross_sign_match;
};

struct StrongPathRecord {
  double c = 0.0;
  std::vector<std::size_t> n_path;
  std::vector<ModelSubset> winners;
  std::size_t last_miss_n = 0;  // 0 when every winner equals m*
};

struct ExperimentMetadata {
  std::uint64_t base_seed = 0;
  unsigned threads = 1;
  std::string version;
  double wall_seconds = 0.0;  // excluded from determinism comparisons
  std::size_t planned_fits = 0;
  std::size_t stream_collisions = 0;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::Consistency;
  ModelSubset true_subset;
  std::vector<CellRecord> cells;
  std::optional<NormalityBlock> normality;
  std::optional<JointLimit> joint_limit;
  std::vector<StrongPathRecord> strong;
  ExperimentMetadata metadata;
};

/// Winner classification against m*.
enum class Outcome { Hit, Overfit, Underfit };
[[nodiscard]] Outcome classify(const ModelSubset& winner, const ModelSubset& m_star);

/// Fits requested by the plan, used for the preflight warning.
[[nodiscard]] std::size_t estimate_fit_count(const ExperimentPlan& plan);

[[nodiscard]] ExperimentReport run_consistency(const ExperimentPlan& plan);
[[nodiscard]] ExperimentReport run_nonconsistency(const ExperimentPlan& plan, const JointLimit& jl);
/// Joint limit of (m*, m~) from one simulated path of length plan.limit_n.
[[nodiscard]] JointLimit empirical_joint_limit(const ExperimentPlan& plan);
[[nodiscard]] ExperimentReport run_normality(const ExperimentPlan& plan);
[[nodiscard]] ExperimentReport run_strong_path(const ExperimentPlan& plan);
/// Dispatch on plan.kind (nonconsistency uses empirical_joint_limit).
[[nodiscard]] ExperimentReport run_experiment(const ExperimentPlan& plan);

/// Jarque-Bera statistic and its chi-square(2) p-value.
struct JarqueBera {
  double statistic = 0.0;
  double p_value = 1.0;
};
[[nodiscard]] JarqueBera jarque_bera(const std::vector<double>& x);

}  // namespace pencrit
