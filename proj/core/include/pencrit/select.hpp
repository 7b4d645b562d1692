#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pencrit/estimate.hpp"
#include "pencrit/model_zoo.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

/// Regularization sequence n -> kappa_n >= 0 with kappa_n = o(n).
struct PenaltySchedule {
  enum class Kind { Constant, LogLog, Log, Sqrt, Custom };

  Kind kind = Kind::Log;
  double c = 1.0;
  /// (n, kappa_n) pairs, strictly increasing in n (Custom only).
  std::vector<std::pair<std::size_t, double>> table;

  [[nodiscard]] static PenaltySchedule constant(double c);
  [[nodiscard]] static PenaltySchedule loglog(double c);
  [[nodiscard]] static PenaltySchedule log();
  [[nodiscard]] static PenaltySchedule sqrt();
  /// Validates the table (nonempty, kappa >= 0, kappa/n <= 0.5).
  [[nodiscard]] static PenaltySchedule custom(std::vector<std::pair<std::size_t, double>> table);

  /// "const:1", "loglog:2", "log", "sqrt" or "custom".
  [[nodiscard]] std::string name() const;

  friend bool operator==(const PenaltySchedule&, const PenaltySchedule&) = default;
};

/// First n with log log n > 1; LOGLOG evaluates at max(n, 16).
inline constexpr std::size_t kLogLogGuard = 16;

[[nodiscard]] double penalty_value(const PenaltySchedule& sched, std::size_t n);

struct CriterionRow {
  ModelSubset subset;
  double contrast_at_min = 0.0;
  double penalty = 0.0;    // kappa_n * |m|
  double criterion = 0.0;  // contrast_at_min + penalty
  bool excluded = false;   // fit failed; row kept for reporting only
  std::string failure;
};

struct SelectionResult {
  std::vector<CriterionRow> table;
  ModelSubset winner;
  double kappa_used = 0.0;
  bool tie_broken = false;

  [[nodiscard]] const CriterionRow& winner_row() const;
};

/// Criterion table and argmin for precomputed minimal contrasts. Rows within a relative
/// 1e-12 of the minimum tie; ties go to the smaller model, then lexicographic order.
[[nodiscard]] SelectionResult select_from_contrasts(const std::vector<CriterionRow>& rows, double kappa);

/// Fits every candidate and minimizes C(m) = Phi_n(theta_hat(m)) + kappa_n |m|.
/// Candidates whose fit throws are excluded with a warning.
[[nodiscard]] SelectionResult select_model(const FamilySpec& spec, const Trajectory& traj,
                                           const std::vector<ModelSubset>& candidates,
                                           const PenaltySchedule& sched, const OptimizerOptions& options = {},
                                           std::vector<FitResult>* fits = nullptr);

}  // namespace pencrit
