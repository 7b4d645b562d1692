#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pencrit/model_zoo.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

/// Settings for the multi-start direct search followed by a projected Newton polish.
struct OptimizerOptions {
  int starts = 5;                   // box center + (starts - 1) Halton points
  std::uint64_t start_offset = 0;   // shifts the Halton index of the quasi-random starts
  int max_direct_iterations = 2000;
  int max_polish_steps = 50;
  double tol_x = 1e-8;
  double tol_g_factor = 1e-6;       // tol_g = tol_g_factor * (1 + |Phi| / n)
  bool record_trace = false;
};

struct TracePoint {
  Eigen::VectorXd iterate;  // free coordinates
  double value = 0.0;
};

struct FitResult {
  ModelSubset subset;
  ParamVector theta_hat;  // zero off the subset
  double contrast_at_min = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;  // projected gradient on free coordinates
  std::size_t n = 0;
  std::optional<std::vector<TracePoint>> optimizer_trace;
};

/// Minimum contrast estimator over Theta(m). Non-convergence is reported through
/// `converged`; a fit where no start yields a finite contrast throws ComputationError.
[[nodiscard]] FitResult fit_mce(const FamilySpec& spec, const Trajectory& traj, const ModelSubset& m,
                                const OptimizerOptions& options = {});

/// Restricted to the subset coordinates (|m| x |m|).
struct SandwichMatrices {
  ModelSubset subset;
  Eigen::MatrixXd F_hat;
  Eigen::MatrixXd G_hat;
  Eigen::MatrixXd Sigma_hat;
  double condition_F = 0.0;
};

inline constexpr double kMaxConditionF = 1e12;

/// F = (1/n) sum_t d^2 phi_t, G = (1/n) sum_t (d phi_t)(d phi_t)^T at theta_hat, on m x m,
/// Sigma = F^{-1} G F^{-1}. phi_t is the per-observation loss without the Gaussian 1/2.
[[nodiscard]] SandwichMatrices estimate_sandwich(const FamilySpec& spec, const Trajectory& traj,
                                                 const FitResult& fit);

/// Assemble Sigma from given F and G (population or precomputed matrices).
[[nodiscard]] SandwichMatrices sandwich_from_matrices(const ModelSubset& subset, const Eigen::MatrixXd& F,
                                                      const Eigen::MatrixXd& G);

struct VarthetaDiagnostic {
  double vartheta_hat = 0.0;
  double relative_residual = 0.0;  // max|G - vartheta F| / max|G|
};

/// vartheta = trace(F^{-1} G) / |m|.
[[nodiscard]] VarthetaDiagnostic vartheta_diagnostic(const SandwichMatrices& sand);

/// Condition number |ev|_max / |ev|_min of a symmetric matrix.
[[nodiscard]] double symmetric_condition(const Eigen::MatrixXd& a);

/// Rows/columns of `full` listed in `m`.
[[nodiscard]] Eigen::MatrixXd restrict_to(const Eigen::MatrixXd& full, const ModelSubset& m);

}  // namespace pencrit
