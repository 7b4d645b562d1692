#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "pencrit/estimate.hpp"
#include "pencrit/model_zoo.hpp"
#include "pencrit/rng.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

/// Limit matrices for a nested pair m* strictly inside m~ (ordering: m* block first).
struct JointLimit {
  ModelSubset m_star;
  ModelSubset m_tilde;
  Eigen::MatrixXd sigma_joint;  // Sigma(m*, m~)
  Eigen::MatrixXd q_matrix;     // blockdiag(-F(m*), F(m~))
  Eigen::VectorXd eigenvalues;  // of Q Sigma, ascending
  int negatives = 0;
  int zeros = 0;
  int positives = 0;
  double sigma_min_eigenvalue = 0.0;
  double max_imag_part = 0.0;  // largest |Im| among the eigenvalues of the unsymmetrized Q Sigma
  /// Factor c in front of the per-observation loss (Phi_n = c sum phi_t). Twice the contrast gap
  /// between the nested fits converges to c * W.
  double contrast_scale = 1.0;

  [[nodiscard]] bool sigma_positive_definite() const noexcept { return sigma_min_eigenvalue > 1e-8; }
};

/// Population (or otherwise supplied) matrices for joint_limit_matrices.
struct PopulationMatrices {
  Eigen::MatrixXd F_star;   // |m*| x |m*|
  Eigen::MatrixXd G_star;   // |m*| x |m*|
  Eigen::MatrixXd F_tilde;  // |m~| x |m~|
  Eigen::MatrixXd G_tilde;  // |m~| x |m~|
  Eigen::MatrixXd G_cross;  // |m*| x |m~|, E[score_{m*} score_{m~}^T]
  double contrast_scale = 1.0;
};

/// Eigenvalues with |lambda| <= this fraction of max|lambda| count as zero (rounding level);
/// eigenvalues of Sigma below the same fraction of its largest one are truncated before the square root.
inline constexpr double kEigenZeroTolerance = 1e-13;

[[nodiscard]] JointLimit joint_limit_matrices(const ModelSubset& m_star, const ModelSubset& m_tilde,
                                              const PopulationMatrices& pop);

/// Empirical version: F blocks from each model's own fit, and the joint score covariance
/// from per-observation scores of m* at theta_hat(m*) stacked with those of m~ at theta_hat(m~).
[[nodiscard]] JointLimit joint_limit_matrices(const FamilySpec& spec, const Trajectory& traj,
                                              const FitResult& fit_star, const FitResult& fit_tilde);

/// Fits both models, then the empirical version above.
[[nodiscard]] JointLimit joint_limit_matrices(const FamilySpec& spec, const Trajectory& traj,
                                              const ModelSubset& m_star, const ModelSubset& m_tilde,
                                              const OptimizerOptions& options = {});

struct OverfitProbability {
  double prob = 0.0;
  double mc_stderr = 0.0;
};

inline constexpr std::size_t kMinOverfitDraws = 10000;

/// Monte Carlo estimate of P(c W > 2 kappa delta), W = sum_j lambda_j Z_j^2.
[[nodiscard]] OverfitProbability overfit_probability(const JointLimit& jl, double kappa_limit, std::size_t delta,
                                                     std::size_t n_draws, const RngStream& rng);

/// Same draws reused for every kappa (common random numbers).
[[nodiscard]] std::vector<OverfitProbability> overfit_curve(const JointLimit& jl, const std::vector<double>& kappas,
                                                            std::size_t n_draws, const RngStream& rng);

}  // namespace pencrit
