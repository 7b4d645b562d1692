#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pencrit/model_zoo.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

enum class ContrastKind { Gaussian, Poisson };

[[nodiscard]] ContrastKind contrast_dispatch(const FamilySpec& spec) noexcept;

/// Phi_n(theta) and optional derivatives.
///
/// The Gaussian contrast is (1/2) sum_t [(Y_t - f_t)^2 / H_t + log H_t]; the Poisson
/// contrast is -sum_t sum_i (Y_{t,i} log lambda_{t,i} - lambda_{t,i}). `scale` is the
/// factor in front of the per-observation loss phi_t (1/2 or 1), and `per_term[t-1]`
/// holds the contribution scale * phi_t, so that total == sum(per_term).
struct ContrastValue {
  double total = 0.0;
  double scale = 1.0;
  std::optional<std::vector<double>> per_term;
  std::optional<Eigen::VectorXd> gradient;
  std::optional<Eigen::MatrixXd> hessian;
};

struct ContrastOptions {
  int order = 0;            // 0, 1 or 2
  bool keep_terms = false;  // fill per_term
};

[[nodiscard]] ContrastValue gaussian_contrast(const FamilySpec& spec, const Trajectory& traj,
                                              const ParamVector& theta, ContrastOptions opts = {});
[[nodiscard]] ContrastValue poisson_contrast(const FamilySpec& spec, const Trajectory& traj,
                                             const ParamVector& theta, ContrastOptions opts = {});
/// Routes to the family's contrast.
[[nodiscard]] ContrastValue evaluate_contrast(const FamilySpec& spec, const Trajectory& traj,
                                              const ParamVector& theta, ContrastOptions opts = {});

/// Per-observation derivatives of the unscaled loss phi_t, as used by the sandwich
/// matrices: row t-1 of `scores` is d phi_t / d theta, `hessian_sum` is sum_t d^2 phi_t.
struct TermDerivatives {
  Eigen::MatrixXd scores;
  Eigen::MatrixXd hessian_sum;
  double scale = 1.0;
};

[[nodiscard]] TermDerivatives term_derivatives(const FamilySpec& spec, const Trajectory& traj,
                                               const ParamVector& theta, bool with_hessian = true);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace pencrit
