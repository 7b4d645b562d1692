#pragma once

// Sequential evaluation of conditional moments and their theta-derivatives.
// Shared by eval_conditionals, the contrasts and the simulators.

#include <array>
#include <cstddef>

#include <Eigen/Dense>

#include "pencrit/model_zoo.hpp"

namespace pencrit::detail {

struct Moments {
  int components = 1;
  std::array<double, 2> level{};  // f (AC-X) or lambda_i (count)
  double scale = 1.0;             // H (AC-X only)
  std::array<Eigen::VectorXd, 2> d_level;
  Eigen::VectorXd d_scale;
  std::array<Eigen::MatrixXd, 2> d2_level;
  Eigen::MatrixXd d2_scale;
  bool d2_level_nonzero = false;
  bool d2_scale_nonzero = false;
};

class MomentRecursion {
 public:
  /// `obs` and `cov` are row-major buffers; row s holds time s+1. Only rows before the
  /// current time are read, so the buffers may be filled while the recursion advances.
  MomentRecursion(const FamilySpec& spec, const Eigen::VectorXd& theta, const double* obs, const double* cov,
                  int order);

  /// Moments for the next time index (t = 1, 2, ...).
  const Moments& next();

  /// Replace the INGARCH(1,1) starting intensity (used by the simulator).
  void set_initial_intensity(double lambda1);

  [[nodiscard]] std::size_t last_time() const noexcept { return t_; }

 private:
  void next_arx();
  void next_arch();
  void next_ingarch();
  void next_ingarch11();
  void next_biv();
  void floor_level(int comp);

  const FamilySpec& spec_;
  const Eigen::VectorXd& theta_;
  const double* obs_;
  const double* cov_;
  int order_;
  int d_;
  std::size_t t_ = 0;  // time of the most recent moments
  Moments m_;

  // INGARCH(1,1) state at t_
  double lam_prev_ = 0.0;
  Eigen::VectorXd dlam_prev_;
  Eigen::MatrixXd d2lam_prev_;
  bool lambda1_override_ = false;
  double lambda1_ = 0.0;
};

}  // namespace pencrit::detail
