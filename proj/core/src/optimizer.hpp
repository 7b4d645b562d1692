#pragma once

// Box-constrained minimizers used by the minimum contrast estimator.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace pencrit::detail {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct DirectSearchResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Nelder-Mead on the box [lo, hi]; trial points are projected onto the box.
/// Non-finite objective values count as +infinity.
DirectSearchResult nelder_mead_box(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, int max_iterations);

/// Radical-inverse Halton point `index` (>= 1) in [0,1]^dim.
Eigen::VectorXd halton_point(std::size_t index, int dim);

}  // namespace pencrit::detail
