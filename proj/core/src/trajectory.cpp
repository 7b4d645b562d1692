#include "pencrit/trajectory.hpp"

#include <cmath>
#include <string>

#include "pencrit/error.hpp"

namespace pencrit {

Trajectory::Trajectory(SeriesKind kind, std::size_t obs_dim, std::vector<double> obs, std::size_t cov_dim,
                       std::vector<double> covariates)
    : kind_(kind), obs_dim_(obs_dim), cov_dim_(cov_dim), obs_(std::move(obs)), cov_(std::move(covariates)) {
  if (obs_dim_ == 0) throw InvalidArgument("trajectory: obs_dim must be positive");
  if (obs_.size() % obs_dim_ != 0) throw InvalidArgument("trajectory: observation buffer not a multiple of obs_dim");
  n_ = obs_.size() / obs_dim_;
  if (cov_dim_ > 0 && cov_.size() != n_ * cov_dim_) {
    throw InvalidArgument("trajectory: covariate length " + std::to_string(cov_.size() / cov_dim_) +
                          " does not match n = " + std::to_string(n_));
  }
  if (cov_dim_ == 0 && !cov_.empty()) throw InvalidArgument("trajectory: covariates given with cov_dim = 0");
  if (kind_ == SeriesKind::Count) {
    for (std::size_t s = 0; s < obs_.size(); ++s) {
      const double v = obs_[s];
      if (!(v >= 0.0) || v != std::floor(v)) {
        throw InvalidArgument("trajectory: count series has non-integer or negative value at t = " +
                              std::to_string(s / obs_dim_ + 1));
      }
    }
  }
}

Trajectory Trajectory::univariate(SeriesKind kind, std::vector<double> y) { return {kind, 1, std::move(y)}; }

Trajectory Trajectory::prefix(std::size_t n) const {
  if (n > n_) throw InvalidArgument("trajectory: prefix longer than series");
  std::vector<double> obs(obs_.begin(), obs_.begin() + static_cast<std::ptrdiff_t>(n * obs_dim_));
  std::vector<double> cov;
  if (cov_dim_ > 0) cov.assign(cov_.begin(), cov_.begin() + static_cast<std::ptrdiff_t>(n * cov_dim_));
  return {kind_, obs_dim_, std::move(obs), cov_dim_, std::move(cov)};
}

}  // namespace pencrit
