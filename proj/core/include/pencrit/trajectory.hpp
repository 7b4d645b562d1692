#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pencrit {

enum class SeriesKind { Real, Count };

/// Observed series Y_1..Y_n (each of dimension obs_dim) with optional covariates X_1..X_n.
///
/// Storage is row-major: row s (0-based) holds time index t = s + 1. Covariate row s is
/// X_{s+1}; the conditional moments at time t only read rows strictly before s = t - 1.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(SeriesKind kind, std::size_t obs_dim, std::vector<double> obs,
             std::size_t cov_dim = 0, std::vector<double> covariates = {});

  [[nodiscard]] static Trajectory univariate(SeriesKind kind, std::vector<double> y);

  [[nodiscard]] SeriesKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t obs_dim() const noexcept { return obs_dim_; }
  [[nodiscard]] std::size_t cov_dim() const noexcept { return cov_dim_; }
  [[nodiscard]] bool has_covariates() const noexcept { return cov_dim_ > 0; }

  /// Y_{t,i} for 1-based time t.
  [[nodiscard]] double y(std::size_t t, std::size_t i = 0) const { return obs_[(t - 1) * obs_dim_ + i]; }
  [[nodiscard]] double x(std::size_t t, std::size_t k = 0) const { return cov_[(t - 1) * cov_dim_ + k]; }

  [[nodiscard]] std::span<const double> obs_data() const noexcept { return obs_; }
  [[nodiscard]] std::span<const double> covariate_data() const noexcept { return cov_; }

  /// First `n` observations (and covariates).
  [[nodiscard]] Trajectory prefix(std::size_t n) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  SeriesKind kind_ = SeriesKind::Real;
  std::size_t n_ = 0;
  std::size_t obs_dim_ = 1;
  std::size_t cov_dim_ = 0;
  std::vector<double> obs_;
  std::vector<double> cov_;
};

}  // namespace pencrit
