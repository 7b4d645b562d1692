#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pencrit/trajectory.hpp"

namespace pencrit {

enum class FamilyKind { ARX, ARCH, INGARCH_P, INGARCH_11, BIV_INGARCH };

[[nodiscard]] std::string to_string(FamilyKind kind);
[[nodiscard]] FamilyKind family_kind_from_string(const std::string& name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  [[nodiscard]] double center() const noexcept { return 0.5 * (lo + hi); }
  [[nodiscard]] double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// A built-in parametric family together with its compact parameter box and floors.
///
/// Coordinate layouts (0-based):
///   ARX(p,q)     c, a_1..a_p, b_{1,1}..b_{q,dx} (lag-major), sigma
///   ARCH(p)      a_0, a_1..a_p
///   INGARCH(p)   a_0, a_1..a_p
///   INGARCH(1,1) a_0, a_1, b_1
///   BIV_INGARCH  w_1, w_2, A_11, A_12, A_21, A_22
class FamilySpec {
 public:
  static FamilySpec arx(int p, int q = 0, int cov_dim = 0);
  static FamilySpec arch(int p);
  static FamilySpec ingarch(int p);
  static FamilySpec ingarch11();
  static FamilySpec biv_ingarch();

  [[nodiscard]] FamilyKind kind() const noexcept { return kind_; }
  [[nodiscard]] int p() const noexcept { return p_; }
  [[nodiscard]] int q() const noexcept { return q_; }
  [[nodiscard]] int obs_dim() const noexcept { return obs_dim_; }
  [[nodiscard]] int cov_dim() const noexcept { return cov_dim_; }
  [[nodiscard]] int param_dim() const noexcept { return static_cast<int>(box_.size()); }
  [[nodiscard]] const std::vector<Interval>& box() const noexcept { return box_; }
  [[nodiscard]] const std::vector<std::string>& coordinate_names() const noexcept { return names_; }
  [[nodiscard]] double h_floor() const noexcept { return h_floor_; }
  [[nodiscard]] double c_floor() const noexcept { return c_floor_; }
  [[nodiscard]] bool is_count_family() const noexcept;

  /// Index of a named coordinate; throws InvalidArgument when unknown.
  [[nodiscard]] std::size_t coordinate_index(const std::string& name) const;

  [[nodiscard]] FamilySpec with_box(std::size_t coord, Interval iv) const;
  [[nodiscard]] FamilySpec with_floors(double h_floor, double c_floor) const;

  /// Coordinates kept in every candidate by default (intercepts, scale).
  [[nodiscard]] std::vector<std::size_t> default_mandatory() const;

  /// Ordered coordinate groups that HIERARCHICAL_LAGS adds one at a time.
  /// For ARX with covariates the y-lag and x-lag groups nest independently.
  [[nodiscard]] std::vector<std::vector<std::size_t>> lag_groups() const;
  [[nodiscard]] std::vector<std::vector<std::size_t>> covariate_lag_groups() const;

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;

 private:
  FamilySpec(FamilyKind kind, int p, int q, int obs_dim, int cov_dim);
  void validate() const;

  FamilyKind kind_ = FamilyKind::ARX;
  int p_ = 0;
  int q_ = 0;
  int obs_dim_ = 1;
  int cov_dim_ = 0;
  std::vector<Interval> box_;
  std::vector<std::string> names_;
  double h_floor_ = 1e-6;
  double c_floor_ = 1e-6;
};

/// A model m: the coordinates left free; every other coordinate is pinned at zero.
/// Indices are 0-based internally; the text form `{1,2,4}` is 1-based.
class ModelSubset {
 public:
  ModelSubset() = default;
  /// Sorts and removes duplicates.
  explicit ModelSubset(std::vector<std::size_t> indices);

  [[nodiscard]] static ModelSubset full(std::size_t d);
  /// Parse "1,2,4" or "{1,2,4}" (1-based).
  [[nodiscard]] static ModelSubset parse(const std::string& text);

  [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return idx_; }
  [[nodiscard]] std::size_t size() const noexcept { return idx_.size(); }
  [[nodiscard]] bool empty() const noexcept { return idx_.empty(); }
  [[nodiscard]] bool contains(std::size_t i) const;
  [[nodiscard]] bool is_subset_of(const ModelSubset& other) const;
  [[nodiscard]] bool is_strict_subset_of(const ModelSubset& other) const;
  /// Throws InvalidArgument when an index is >= d.
  void check_range(std::size_t d) const;

  [[nodiscard]] std::vector<std::size_t> one_based() const;
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const ModelSubset&, const ModelSubset&) = default;
  /// Size first, then lexicographic index order.
  friend bool operator<(const ModelSubset& a, const ModelSubset& b);

 private:
  std::vector<std::size_t> idx_;
};

/// Strong type for a full-length parameter vector theta.
struct ParamVector {
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(Eigen::VectorXd v) : values(std::move(v)) {}
  ParamVector(std::initializer_list<double> v);

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values(static_cast<Eigen::Index>(i)); }
  double& operator[](std::size_t i) { return values(static_cast<Eigen::Index>(i)); }
  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.values.size() == b.values.size() && a.values == b.values;
  }
};

/// True when every coordinate is inside its box interval or pinned at exactly zero.
[[nodiscard]] bool in_box(const FamilySpec& spec, const ParamVector& theta);
void require_in_box(const FamilySpec& spec, const ParamVector& theta);

/// Conditional moments at time t. For AC-X families `mean` is f and `scale` is H = M^2;
/// for count families both hold the intensity lambda (the Poisson conditional variance).
struct Conditionals {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

/// Conditional moments at 1-based time t (1 <= t <= n+1) under the truncated-past convention.
[[nodiscard]] Conditionals eval_conditionals(const FamilySpec& spec, const ParamVector& theta,
                                             const Trajectory& prefix, std::size_t t);

[[nodiscard]] ParamVector project_to_subset(const ParamVector& theta, const ModelSubset& m);

enum class EnumerationPolicy { AllSubsets, HierarchicalLags, ExplicitList };

/// Candidate models containing `mandatory`, ordered by size then lexicographically.
/// `explicit_list` is only read for ExplicitList.
[[nodiscard]] std::vector<ModelSubset> enumerate_models(const FamilySpec& spec, EnumerationPolicy policy,
                                                        const std::vector<std::size_t>& mandatory,
                                                        const std::vector<ModelSubset>& explicit_list = {});

/// Nested lag models using at most `max_lag_levels` y-lag groups (all of them when negative).
[[nodiscard]] std::vector<ModelSubset> nested_models(const FamilySpec& spec, int max_lag_levels = -1);

}  // namespace pencrit
