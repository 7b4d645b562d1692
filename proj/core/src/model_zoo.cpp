#include "pencrit/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "moment_recursion.hpp"
#include "pencrit/error.hpp"

namespace pencrit {

namespace {

constexpr Interval kLagBox{-0.99, 0.99};
constexpr Interval kPositiveLagBox{0.0, 0.99};
constexpr Interval kMeanInterceptBox{-10.0, 10.0};
constexpr Interval kPositiveBox{0.01, 10.0};

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::ARX: return "arx";
    case FamilyKind::ARCH: return "arch";
    case FamilyKind::INGARCH_P: return "ingarch";
    case FamilyKind::INGARCH_11: return "ingarch11";
    case FamilyKind::BIV_INGARCH: return "biv_ingarch";
  }
  return "?";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "arx") return FamilyKind::ARX;
  if (name == "arch") return FamilyKind::ARCH;
  if (name == "ingarch" || name == "ingarch_p") return FamilyKind::INGARCH_P;
  if (name == "ingarch11" || name == "ingarch_11") return FamilyKind::INGARCH_11;
  if (name == "biv_ingarch") return FamilyKind::BIV_INGARCH;
  throw InvalidArgument("unknown family '" + name + "' (expected arx, arch, ingarch, ingarch11, biv_ingarch)");
}

// ---------------------------------------------------------------------------
// FamilySpec

FamilySpec::FamilySpec(FamilyKind kind, int p, int q, int obs_dim, int cov_dim)
    : kind_(kind), p_(p), q_(q), obs_dim_(obs_dim), cov_dim_(cov_dim) {}

FamilySpec FamilySpec::arx(int p, int q, int cov_dim) {
  if (p < 0 || q < 0 || cov_dim < 0) throw InvalidArgument("arx: orders must be non-negative");
  if (q > 0 && cov_dim == 0) throw InvalidArgument("arx: covariate lags q > 0 need cov_dim >= 1");
  FamilySpec s(FamilyKind::ARX, p, q, 1, cov_dim);
  s.box_.push_back(kMeanInterceptBox);
  s.names_.emplace_back("c");
  for (int i = 1; i <= p; ++i) {
    s.box_.push_back(kLagBox);
    s.names_.push_back("a" + std::to_string(i));
  }
  for (int j = 1; j <= q; ++j) {
    for (int k = 1; k <= cov_dim; ++k) {
      s.box_.push_back(kLagBox);
      s.names_.push_back(cov_dim == 1 ? "b" + std::to_string(j) : "b" + std::to_string(j) + "_" + std::to_string(k));
    }
  }
  s.box_.push_back(kPositiveBox);
  s.names_.emplace_back("sigma");
  s.validate();
  return s;
}

FamilySpec FamilySpec::arch(int p) {
  if (p < 0) throw InvalidArgument("arch: order must be non-negative");
  FamilySpec s(FamilyKind::ARCH, p, 0, 1, 0);
  s.box_.push_back(kPositiveBox);
  s.names_.emplace_back("a0");
  for (int i = 1; i <= p; ++i) {
    s.box_.push_back(kPositiveLagBox);
    s.names_.push_back("a" + std::to_string(i));
  }
  s.validate();
  return s;
}

FamilySpec FamilySpec::ingarch(int p) {
  if (p < 0) throw InvalidArgument("ingarch: order must be non-negative");
  FamilySpec s(FamilyKind::INGARCH_P, p, 0, 1, 0);
  s.box_.push_back(kPositiveBox);
  s.names_.emplace_back("a0");
  for (int i = 1; i <= p; ++i) {
    s.box_.push_back(kPositiveLagBox);
    s.names_.push_back("a" + std::to_string(i));
  }
  s.validate();
  return s;
}

FamilySpec FamilySpec::ingarch11() {
  FamilySpec s(FamilyKind::INGARCH_11, 1, 1, 1, 0);
  s.box_ = {kPositiveBox, kPositiveLagBox, kPositiveLagBox};
  s.names_ = {"a0", "a1", "b1"};
  s.validate();
  return s;
}

FamilySpec FamilySpec::biv_ingarch() {
  FamilySpec s(FamilyKind::BIV_INGARCH, 1, 0, 2, 0);
  s.box_ = {kPositiveBox, kPositiveBox, kPositiveLagBox, kPositiveLagBox, kPositiveLagBox, kPositiveLagBox};
  s.names_ = {"w1", "w2", "A11", "A12", "A21", "A22"};
  s.validate();
  return s;
}

bool FamilySpec::is_count_family() const noexcept {
  return kind_ == FamilyKind::INGARCH_P || kind_ == FamilyKind::INGARCH_11 || kind_ == FamilyKind::BIV_INGARCH;
}

std::size_t FamilySpec::coordinate_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("family " + to_string(kind_) + " has no coordinate '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

FamilySpec FamilySpec::with_box(std::size_t coord, Interval iv) const {
  if (coord >= box_.size()) throw InvalidArgument("with_box: coordinate out of range");
  FamilySpec s = *this;
  s.box_[coord] = iv;
  s.validate();
  return s;
}

FamilySpec FamilySpec::with_floors(double h_floor, double c_floor) const {
  FamilySpec s = *this;
  s.h_floor_ = h_floor;
  s.c_floor_ = c_floor;
  s.validate();
  return s;
}

void FamilySpec::validate() const {
  std::size_t expected = 0;
  switch (kind_) {
    case FamilyKind::ARX: expected = 2 + p_ + q_ * cov_dim_; break;
    case FamilyKind::ARCH:
    case FamilyKind::INGARCH_P: expected = 1 + p_; break;
    case FamilyKind::INGARCH_11: expected = 3; break;
    case FamilyKind::BIV_INGARCH: expected = 6; break;
  }
  if (box_.size() != expected) throw InvalidArgument("family param_dim does not match its orders");
  for (std::size_t i = 0; i < box_.size(); ++i) {
    const auto& iv = box_[i];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw InvalidArgument("box for coordinate '" + names_[i] + "' is empty or unbounded");
    }
  }
  for (std::size_t i : default_mandatory()) {
    if (kind_ == FamilyKind::ARX && names_[i] == "c") continue;
    if (!(box_[i].lo > 0.0)) {
      throw InvalidArgument("box for intercept/scale coordinate '" + names_[i] + "' needs a positive lower bound");
    }
  }
  if (!(h_floor_ > 0.0) || !(c_floor_ > 0.0)) throw InvalidArgument("h_floor and c_floor must be positive");
}

std::vector<std::size_t> FamilySpec::default_mandatory() const {
  switch (kind_) {
    case FamilyKind::ARX: return {0, box_.size() - 1};
    case FamilyKind::ARCH:
    case FamilyKind::INGARCH_P:
    case FamilyKind::INGARCH_11: return {0};
    case FamilyKind::BIV_INGARCH: return {0, 1};
  }
  return {};
}

std::vector<std::vector<std::size_t>> FamilySpec::lag_groups() const {
  std::vector<std::vector<std::size_t>> groups;
  switch (kind_) {
    case FamilyKind::ARX:
    case FamilyKind::ARCH:
    case FamilyKind::INGARCH_P:
      for (int i = 1; i <= p_; ++i) groups.push_back({static_cast<std::size_t>(i)});
      break;
    case FamilyKind::INGARCH_11: groups = {{1}, {2}}; break;
    case FamilyKind::BIV_INGARCH: groups = {{2, 5}, {3, 4}}; break;
  }
  return groups;
}

std::vector<std::vector<std::size_t>> FamilySpec::covariate_lag_groups() const {
  std::vector<std::vector<std::size_t>> groups;
  if (kind_ != FamilyKind::ARX) return groups;
  for (int j = 0; j < q_; ++j) {
    std::vector<std::size_t> g;
    for (int k = 0; k < cov_dim_; ++k) g.push_back(static_cast<std::size_t>(1 + p_ + j * cov_dim_ + k));
    groups.push_back(std::move(g));
  }
  return groups;
}

// ---------------------------------------------------------------------------
// ModelSubset

ModelSubset::ModelSubset(std::vector<std::size_t> indices) : idx_(std::move(indices)) {
  std::sort(idx_.begin(), idx_.end());
  idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
}

ModelSubset ModelSubset::full(std::size_t d) {
  std::vector<std::size_t> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = i;
  return ModelSubset(std::move(v));
}

ModelSubset ModelSubset::parse(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (ch == '{' || ch == '}') continue;
    s.push_back(ch == ';' || ch == ' ' ? ',' : ch);
  }
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(tok, &pos);
    } catch (const std::exception&) {
      throw ParseError("subset '" + text + "': '" + tok + "' is not an index");
    }
    if (pos != tok.size() || v < 1) throw ParseError("subset '" + text + "': indices are 1-based positive integers");
    out.push_back(static_cast<std::size_t>(v - 1));
  }
  return ModelSubset(std::move(out));
}

bool ModelSubset::contains(std::size_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

bool ModelSubset::is_subset_of(const ModelSubset& other) const {
  return std::includes(other.idx_.begin(), other.idx_.end(), idx_.begin(), idx_.end());
}

bool ModelSubset::is_strict_subset_of(const ModelSubset& other) const {
  return size() < other.size() && is_subset_of(other);
}

void ModelSubset::check_range(std::size_t d) const {
  if (!idx_.empty() && idx_.back() >= d) {
    throw InvalidArgument("subset " + to_string() + " has index beyond d = " + std::to_string(d));
  }
}

std::vector<std::size_t> ModelSubset::one_based() const {
  std::vector<std::size_t> v = idx_;
  for (auto& i : v) ++i;
  return v;
}

std::string ModelSubset::to_string() const {
  std::string s = "{";
  for (std::size_t k = 0; k < idx_.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(idx_[k] + 1);
  }
  return s + "}";
}

bool operator<(const ModelSubset& a, const ModelSubset& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.idx_ < b.idx_;
}

// ---------------------------------------------------------------------------
// ParamVector / box

ParamVector::ParamVector(std::initializer_list<double> v) : values(static_cast<Eigen::Index>(v.size())) {
  Eigen::Index i = 0;
  for (double x : v) values(i++) = x;
}

bool in_box(const FamilySpec& spec, const ParamVector& theta) {
  if (theta.size() != static_cast<std::size_t>(spec.param_dim())) return false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double v = theta[i];
    if (!std::isfinite(v)) return false;
    if (v != 0.0 && !spec.box()[i].contains(v)) return false;
  }
  return true;
}

void require_in_box(const FamilySpec& spec, const ParamVector& theta) {
  if (theta.size() != static_cast<std::size_t>(spec.param_dim())) {
    throw InvalidArgument("theta has length " + std::to_string(theta.size()) + ", family " + to_string(spec.kind()) +
                          " needs " + std::to_string(spec.param_dim()));
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double v = theta[i];
    const auto& iv = spec.box()[i];
    if (!std::isfinite(v) || (v != 0.0 && !iv.contains(v))) {
      std::ostringstream os;
      os << "theta coordinate '" << spec.coordinate_names()[i] << "' = " << v << " outside box [" << iv.lo << ", "
         << iv.hi << "]";
      throw InvalidArgument(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Operations

Conditionals eval_conditionals(const FamilySpec& spec, const ParamVector& theta, const Trajectory& prefix,
                               std::size_t t) {
  if (t < 1 || t > prefix.size() + 1) {
    throw InvalidArgument("eval_conditionals: t = " + std::to_string(t) + " outside 1.." +
                          std::to_string(prefix.size() + 1));
  }
  require_in_box(spec, theta);
  if (static_cast<int>(prefix.obs_dim()) != spec.obs_dim()) {
    throw InvalidArgument("eval_conditionals: trajectory dimension does not match family");
  }
  if (spec.kind() == FamilyKind::ARX && spec.q() > 0 && static_cast<int>(prefix.cov_dim()) != spec.cov_dim()) {
    throw InvalidArgument("eval_conditionals: family needs " + std::to_string(spec.cov_dim()) + " covariates");
  }
  detail::MomentRecursion rec(spec, theta.values, prefix.obs_data().data(),
                              prefix.has_covariates() ? prefix.covariate_data().data() : nullptr, 0);
  const detail::Moments* m = nullptr;
  for (std::size_t s = 1; s <= t; ++s) m = &rec.next();
  Conditionals out;
  out.mean.resize(m->components);
  out.scale.resize(m->components);
  for (int k = 0; k < m->components; ++k) {
    out.mean(k) = m->level[static_cast<std::size_t>(k)];
    out.scale(k) = spec.is_count_family() ? m->level[static_cast<std::size_t>(k)] : m->scale;
  }
  return out;
}

ParamVector project_to_subset(const ParamVector& theta, const ModelSubset& m) {
  ParamVector out = theta;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!m.contains(i)) out[i] = 0.0;
  }
  return out;
}

namespace {

std::vector<ModelSubset> finalize(std::vector<ModelSubset> models) {
  std::sort(models.begin(), models.end());
  models.erase(std::unique(models.begin(), models.end()), models.end());
  return models;
}

ModelSubset merged(const std::vector<std::size_t>& base, const std::vector<std::vector<std::size_t>>& groups,
                   std::size_t y_levels, const std::vector<std::vector<std::size_t>>& xgroups, std::size_t x_levels) {
  std::vector<std::size_t> idx = base;
  for (std::size_t k = 0; k < y_levels; ++k) idx.insert(idx.end(), groups[k].begin(), groups[k].end());
  for (std::size_t k = 0; k < x_levels; ++k) idx.insert(idx.end(), xgroups[k].begin(), xgroups[k].end());
  return ModelSubset(std::move(idx));
}

}  // namespace

std::vector<ModelSubset> enumerate_models(const FamilySpec& spec, EnumerationPolicy policy,
                                          const std::vector<std::size_t>& mandatory,
                                          const std::vector<ModelSubset>& explicit_list) {
  const auto d = static_cast<std::size_t>(spec.param_dim());
  const ModelSubset must(mandatory);
  must.check_range(d);

  switch (policy) {
    case EnumerationPolicy::AllSubsets: {
      if (d > 20) throw InvalidArgument("ALL_SUBSETS needs d <= 20, family has d = " + std::to_string(d));
      std::vector<ModelSubset> out;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < d; ++i) {
          if (mask & (std::uint64_t{1} << i)) idx.push_back(i);
        }
        ModelSubset m(std::move(idx));
        if (must.is_subset_of(m)) out.push_back(std::move(m));
      }
      return finalize(std::move(out));
    }
    case EnumerationPolicy::HierarchicalLags: {
      const auto groups = spec.lag_groups();
      const auto xgroups = spec.covariate_lag_groups();
      std::vector<ModelSubset> out;
      for (std::size_t ky = 0; ky <= groups.size(); ++ky) {
        for (std::size_t kx = 0; kx <= xgroups.size(); ++kx) {
          out.push_back(merged(must.indices(), groups, ky, xgroups, kx));
        }
      }
      return finalize(std::move(out));
    }
    case EnumerationPolicy::ExplicitList: {
      std::vector<ModelSubset> out;
      for (const auto& m : explicit_list) {
        m.check_range(d);
        if (!must.is_subset_of(m)) {
          throw InvalidArgument("candidate " + m.to_string() + " misses mandatory coordinates " + must.to_string());
        }
        out.push_back(m);
      }
      return finalize(std::move(out));
    }
  }
  return {};
}

std::vector<ModelSubset> nested_models(const FamilySpec& spec, int max_lag_levels) {
  const auto groups = spec.lag_groups();
  const auto levels = max_lag_levels < 0 ? groups.size() : static_cast<std::size_t>(max_lag_levels);
  if (levels > groups.size()) {
    throw InvalidArgument("nested:" + std::to_string(levels) + " exceeds the family's " +
                          std::to_string(groups.size()) + " lag levels");
  }
  const auto xgroups = spec.covariate_lag_groups();
  std::vector<ModelSubset> out;
  for (std::size_t k = 0; k <= levels; ++k) {
    out.push_back(merged(spec.default_mandatory(), groups, k, xgroups, xgroups.size()));
  }
  return finalize(std::move(out));
}

}  // namespace pencrit
