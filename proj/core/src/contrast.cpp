#include "pencrit/contrast.hpp"

#include <sstream>

#include "moment_recursion.hpp"
#include "pencrit/error.hpp"

namespace pencrit {

namespace {

// Elementwise Neumaier accumulation for vectors and matrices.
class CompensatedArray {
 public:
  CompensatedArray(Eigen::Index rows, Eigen::Index cols)
      : sum_(Eigen::ArrayXXd::Zero(rows, cols)), comp_(Eigen::ArrayXXd::Zero(rows, cols)) {}

  template <class Derived>
  void add(const Eigen::DenseBase<Derived>& v) {
    for (Eigen::Index j = 0; j < sum_.cols(); ++j) {
      for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
        const double x = v(i, j);
        const double s = sum_(i, j);
        const double t = s + x;
        comp_(i, j) += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        sum_(i, j) = t;
      }
    }
  }
  [[nodiscard]] Eigen::MatrixXd value() const { return (sum_ + comp_).matrix(); }

 private:
  Eigen::ArrayXXd sum_;
  Eigen::ArrayXXd comp_;
};

[[noreturn]] void non_finite(const char* which, std::size_t t) {
  std::ostringstream os;
  os << which << " contrast: non-finite term at t = " << t;
  throw ComputationError(os.str());
}

void check_inputs(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta, ContrastKind expected,
                  int order) {
  if (order < 0 || order > 2) throw InvalidArgument("contrast: derivative order must be 0, 1 or 2");
  if (contrast_dispatch(spec) != expected) {
    throw InvalidArgument("contrast: family " + to_string(spec.kind()) + " does not use the " +
                          (expected == ContrastKind::Gaussian ? "Gaussian" : "Poisson") + " contrast");
  }
  if (expected == ContrastKind::Gaussian && traj.kind() != SeriesKind::Real) {
    throw InvalidArgument("gaussian contrast: needs a REAL trajectory, got COUNT");
  }
  if (expected == ContrastKind::Poisson && traj.kind() != SeriesKind::Count) {
    throw InvalidArgument("poisson contrast: needs a COUNT trajectory, got REAL");
  }
  if (static_cast<int>(traj.obs_dim()) != spec.obs_dim()) {
    throw InvalidArgument("contrast: trajectory has " + std::to_string(traj.obs_dim()) + " components, family needs " +
                          std::to_string(spec.obs_dim()));
  }
  if (spec.kind() == FamilyKind::ARX && spec.q() > 0 && static_cast<int>(traj.cov_dim()) != spec.cov_dim()) {
    throw InvalidArgument("contrast: family needs " + std::to_string(spec.cov_dim()) + " covariate columns, got " +
                          std::to_string(traj.cov_dim()));
  }
  require_in_box(spec, theta);
}

/// Calls on_term(t, phi_t, grad_t, hess_t) for t = 1..n with the unscaled loss phi_t.
/// grad_t / hess_t are only meaningful up to the requested order.
template <class OnTerm>
void walk_terms(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta, int order,
                OnTerm&& on_term) {
  const bool gaussian = contrast_dispatch(spec) == ContrastKind::Gaussian;
  const int d = spec.param_dim();
  detail::MomentRecursion rec(spec, theta.values, traj.obs_data().data(),
                              traj.has_covariates() ? traj.covariate_data().data() : nullptr, order);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(order >= 1 ? d : 0);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(order >= 2 ? d : 0, order >= 2 ? d : 0);
  const std::size_t n = traj.size();
  const int comps = spec.obs_dim();
  double last_h = -1.0;
  double last_log_h = 0.0;

  for (std::size_t t = 1; t <= n; ++t) {
    const auto& m = rec.next();
    double phi = 0.0;
    if (gaussian) {
      const double e = traj.y(t) - m.level[0];
      const double hh = m.scale;
      const double r = e * e / hh;
      if (hh != last_h) {
        last_h = hh;
        last_log_h = std::log(hh);
      }
      phi = r + last_log_h;
      if (order >= 1) {
        g.noalias() = (-2.0 * e / hh) * m.d_level[0] + ((1.0 - r) / hh) * m.d_scale;
      }
      if (order >= 2) {
        const auto& df = m.d_level[0];
        const auto& dh = m.d_scale;
        h.noalias() = (2.0 / hh) * df * df.transpose();
        const double cross = 2.0 * e / (hh * hh);
        h.noalias() += cross * df * dh.transpose();
        h.noalias() += cross * dh * df.transpose();
        h.noalias() += (2.0 * r / (hh * hh) - 1.0 / (hh * hh)) * dh * dh.transpose();
        if (m.d2_level_nonzero) h.noalias() -= (2.0 * e / hh) * m.d2_level[0];
        if (m.d2_scale_nonzero) h.noalias() += ((1.0 - r) / hh) * m.d2_scale;
      }
    } else {
      if (order >= 1) g.setZero();
      if (order >= 2) h.setZero();
      for (int k = 0; k < comps; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const double y = traj.y(t, kk);
        const double lam = m.level[kk];
        phi -= y * std::log(lam) - lam;
        if (order >= 1) g.noalias() += (1.0 - y / lam) * m.d_level[kk];
        if (order >= 2) {
          h.noalias() += (y / (lam * lam)) * m.d_level[kk] * m.d_level[kk].transpose();
          if (m.d2_level_nonzero) h.noalias() += (1.0 - y / lam) * m.d2_level[kk];
        }
      }
    }
    if (!std::isfinite(phi)) non_finite(gaussian ? "gaussian" : "poisson", t);
    on_term(t, phi, g, h);
  }
}

ContrastValue run_contrast(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta,
                           ContrastOptions opts, ContrastKind kind) {
  check_inputs(spec, traj, theta, kind, opts.order);
  const int d = spec.param_dim();
  ContrastValue out;
  out.scale = kind == ContrastKind::Gaussian ? 0.5 : 1.0;
  CompensatedSum total;
  CompensatedArray grad(opts.order >= 1 ? d : 0, 1);
  CompensatedArray hess(opts.order >= 2 ? d : 0, opts.order >= 2 ? d : 0);
  std::vector<double> terms;
  if (opts.keep_terms) terms.reserve(traj.size());

  walk_terms(spec, traj, theta, opts.order,
             [&](std::size_t, double phi, const Eigen::VectorXd& g, const Eigen::MatrixXd& h) {
               const double term = out.scale * phi;
               total.add(term);
               if (opts.keep_terms) terms.push_back(term);
               if (opts.order >= 1) grad.add(g);
               if (opts.order >= 2) hess.add(h);
             });

  out.total = total.value();
  if (opts.keep_terms) out.per_term = std::move(terms);
  if (opts.order >= 1) out.gradient = out.scale * grad.value().col(0);
  if (opts.order >= 2) {
    Eigen::MatrixXd hm = out.scale * hess.value();
    out.hessian = 0.5 * (hm + hm.transpose());
  }
  return out;
}

}  // namespace

ContrastKind contrast_dispatch(const FamilySpec& spec) noexcept {
  return spec.is_count_family() ? ContrastKind::Poisson : ContrastKind::Gaussian;
}

ContrastValue gaussian_contrast(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta,
                                ContrastOptions opts) {
  return run_contrast(spec, traj, theta, opts, ContrastKind::Gaussian);
}

ContrastValue poisson_contrast(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta,
                               ContrastOptions opts) {
  return run_contrast(spec, traj, theta, opts, ContrastKind::Poisson);
}

ContrastValue evaluate_contrast(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta,
                                ContrastOptions opts) {
  return run_contrast(spec, traj, theta, opts, contrast_dispatch(spec));
}

TermDerivatives term_derivatives(const FamilySpec& spec, const Trajectory& traj, const ParamVector& theta,
                                 bool with_hessian) {
  const auto kind = contrast_dispatch(spec);
  const int order = with_hessian ? 2 : 1;
  check_inputs(spec, traj, theta, kind, order);
  const int d = spec.param_dim();
  TermDerivatives out;
  out.scale = kind == ContrastKind::Gaussian ? 0.5 : 1.0;
  out.scores.resize(static_cast<Eigen::Index>(traj.size()), d);
  CompensatedArray hess(with_hessian ? d : 0, with_hessian ? d : 0);
  walk_terms(spec, traj, theta, order,
             [&](std::size_t t, double, const Eigen::VectorXd& g, const Eigen::MatrixXd& h) {
               out.scores.row(static_cast<Eigen::Index>(t - 1)) = g.transpose();
               if (with_hessian) hess.add(h);
             });
  if (with_hessian) {
    Eigen::MatrixXd hm = hess.value();
    out.hessian_sum = 0.5 * (hm + hm.transpose());
  }
  return out;
}

}  // namespace pencrit
