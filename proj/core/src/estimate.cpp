#include "pencrit/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "optimizer.hpp"
#include "pencrit/contrast.hpp"
#include "pencrit/error.hpp"
#include "pencrit/log.hpp"

namespace pencrit {

namespace {

struct FreeProblem {
  const FamilySpec& spec;
  const Trajectory& traj;
  const ModelSubset& m;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  FreeProblem(const FamilySpec& s, const Trajectory& t, const ModelSubset& sub)
      : spec(s), traj(t), m(sub), lo(static_cast<Eigen::Index>(sub.size())), hi(static_cast<Eigen::Index>(sub.size())) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      const auto& iv = spec.box()[m.indices()[k]];
      lo(static_cast<Eigen::Index>(k)) = iv.lo;
      hi(static_cast<Eigen::Index>(k)) = iv.hi;
    }
  }

  [[nodiscard]] ParamVector embed(const Eigen::VectorXd& x) const {
    ParamVector theta(Eigen::VectorXd::Zero(spec.param_dim()));
    for (std::size_t k = 0; k < m.size(); ++k) theta[m.indices()[k]] = x(static_cast<Eigen::Index>(k));
    return theta;
  }

  [[nodiscard]] double value(const Eigen::VectorXd& x) const {
    try {
      return evaluate_contrast(spec, traj, embed(x)).total;
    } catch (const ComputationError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  [[nodiscard]] Eigen::VectorXd free_part(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(m.size()));
    for (std::size_t k = 0; k < m.size(); ++k) out(static_cast<Eigen::Index>(k)) = full(static_cast<Eigen::Index>(m.indices()[k]));
    return out;
  }
};

// Projected gradient: components pushing outward at an active bound are dropped.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, std::vector<bool>& active) {
  Eigen::VectorXd pg = g;
  active.assign(static_cast<std::size_t>(x.size()), false);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, hi(i) - lo(i));
    if ((x(i) <= lo(i) + tol && g(i) > 0.0) || (x(i) >= hi(i) - tol && g(i) < 0.0)) {
      pg(i) = 0.0;
      active[static_cast<std::size_t>(i)] = true;
    }
  }
  return pg;
}

void warn_near_unit_root(const FamilySpec& spec, const ParamVector& theta) {
  if (!spec.is_count_family()) return;
  double mass = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& name = spec.coordinate_names()[i];
    if (name != "a0" && name != "w1" && name != "w2") mass += theta[i];
  }
  if (spec.kind() == FamilyKind::BIV_INGARCH) mass /= 2.0;
  if (mass > 0.99) logger().warn("fitted lag coefficients sum to {:.4f} > 0.99 (outside the stability region)", mass);
}

}  // namespace

FitResult fit_mce(const FamilySpec& spec, const Trajectory& traj, const ModelSubset& m,
                  const OptimizerOptions& options) {
  m.check_range(static_cast<std::size_t>(spec.param_dim()));
  if (traj.size() == 0) throw InvalidArgument("fit_mce: empty trajectory");
  if (options.starts < 1) throw InvalidArgument("fit_mce: need at least one start");
  const FreeProblem prob(spec, traj, m);
  const auto k = static_cast<Eigen::Index>(m.size());
  const double n = static_cast<double>(traj.size());

  FitResult out;
  out.subset = m;
  out.n = traj.size();
  if (options.record_trace) out.optimizer_trace.emplace();

  if (k == 0) {
    const double v = prob.value(Eigen::VectorXd());
    if (!std::isfinite(v)) throw ComputationError("fit_mce: contrast not finite for the empty model");
    out.theta_hat = prob.embed(Eigen::VectorXd());
    out.contrast_at_min = v;
    out.converged = true;
    return out;
  }

  // Multi-start direct search.
  const detail::Objective objective = [&prob](const Eigen::VectorXd& x) { return prob.value(x); };
  std::vector<detail::DirectSearchResult> runs;
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd x0 = 0.5 * (prob.lo + prob.hi);
    if (s > 0) {
      const Eigen::VectorXd u = detail::halton_point(static_cast<std::size_t>(s) + options.start_offset, static_cast<int>(k));
      x0 = prob.lo + u.cwiseProduct(prob.hi - prob.lo);
    }
    if (!std::isfinite(prob.value(x0))) continue;
    auto run = detail::nelder_mead_box(objective, x0, prob.lo, prob.hi, options.max_direct_iterations);
    if (out.optimizer_trace) out.optimizer_trace->push_back({run.x, run.value});
    if (std::isfinite(run.value)) runs.push_back(std::move(run));
  }
  if (runs.empty()) {
    throw ComputationError("fit_mce: no start produced a finite contrast for subset " + m.to_string());
  }
  const detail::DirectSearchResult* best = &runs.front();
  for (const auto& r : runs) {
    const double tie = 1e-10 * (1.0 + std::abs(best->value));
    if (r.value < best->value - tie || (std::abs(r.value - best->value) <= tie && r.x.norm() < best->x.norm())) {
      best = &r;
    }
  }

  // Projected Newton polish with analytic derivatives.
  Eigen::VectorXd x = best->x;
  double fx = best->value;
  int iterations = best->iterations;
  double last_step = std::numeric_limits<double>::infinity();
  double pg_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<bool> active;
  for (int step = 0; step <= options.max_polish_steps; ++step) {
    const auto cv = evaluate_contrast(spec, traj, prob.embed(x), {.order = 2});
    fx = cv.total;
    const Eigen::VectorXd g = prob.free_part(*cv.gradient);
    const Eigen::MatrixXd h = restrict_to(*cv.hessian, m);
    const Eigen::VectorXd pg = projected_gradient(x, g, prob.lo, prob.hi, active);
    pg_norm = pg.norm();
    const double tol_g = options.tol_g_factor * (1.0 + std::abs(fx) / n);
    if (pg_norm < tol_g && last_step < options.tol_x) {
      converged = true;
      break;
    }
    if (step == options.max_polish_steps) break;

    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!active[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(k);
    if (nf > 0) {
      Eigen::MatrixXd hff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf(a) = g(free_idx[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hff);
      Eigen::VectorXd df;
      bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all();
      if (newton_ok) {
        df = -ldlt.solve(gf);
        newton_ok = df.allFinite() && df.dot(gf) < 0.0;
      }
      if (!newton_ok) {
        const double curv = std::max(hff.diagonal().cwiseAbs().maxCoeff(), 1e-8);
        df = -gf / curv;
      }
      for (Eigen::Index a = 0; a < nf; ++a) dir(free_idx[static_cast<std::size_t>(a)]) = df(a);
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new = x;
    double f_new = fx;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      x_new = (x + alpha * dir).cwiseMax(prob.lo).cwiseMin(prob.hi);
      f_new = prob.value(x_new);
      if (f_new <= fx + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
    }
    ++iterations;
    if (!accepted) {
      // No measurable decrease: the Newton step is below round-off of the contrast.
      last_step = dir.cwiseAbs().maxCoeff();
      if (last_step >= options.tol_x) break;
      continue;
    }
    last_step = (x_new - x).cwiseAbs().maxCoeff();
    x = x_new;
    fx = f_new;
    if (out.optimizer_trace) out.optimizer_trace->push_back({x, fx});
  }

  out.theta_hat = prob.embed(x);
  out.contrast_at_min = evaluate_contrast(spec, traj, out.theta_hat).total;
  out.converged = converged;
  out.iterations = iterations;
  out.gradient_norm = pg_norm;
  if (!converged) logger().info("fit_mce: subset {} did not meet the convergence tolerances", m.to_string());
  warn_near_unit_root(spec, out.theta_hat);
  return out;
}

Eigen::MatrixXd restrict_to(const Eigen::MatrixXd& full, const ModelSubset& m) {
  const auto k = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out(a, b) = full(static_cast<Eigen::Index>(m.indices()[static_cast<std::size_t>(a)]),
                       static_cast<Eigen::Index>(m.indices()[static_cast<std::size_t>(b)]));
    }
  }
  return out;
}

double symmetric_condition(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

SandwichMatrices sandwich_from_matrices(const ModelSubset& subset, const Eigen::MatrixXd& F, const Eigen::MatrixXd& G) {
  const auto k = static_cast<Eigen::Index>(subset.size());
  if (F.rows() != k || F.cols() != k || G.rows() != k || G.cols() != k) {
    throw InvalidArgument("sandwich: matrices must be |m| x |m|");
  }
  SandwichMatrices out;
  out.subset = subset;
  out.F_hat = 0.5 * (F + F.transpose());
  out.G_hat = 0.5 * (G + G.transpose());
  out.condition_F = symmetric_condition(out.F_hat);
  if (!(out.condition_F <= kMaxConditionF)) {
    std::ostringstream os;
    os << "sandwich: F is numerically singular for subset " << subset.to_string() << " (condition " << out.condition_F
       << ")";
    throw ComputationError(os.str());
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(out.F_hat);
  const Eigen::MatrixXd f_inv = lu.inverse();
  out.Sigma_hat = f_inv * out.G_hat * f_inv;
  return out;
}

SandwichMatrices estimate_sandwich(const FamilySpec& spec, const Trajectory& traj, const FitResult& fit) {
  if (!fit.converged) logger().warn("estimate_sandwich: fit for {} did not converge", fit.subset.to_string());
  const auto td = term_derivatives(spec, traj, fit.theta_hat, true);
  const double n = static_cast<double>(traj.size());
  const auto k = static_cast<Eigen::Index>(fit.subset.size());
  Eigen::MatrixXd scores(td.scores.rows(), k);
  for (Eigen::Index a = 0; a < k; ++a) {
    scores.col(a) = td.scores.col(static_cast<Eigen::Index>(fit.subset.indices()[static_cast<std::size_t>(a)]));
  }
  const Eigen::MatrixXd F = restrict_to(td.hessian_sum, fit.subset) / n;
  const Eigen::MatrixXd G = (scores.transpose() * scores) / n;
  return sandwich_from_matrices(fit.subset, F, G);
}

VarthetaDiagnostic vartheta_diagnostic(const SandwichMatrices& sand) {
  const auto k = sand.F_hat.rows();
  if (k == 0) throw InvalidArgument("vartheta_diagnostic: empty subset");
  if (!(sand.condition_F <= kMaxConditionF)) throw ComputationError("vartheta_diagnostic: F is singular");
  const Eigen::MatrixXd fg = sand.F_hat.partialPivLu().solve(sand.G_hat);
  VarthetaDiagnostic out;
  out.vartheta_hat = fg.trace() / static_cast<double>(k);
  const double g_max = sand.G_hat.cwiseAbs().maxCoeff();
  const double r_max = (sand.G_hat - out.vartheta_hat * sand.F_hat).cwiseAbs().maxCoeff();
  out.relative_residual = g_max > 0.0 ? r_max / g_max : 0.0;
  return out;
}

}  // namespace pencrit
