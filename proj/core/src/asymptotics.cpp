#include "pencrit/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "pencrit/contrast.hpp"
#include "pencrit/error.hpp"

namespace pencrit {

namespace {

void check_nested(const ModelSubset& m_star, const ModelSubset& m_tilde) {
  if (!m_star.is_strict_subset_of(m_tilde)) {
    throw InvalidArgument("joint limit: m* = " + m_star.to_string() + " must be a strict subset of m~ = " +
                          m_tilde.to_string());
  }
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& f, const char* which) {
  const double cond = symmetric_condition(f);
  if (!(cond <= kMaxConditionF)) {
    std::ostringstream os;
    os << "joint limit: F(" << which << ") is singular (condition " << cond << ")";
    throw ComputationError(os.str());
  }
  return f.partialPivLu().inverse();
}

// Sigma = D G_joint D with D = blockdiag(F*^{-1}, F~^{-1}); eigenvalues of Q Sigma through
// the symmetric form Sigma^{1/2} Q Sigma^{1/2}.
JointLimit assemble(const ModelSubset& m_star, const ModelSubset& m_tilde, const Eigen::MatrixXd& f_star,
                    const Eigen::MatrixXd& f_tilde, const Eigen::MatrixXd& g_joint, double contrast_scale) {
  const auto a = static_cast<Eigen::Index>(m_star.size());
  const auto b = static_cast<Eigen::Index>(m_tilde.size());
  JointLimit jl;
  jl.m_star = m_star;
  jl.m_tilde = m_tilde;
  jl.contrast_scale = contrast_scale;

  const Eigen::MatrixXd fs = 0.5 * (f_star + f_star.transpose());
  const Eigen::MatrixXd ft = 0.5 * (f_tilde + f_tilde.transpose());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a + b, a + b);
  d.topLeftCorner(a, a) = checked_inverse(fs, "m*");
  d.bottomRightCorner(b, b) = checked_inverse(ft, "m~");
  const Eigen::MatrixXd g = 0.5 * (g_joint + g_joint.transpose());
  Eigen::MatrixXd sigma = d * g * d;
  sigma = 0.5 * (sigma + sigma.transpose());
  jl.sigma_joint = sigma;

  jl.q_matrix = Eigen::MatrixXd::Zero(a + b, a + b);
  jl.q_matrix.topLeftCorner(a, a) = -fs;
  jl.q_matrix.bottomRightCorner(b, b) = ft;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sig_es(sigma);
  jl.sigma_min_eigenvalue = sig_es.eigenvalues().minCoeff();
  const double sig_floor = kEigenZeroTolerance * std::max(0.0, sig_es.eigenvalues().maxCoeff());
  const Eigen::VectorXd sqrt_ev =
      sig_es.eigenvalues().unaryExpr([sig_floor](double v) { return v > sig_floor ? std::sqrt(v) : 0.0; });
  const Eigen::MatrixXd root = sig_es.eigenvectors() * sqrt_ev.asDiagonal() * sig_es.eigenvectors().transpose();
  Eigen::MatrixXd sym = root * jl.q_matrix * root;
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  jl.eigenvalues = es.eigenvalues();  // ascending

  Eigen::EigenSolver<Eigen::MatrixXd> raw(jl.q_matrix * sigma, false);
  jl.max_imag_part = raw.eigenvalues().imag().cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, jl.eigenvalues.cwiseAbs().maxCoeff());
  if (jl.max_imag_part > 1e-6 * scale) {
    std::ostringstream os;
    os << "joint limit: Q Sigma has complex eigenvalues (|Im| = " << jl.max_imag_part << ")";
    throw ComputationError(os.str());
  }

  const double zero_tol = kEigenZeroTolerance * jl.eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < jl.eigenvalues.size(); ++i) {
    const double v = jl.eigenvalues(i);
    if (v < -zero_tol) {
      ++jl.negatives;
    } else if (v > zero_tol) {
      ++jl.positives;
    } else {
      ++jl.zeros;
    }
  }
  return jl;
}

Eigen::MatrixXd subset_columns(const Eigen::MatrixXd& scores, const ModelSubset& m) {
  Eigen::MatrixXd out(scores.rows(), static_cast<Eigen::Index>(m.size()));
  for (std::size_t k = 0; k < m.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = scores.col(static_cast<Eigen::Index>(m.indices()[k]));
  }
  return out;
}

}  // namespace

JointLimit joint_limit_matrices(const ModelSubset& m_star, const ModelSubset& m_tilde, const PopulationMatrices& pop) {
  check_nested(m_star, m_tilde);
  const auto a = static_cast<Eigen::Index>(m_star.size());
  const auto b = static_cast<Eigen::Index>(m_tilde.size());
  auto shape_ok = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) { return m.rows() == r && m.cols() == c; };
  if (!shape_ok(pop.F_star, a, a) || !shape_ok(pop.G_star, a, a) || !shape_ok(pop.F_tilde, b, b) ||
      !shape_ok(pop.G_tilde, b, b) || !shape_ok(pop.G_cross, a, b)) {
    throw InvalidArgument("joint limit: population matrix shapes do not match |m*| and |m~|");
  }
  Eigen::MatrixXd g(a + b, a + b);
  g.topLeftCorner(a, a) = pop.G_star;
  g.topRightCorner(a, b) = pop.G_cross;
  g.bottomLeftCorner(b, a) = pop.G_cross.transpose();
  g.bottomRightCorner(b, b) = pop.G_tilde;
  return assemble(m_star, m_tilde, pop.F_star, pop.F_tilde, g, pop.contrast_scale);
}

JointLimit joint_limit_matrices(const FamilySpec& spec, const Trajectory& traj, const FitResult& fit_star,
                                const FitResult& fit_tilde) {
  check_nested(fit_star.subset, fit_tilde.subset);
  const auto td_star = term_derivatives(spec, traj, fit_star.theta_hat, true);
  const auto td_tilde = term_derivatives(spec, traj, fit_tilde.theta_hat, true);
  const double n = static_cast<double>(traj.size());
  const Eigen::MatrixXd s_star = subset_columns(td_star.scores, fit_star.subset);
  const Eigen::MatrixXd s_tilde = subset_columns(td_tilde.scores, fit_tilde.subset);
  Eigen::MatrixXd stacked(s_star.rows(), s_star.cols() + s_tilde.cols());
  stacked << s_star, s_tilde;
  const Eigen::MatrixXd g = stacked.transpose() * stacked / n;
  const Eigen::MatrixXd f_star = restrict_to(td_star.hessian_sum, fit_star.subset) / n;
  const Eigen::MatrixXd f_tilde = restrict_to(td_tilde.hessian_sum, fit_tilde.subset) / n;
  return assemble(fit_star.subset, fit_tilde.subset, f_star, f_tilde, g, td_star.scale);
}

JointLimit joint_limit_matrices(const FamilySpec& spec, const Trajectory& traj, const ModelSubset& m_star,
                                const ModelSubset& m_tilde, const OptimizerOptions& options) {
  check_nested(m_star, m_tilde);
  const auto fs = fit_mce(spec, traj, m_star, options);
  const auto ft = fit_mce(spec, traj, m_tilde, options);
  return joint_limit_matrices(spec, traj, fs, ft);
}

std::vector<OverfitProbability> overfit_curve(const JointLimit& jl, const std::vector<double>& kappas,
                                              std::size_t n_draws, const RngStream& rng) {
  if (n_draws < kMinOverfitDraws) {
    throw InvalidArgument("overfit_probability: need at least " + std::to_string(kMinOverfitDraws) + " draws");
  }
  const std::size_t delta = jl.m_tilde.size() - jl.m_star.size();
  for (double k : kappas) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument("overfit_probability: kappa must be finite and >= 0");
  }
  auto eng = rng.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> hits(kappas.size(), 0);
  const auto dim = jl.eigenvalues.size();
  for (std::size_t r = 0; r < n_draws; ++r) {
    double w = 0.0;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double z = normal(eng);
      w += jl.eigenvalues(j) * z * z;
    }
    w *= jl.contrast_scale;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      if (w > 2.0 * kappas[i] * static_cast<double>(delta)) ++hits[i];
    }
  }
  std::vector<OverfitProbability> out(kappas.size());
  const auto nd = static_cast<double>(n_draws);
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    out[i].prob = static_cast<double>(hits[i]) / nd;
    out[i].mc_stderr = std::sqrt(out[i].prob * (1.0 - out[i].prob) / nd);
  }
  return out;
}

OverfitProbability overfit_probability(const JointLimit& jl, double kappa_limit, std::size_t delta,
                                       std::size_t n_draws, const RngStream& rng) {
  if (delta != jl.m_tilde.size() - jl.m_star.size()) {
    throw InvalidArgument("overfit_probability: delta must equal |m~| - |m*| = " +
                          std::to_string(jl.m_tilde.size() - jl.m_star.size()));
  }
  return overfit_curve(jl, {kappa_limit}, n_draws, rng).front();
}

}  // namespace pencrit
