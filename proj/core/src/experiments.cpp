#include "pencrit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "pencrit/error.hpp"
#include "pencrit/log.hpp"

#ifndef PENCRIT_VERSION
#define PENCRIT_VERSION "0.0.0"
#endif

namespace pencrit {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Consistency: return "consistency";
    case ExperimentKind::NonConsistency: return "nonconsistency";
    case ExperimentKind::Normality: return "normality";
    case ExperimentKind::Strong: return "strong";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::Consistency, ExperimentKind::NonConsistency, ExperimentKind::Normality,
                 ExperimentKind::Strong}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown experiment kind '" + name + "' (consistency, nonconsistency, normality, strong)");
}

ModelSubset ExperimentPlan::resolved_true_subset() const {
  if (true_subset) return *true_subset;
  std::vector<std::size_t> idx = spec.default_mandatory();
  for (std::size_t i = 0; i < theta_true.size(); ++i) {
    if (theta_true[i] != 0.0) idx.push_back(i);
  }
  return ModelSubset(std::move(idx));
}

void ExperimentPlan::validate() const {
  if (theta_true.size() != static_cast<std::size_t>(spec.param_dim())) {
    throw InvalidArgument("plan: theta_true has " + std::to_string(theta_true.size()) + " entries, family needs " +
                          std::to_string(spec.param_dim()));
  }
  require_in_box(spec, theta_true);
  const auto m_star = resolved_true_subset();
  m_star.check_range(theta_true.size());
  if (replications < 1) throw InvalidArgument("plan: replications must be >= 1");
  if (kind != ExperimentKind::Strong) {
    if (n_grid.empty()) throw InvalidArgument("plan: n_grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 2) throw InvalidArgument("plan: every n must be >= 2");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw InvalidArgument("plan: n_grid must be strictly increasing");
    }
  }
  for (const auto& c : candidates) c.check_range(theta_true.size());
  const bool selects = kind != ExperimentKind::Normality;
  if (selects && candidates.empty()) throw InvalidArgument("plan: no candidates");
  if (selects && std::find(candidates.begin(), candidates.end(), m_star) == candidates.end()) {
    throw InvalidArgument("plan: candidates must include the true subset " + m_star.to_string());
  }
  if ((kind == ExperimentKind::Consistency || kind == ExperimentKind::NonConsistency) && schedules.empty()) {
    throw InvalidArgument("plan: no penalty schedules");
  }
  if (kind == ExperimentKind::NonConsistency) {
    const bool has_const = std::any_of(schedules.begin(), schedules.end(),
                                       [](const PenaltySchedule& s) { return s.kind == PenaltySchedule::Kind::Constant; });
    if (!has_const) throw InvalidArgument("plan: nonconsistency needs a const:c schedule");
    const bool has_larger = std::any_of(candidates.begin(), candidates.end(),
                                        [&](const ModelSubset& c) { return m_star.is_strict_subset_of(c); });
    if (!has_larger) throw InvalidArgument("plan: nonconsistency needs a candidate strictly containing m*");
    if (limit_draws < kMinOverfitDraws) throw InvalidArgument("plan: limit_draws must be >= 10000");
  }
  if (m_tilde) {
    m_tilde->check_range(theta_true.size());
    if (!m_star.is_strict_subset_of(*m_tilde)) throw InvalidArgument("plan: m_tilde must strictly contain m*");
  }
  if (kind == ExperimentKind::Strong) {
    if (c_grid.empty()) throw InvalidArgument("plan: c_grid is empty");
    for (double c : c_grid) {
      if (!(c > 0.0)) throw InvalidArgument("plan: c_grid values must be positive");
    }
    if (path_kmin < 2 || path_kmax < path_kmin || path_kmax > 24) {
      throw InvalidArgument("plan: need 2 <= path_kmin <= path_kmax <= 24");
    }
  }
}

Outcome classify(const ModelSubset& winner, const ModelSubset& m_star) {
  if (winner == m_star) return Outcome::Hit;
  if (m_star.is_subset_of(winner)) return Outcome::Overfit;
  return Outcome::Underfit;
}

std::size_t estimate_fit_count(const ExperimentPlan& plan) {
  switch (plan.kind) {
    case ExperimentKind::Consistency:
    case ExperimentKind::NonConsistency:
      return plan.n_grid.size() * plan.replications * plan.candidates.size();
    case ExperimentKind::Normality:
      return plan.n_grid.size() * plan.replications * (plan.m_tilde ? 2 : 1);
    case ExperimentKind::Strong:
      return static_cast<std::size_t>(plan.path_kmax - plan.path_kmin + 1) * plan.candidates.size();
  }
  return 0;
}

namespace {

using Clock = std::chrono::steady_clock;

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count); results land at index i, so the merge order never
// depends on scheduling. The first exception (by index) is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ExperimentMetadata start_metadata(const ExperimentPlan& plan) {
  ExperimentMetadata md;
  md.base_seed = plan.base_seed;
  md.threads = resolve_threads(plan.threads);
  md.version = PENCRIT_VERSION;
  md.planned_fits = estimate_fit_count(plan);
  if (md.planned_fits > kMaxPlanFits) {
    logger().warn("plan requests about {} fits, above the desk-scale budget of {}", md.planned_fits, kMaxPlanFits);
  }
  return md;
}

std::size_t count_collisions(const std::vector<std::uint64_t>& ids) {
  std::unordered_set<std::uint64_t> seen;
  std::size_t collisions = 0;
  for (auto id : ids) {
    if (!seen.insert(id).second) ++collisions;
  }
  if (collisions > 0) logger().warn("{} random stream id collisions", collisions);
  return collisions;
}

Trajectory simulate_for(const ExperimentPlan& plan, std::size_t n, std::uint64_t stream_id) {
  return simulate(plan.spec, plan.theta_true, n, plan.burn_in, plan.innovation, plan.emission,
                  RngStream{plan.base_seed, stream_id});
}

// One replication: minimal contrasts for every candidate (NaN for failed fits).
struct ReplicationFits {
  std::vector<double> contrasts;
  std::vector<std::string> failures;
  std::string error;  // nonempty when the whole replication failed
};

ReplicationFits fit_candidates(const ExperimentPlan& plan, const Trajectory& traj) {
  ReplicationFits out;
  out.contrasts.assign(plan.candidates.size(), std::numeric_limits<double>::quiet_NaN());
  out.failures.assign(plan.candidates.size(), {});
  for (std::size_t k = 0; k < plan.candidates.size(); ++k) {
    try {
      out.contrasts[k] = fit_mce(plan.spec, traj, plan.candidates[k], plan.optimizer).contrast_at_min;
    } catch (const ComputationError& e) {
      out.failures[k] = e.what();
    }
  }
  return out;
}

std::optional<ModelSubset> select_winner(const ExperimentPlan& plan, const ReplicationFits& fits,
                                         const PenaltySchedule& sched, std::size_t n) {
  std::vector<CriterionRow> rows(plan.candidates.size());
  bool any = false;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k].subset = plan.candidates[k];
    rows[k].contrast_at_min = fits.contrasts[k];
    rows[k].excluded = !fits.failures[k].empty();
    rows[k].failure = fits.failures[k];
    any = any || !rows[k].excluded;
  }
  if (!any) return std::nullopt;
  return select_from_contrasts(rows, penalty_value(sched, n)).winner;
}

void finish_rates(CellRecord& cell) {
  const std::size_t r = cell.replications;
  if (r == 0) return;
  const auto rd = static_cast<double>(r);
  cell.hit_rate = static_cast<double>(cell.hits) / rd;
  cell.overfit_rate = static_cast<double>(cell.overfits) / rd;
  cell.underfit_rate = static_cast<double>(cell.underfits) / rd;
  cell.mc_stderr = std::sqrt(cell.hit_rate * (1.0 - cell.hit_rate) / rd);
  cell.overfit_stderr = std::sqrt(cell.overfit_rate * (1.0 - cell.overfit_rate) / rd);
}

void check_failures(const CellRecord& cell, std::size_t total) {
  if (static_cast<double>(cell.failures) > kMaxCellFailureFraction * static_cast<double>(total)) {
    std::ostringstream os;
    os << "cell (" << cell.schedule << ", n=" << cell.n << "): " << cell.failures << " of " << total
       << " replications failed (limit 10%)";
    throw ComputationError(os.str());
  }
}

// Cells ordered n-major, schedule-minor. Trajectories for (n index, replication) are shared
// across schedules.
std::vector<CellRecord> run_selection_cells(const ExperimentPlan& plan, ExperimentMetadata& md) {
  const auto m_star = plan.resolved_true_subset();
  std::vector<CellRecord> cells;
  std::vector<std::uint64_t> stream_ids;
  for (std::size_t ni = 0; ni < plan.n_grid.size(); ++ni) {
    const std::size_t n = plan.n_grid[ni];
    std::vector<ReplicationFits> reps(plan.replications);
    parallel_for(plan.replications, md.threads, [&](std::size_t r) {
      try {
        reps[r] = fit_candidates(plan, simulate_for(plan, n, derive_stream_id(ni, r)));
      } catch (const ComputationError& e) {
        reps[r].error = e.what();
      }
    });
    for (std::size_t r = 0; r < plan.replications; ++r) stream_ids.push_back(derive_stream_id(ni, r));

    for (const auto& sched : plan.schedules) {
      CellRecord cell;
      cell.schedule = sched.name();
      cell.n = n;
      for (std::size_t r = 0; r < plan.replications; ++r) {
        std::optional<ModelSubset> winner;
        if (reps[r].error.empty()) winner = select_winner(plan, reps[r], sched, n);
        if (!winner) {
          ++cell.failures;
          logger().debug("cell ({}, n={}) replication {} failed: {}", cell.schedule, n, r, reps[r].error);
          continue;
        }
        ++cell.replications;
        switch (classify(*winner, m_star)) {
          case Outcome::Hit: ++cell.hits; break;
          case Outcome::Overfit: ++cell.overfits; break;
          case Outcome::Underfit: ++cell.underfits; break;
        }
      }
      check_failures(cell, plan.replications);
      finish_rates(cell);
      logger().info("cell ({}, n={}): hit {:.3f} over {:.3f} under {:.3f}", cell.schedule, n, cell.hit_rate,
                    cell.overfit_rate, cell.underfit_rate);
      cells.push_back(std::move(cell));
    }
  }
  md.stream_collisions = count_collisions(stream_ids);
  return cells;
}

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ModelSubset resolve_m_tilde(const ExperimentPlan& plan, const ModelSubset& m_star) {
  if (plan.m_tilde) return *plan.m_tilde;
  std::optional<ModelSubset> best;
  for (const auto& c : plan.candidates) {
    if (m_star.is_strict_subset_of(c) && (!best || c < *best)) best = c;
  }
  if (!best) throw InvalidArgument("plan: no candidate strictly contains m* " + m_star.to_string());
  return *best;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::RowVectorXd ma = a.colwise().mean();
  const Eigen::RowVectorXd mb = b.colwise().mean();
  return (a.rowwise() - ma).transpose() * (b.rowwise() - mb) / static_cast<double>(a.rows() - 1);
}

Eigen::VectorXd scaled_error(const FitResult& fit, const ModelSubset& m, const ParamVector& theta_true, double n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.size()));
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto i = m.indices()[k];
    v(static_cast<Eigen::Index>(k)) = std::sqrt(n) * (fit.theta_hat[i] - theta_true[i]);
  }
  return v;
}

}  // namespace

JarqueBera jarque_bera(const std::vector<double>& x) {
  if (x.size() < 3) throw InvalidArgument("jarque_bera: need at least 3 observations");
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) return {};
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  JarqueBera jb;
  jb.statistic = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  jb.p_value = std::exp(-0.5 * jb.statistic);  // chi-square(2) survival
  return jb;
}

ExperimentReport run_consistency(const ExperimentPlan& plan) {
  plan.validate();
  const auto start = Clock::now();
  ExperimentReport rep;
  rep.kind = plan.kind;
  rep.true_subset = plan.resolved_true_subset();
  rep.metadata = start_metadata(plan);
  rep.cells = run_selection_cells(plan, rep.metadata);
  rep.metadata.wall_seconds = elapsed(start);
  return rep;
}

JointLimit empirical_joint_limit(const ExperimentPlan& plan) {
  const auto m_star = plan.resolved_true_subset();
  const auto m_tilde = resolve_m_tilde(plan, m_star);
  const auto traj = simulate_for(plan, plan.limit_n, derive_stream_id(~std::uint64_t{0}, 0));
  return joint_limit_matrices(plan.spec, traj, m_star, m_tilde, plan.optimizer);
}

ExperimentReport run_nonconsistency(const ExperimentPlan& plan, const JointLimit& jl) {
  plan.validate();
  const auto start = Clock::now();
  ExperimentReport rep;
  rep.kind = ExperimentKind::NonConsistency;
  rep.true_subset = plan.resolved_true_subset();
  if (!(jl.m_star == rep.true_subset)) {
    throw InvalidArgument("nonconsistency: joint limit m* " + jl.m_star.to_string() + " differs from plan m* " +
                          rep.true_subset.to_string());
  }
  rep.metadata = start_metadata(plan);
  rep.cells = run_selection_cells(plan, rep.metadata);
  rep.joint_limit = jl;

  const std::size_t delta = jl.m_tilde.size() - jl.m_star.size();
  const std::size_t largest = plan.n_grid.back();
  for (auto& cell : rep.cells) {
    const auto it = std::find_if(plan.schedules.begin(), plan.schedules.end(),
                                 [&](const PenaltySchedule& s) { return s.name() == cell.schedule; });
    if (it == plan.schedules.end() || it->kind != PenaltySchedule::Kind::Constant) continue;
    const auto pred = overfit_probability(jl, it->c, delta, plan.limit_draws,
                                          RngStream{plan.base_seed, derive_stream_id(~std::uint64_t{0}, 1)});
    cell.predicted_overfit = pred.prob;
    cell.predicted_stderr = pred.mc_stderr;
    if (cell.n == largest) {
      const double se = std::hypot(cell.overfit_stderr, pred.mc_stderr);
      cell.agrees = std::abs(cell.overfit_rate - pred.prob) <= 3.0 * se;
    }
  }
  rep.metadata.wall_seconds = elapsed(start);
  return rep;
}

ExperimentReport run_normality(const ExperimentPlan& plan) {
  plan.validate();
  const auto start = Clock::now();
  ExperimentReport rep;
  rep.kind = ExperimentKind::Normality;
  rep.true_subset = plan.resolved_true_subset();
  rep.metadata = start_metadata(plan);
  const auto& m_star = rep.true_subset;
  const std::optional<ModelSubset> m_tilde = plan.m_tilde;
  const std::size_t n = plan.n_grid.back();
  const std::size_t ni = plan.n_grid.size() - 1;
  const auto a = static_cast<Eigen::Index>(m_star.size());
  const auto b = static_cast<Eigen::Index>(m_tilde ? m_tilde->size() : 0);

  struct Rep {
    Eigen::VectorXd err_star, err_tilde;
    Eigen::MatrixXd sigma, joint;
    std::string error;
  };
  std::vector<Rep> reps(plan.replications);
  parallel_for(plan.replications, rep.metadata.threads, [&](std::size_t r) {
    try {
      const auto traj = simulate_for(plan, n, derive_stream_id(ni, r));
      const auto fit = fit_mce(plan.spec, traj, m_star, plan.optimizer);
      reps[r].err_star = scaled_error(fit, m_star, plan.theta_true, static_cast<double>(n));
      reps[r].sigma = estimate_sandwich(plan.spec, traj, fit).Sigma_hat;
      if (m_tilde) {
        const auto fit_t = fit_mce(plan.spec, traj, *m_tilde, plan.optimizer);
        reps[r].err_tilde = scaled_error(fit_t, *m_tilde, plan.theta_true, static_cast<double>(n));
        reps[r].joint = joint_limit_matrices(plan.spec, traj, fit, fit_t).sigma_joint;
      }
    } catch (const ComputationError& e) {
      reps[r].error = e.what();
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    if (reps[r].error.empty()) {
      ok.push_back(r);
    } else {
      logger().debug("normality replication {} failed: {}", r, reps[r].error);
    }
  }
  const std::size_t failures = reps.size() - ok.size();
  if (static_cast<double>(failures) > kMaxCellFailureFraction * static_cast<double>(reps.size())) {
    throw ComputationError("normality: " + std::to_string(failures) + " of " + std::to_string(reps.size()) +
                           " replications failed (limit 10%)");
  }
  if (ok.size() < 3) throw ComputationError("normality: fewer than 3 successful replications");

  NormalityBlock nb;
  nb.n = n;
  nb.replications = ok.size();
  nb.subset = m_star;
  Eigen::MatrixXd es(static_cast<Eigen::Index>(ok.size()), a);
  Eigen::MatrixXd et(static_cast<Eigen::Index>(ok.size()), b);
  nb.mean_sigma_hat = Eigen::MatrixXd::Zero(a, a);
  Eigen::MatrixXd mean_joint = Eigen::MatrixXd::Zero(a + b, a + b);
  for (std::size_t k = 0; k < ok.size(); ++k) {
    const auto& r = reps[ok[k]];
    es.row(static_cast<Eigen::Index>(k)) = r.err_star.transpose();
    nb.mean_sigma_hat += r.sigma;
    if (m_tilde) {
      et.row(static_cast<Eigen::Index>(k)) = r.err_tilde.transpose();
      mean_joint += r.joint;
    }
  }
  const auto used = static_cast<double>(ok.size());
  nb.mean_sigma_hat /= used;
  nb.empirical_cov = covariance(es, es);
  nb.relative_error.resize(a, a);
  for (Eigen::Index i = 0; i < a; ++i) {
    for (Eigen::Index j = 0; j < a; ++j) {
      const double denom = std::sqrt(nb.mean_sigma_hat(i, i) * nb.mean_sigma_hat(j, j));
      nb.relative_error(i, j) = std::abs(nb.empirical_cov(i, j) - nb.mean_sigma_hat(i, j)) / denom;
    }
  }
  nb.max_relative_error = nb.relative_error.maxCoeff();
  std::size_t passed = 0;
  for (Eigen::Index j = 0; j < a; ++j) {
    std::vector<double> col(es.col(j).data(), es.col(j).data() + es.rows());
    const double p = jarque_bera(col).p_value;
    nb.jb_pvalues.push_back(p);
    if (p >= 0.01) ++passed;
  }
  nb.jb_pass_fraction = a > 0 ? static_cast<double>(passed) / static_cast<double>(a) : 1.0;

  if (m_tilde) {
    nb.m_tilde = m_tilde;
    mean_joint /= used;
    nb.predicted_cross = mean_joint.topRightCorner(a, b);
    nb.empirical_cross = covariance(es, et);
    // Signs are compared only where the predicted entry is clearly nonzero.
    bool match = true;
    for (Eigen::Index i = 0; i < a; ++i) {
      for (Eigen::Index j = 0; j < b; ++j) {
        const double pred = nb.predicted_cross(i, j);
        const double scale = std::sqrt(mean_joint(i, i) * mean_joint(a + j, a + j));
        if (std::abs(pred) > 0.1 * scale && (pred > 0.0) != (nb.empirical_cross(i, j) > 0.0)) match = false;
      }
    }
    nb.cross_sign_match = match;
  }
  rep.normality = std::move(nb);
  rep.metadata.wall_seconds = elapsed(start);
  return rep;
}

ExperimentReport run_strong_path(const ExperimentPlan& plan) {
  plan.validate();
  const auto start = Clock::now();
  ExperimentReport rep;
  rep.kind = ExperimentKind::Strong;
  rep.true_subset = plan.resolved_true_subset();
  rep.metadata = start_metadata(plan);
  const std::size_t n_max = std::size_t{1} << plan.path_kmax;
  const auto path = simulate_for(plan, n_max, derive_stream_id(~std::uint64_t{0}, 2));

  std::vector<std::size_t> ns;
  for (int k = plan.path_kmin; k <= plan.path_kmax; ++k) ns.push_back(std::size_t{1} << k);
  std::vector<ReplicationFits> fits(ns.size());
  parallel_for(ns.size(), rep.metadata.threads,
               [&](std::size_t i) { fits[i] = fit_candidates(plan, path.prefix(ns[i])); });

  for (double c : plan.c_grid) {
    StrongPathRecord rec;
    rec.c = c;
    const auto sched = PenaltySchedule::loglog(c);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto winner = select_winner(plan, fits[i], sched, ns[i]);
      if (!winner) throw ComputationError("strong path: every candidate failed at n=" + std::to_string(ns[i]));
      rec.n_path.push_back(ns[i]);
      rec.winners.push_back(*winner);
      if (!(*winner == rep.true_subset)) rec.last_miss_n = ns[i];
    }
    rep.strong.push_back(std::move(rec));
  }
  rep.metadata.wall_seconds = elapsed(start);
  return rep;
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
  switch (plan.kind) {
    case ExperimentKind::Consistency: return run_consistency(plan);
    case ExperimentKind::NonConsistency: {
      plan.validate();
      return run_nonconsistency(plan, empirical_joint_limit(plan));
    }
    case ExperimentKind::Normality: return run_normality(plan);
    case ExperimentKind::Strong: return run_strong_path(plan);
  }
  throw InvalidArgument("unknown experiment kind");
}

}  // namespace pencrit
