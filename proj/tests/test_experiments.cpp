#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pencrit/error.hpp"
#include "pencrit/experiments.hpp"
#include "pencrit/io.hpp"

using namespace pencrit;

namespace {

ExperimentPlan ar_plan(ExperimentKind kind) {
  ExperimentPlan plan;
  plan.kind = kind;
  plan.spec = FamilySpec::arx(2);
  plan.theta_true = ParamVector{0.0, 0.5, 0.0, 1.0};
  plan.candidates = nested_models(plan.spec);
  plan.schedules = {PenaltySchedule::log(), PenaltySchedule::constant(0.0)};
  plan.n_grid = {200, 400};
  plan.replications = 16;
  plan.base_seed = 42;
  plan.optimizer.starts = 2;
  plan.threads = 1;
  return plan;
}

void check_cells_partition(const ExperimentReport& rep) {
  for (const auto& c : rep.cells) {
    CHECK(c.hits + c.overfits + c.underfits == c.replications);
    CHECK(c.hit_rate + c.overfit_rate + c.underfit_rate == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.mc_stderr == doctest::Approx(std::sqrt(c.hit_rate * (1.0 - c.hit_rate) / c.replications)));
  }
}

std::string stable_dump(const ExperimentReport& rep) {
  auto j = to_json(rep, false);
  j["metadata"].erase("threads");
  return j.dump();
}

}  // namespace

TEST_CASE("classify winners against m*") {
  const ModelSubset m_star({0, 1, 3});
  CHECK(classify(ModelSubset({0, 1, 3}), m_star) == Outcome::Hit);
  CHECK(classify(ModelSubset({0, 1, 2, 3}), m_star) == Outcome::Overfit);
  CHECK(classify(ModelSubset({0, 3}), m_star) == Outcome::Underfit);
  CHECK(classify(ModelSubset({0, 2, 3}), m_star) == Outcome::Underfit);
}

TEST_CASE("Jarque-Bera statistic and p-value") {
  const auto jb = jarque_bera({1.0, 2.0, 3.0, 4.0, 10.0});
  CHECK(jb.statistic == doctest::Approx(1.0893633333333337).epsilon(1e-12));
  CHECK(jb.p_value == doctest::Approx(0.5800263956901162).epsilon(1e-12));
  CHECK(jarque_bera({2.0, 2.0, 2.0}).p_value == 1.0);
  CHECK_THROWS_AS((void)jarque_bera({1.0, 2.0}), InvalidArgument);

  std::mt19937_64 eng(5);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo;
  std::vector<double> g(2000), e(2000);
  for (auto& v : g) v = normal(eng);
  for (auto& v : e) v = expo(eng);
  CHECK(jarque_bera(g).p_value > 0.01);
  CHECK(jarque_bera(e).p_value < 1e-10);
}

TEST_CASE("plan validation") {
  CHECK_NOTHROW(ar_plan(ExperimentKind::Consistency).validate());
  CHECK(ar_plan(ExperimentKind::Consistency).resolved_true_subset() == ModelSubset({0, 1, 3}));

  auto p = ar_plan(ExperimentKind::Consistency);
  p.n_grid = {400, 200};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::Consistency);
  p.candidates = {ModelSubset({0, 3})};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::Consistency);
  p.replications = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::Consistency);
  p.theta_true = ParamVector{0.0, 0.5, 1.0};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::NonConsistency);
  p.schedules = {PenaltySchedule::log()};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::NonConsistency);
  p.m_tilde = ModelSubset({0, 1, 3});
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = ar_plan(ExperimentKind::Strong);
  p.path_kmax = 1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("fit budget estimate") {
  auto p = ar_plan(ExperimentKind::Consistency);
  CHECK(estimate_fit_count(p) == 2 * 16 * 3);
  p.kind = ExperimentKind::Normality;
  p.m_tilde = ModelSubset({0, 1, 2, 3});
  CHECK(estimate_fit_count(p) == 2 * 16 * 2);
}

TEST_CASE("consistency plan: cell layout, partition and the unpenalized control") {
  const auto plan = ar_plan(ExperimentKind::Consistency);
  const auto rep = run_consistency(plan);
  REQUIRE(rep.cells.size() == 4);
  CHECK(rep.cells[0].n == 200);
  CHECK(rep.cells[0].schedule == "log");
  CHECK(rep.cells[1].schedule == "const:0");
  CHECK(rep.cells[3].n == 400);
  check_cells_partition(rep);
  for (const auto& c : rep.cells) CHECK(c.replications + c.failures == plan.replications);
  // Without a penalty the nested minimum is attained by the largest model.
  CHECK(rep.cells[1].overfit_rate >= 0.9);
  CHECK(rep.cells[3].overfit_rate >= 0.9);
  CHECK(rep.metadata.stream_collisions == 0);
  CHECK(rep.metadata.base_seed == 42);
}

TEST_CASE("reruns are bit-for-bit identical, across thread counts too") {
  auto plan = ar_plan(ExperimentKind::Consistency);
  const auto a = stable_dump(run_experiment(plan));
  const auto b = stable_dump(run_experiment(plan));
  plan.threads = 3;
  const auto c = stable_dump(run_experiment(plan));
  CHECK(a == b);
  CHECK(a == c);
  plan.base_seed = 43;
  CHECK(a != stable_dump(run_experiment(plan)));
}

TEST_CASE("nonconsistency plan reports predictions and agreement at the largest n") {
  auto plan = ar_plan(ExperimentKind::NonConsistency);
  plan.candidates = {ModelSubset({0, 1, 3}), ModelSubset({0, 1, 2, 3})};
  plan.schedules = {PenaltySchedule::constant(1.0), PenaltySchedule::log()};
  plan.limit_n = 4000;
  plan.limit_draws = kMinOverfitDraws;
  const auto rep = run_experiment(plan);
  REQUIRE(rep.joint_limit.has_value());
  CHECK(rep.joint_limit->m_tilde == ModelSubset({0, 1, 2, 3}));
  check_cells_partition(rep);
  for (const auto& c : rep.cells) {
    const bool constant = c.schedule == "const:1";
    CHECK(c.predicted_overfit.has_value() == constant);
    CHECK(c.agrees.has_value() == (constant && c.n == 400));
    if (constant) CHECK(*c.predicted_overfit == doctest::Approx(0.157).epsilon(0.2));
  }
  CHECK_THROWS_AS((void)run_nonconsistency(ar_plan(ExperimentKind::NonConsistency),
                                           joint_limit_matrices(ModelSubset({0}), ModelSubset({0, 1}),
                                                                PopulationMatrices{
                                                                    Eigen::MatrixXd::Identity(1, 1),
                                                                    Eigen::MatrixXd::Identity(1, 1),
                                                                    Eigen::MatrixXd::Identity(2, 2),
                                                                    Eigen::MatrixXd::Identity(2, 2),
                                                                    Eigen::MatrixXd::Zero(1, 2), 1.0})),
                  InvalidArgument);
}

TEST_CASE("normality plan: block shapes, error definition and joint cross block") {
  auto plan = ar_plan(ExperimentKind::Normality);
  plan.spec = FamilySpec::arx(1);
  plan.theta_true = ParamVector{0.0, 0.5, 1.0};
  plan.candidates.clear();
  plan.m_tilde = ModelSubset({0, 1, 2});
  plan.true_subset = ModelSubset({1, 2});
  plan.n_grid = {1000};
  plan.replications = 40;
  const auto rep = run_experiment(plan);
  REQUIRE(rep.normality.has_value());
  const auto& nb = *rep.normality;
  CHECK(nb.n == 1000);
  CHECK(nb.replications == 40);
  CHECK(nb.empirical_cov.rows() == 2);
  CHECK(nb.mean_sigma_hat.rows() == 2);
  CHECK(nb.jb_pvalues.size() == 2);
  CHECK(nb.empirical_cross.rows() == 2);
  CHECK(nb.empirical_cross.cols() == 3);
  CHECK(nb.cross_sign_match.has_value());
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(nb.relative_error(i, i) ==
          doctest::Approx(std::abs(nb.empirical_cov(i, i) / nb.mean_sigma_hat(i, i) - 1.0)).epsilon(1e-12));
  }
  // AR(1) without intercept: Sigma = diag(1 - a^2, sigma^2 / 2) with sigma = 1.
  CHECK(nb.mean_sigma_hat(0, 0) == doctest::Approx(0.75).epsilon(0.1));
  CHECK(nb.mean_sigma_hat(1, 1) == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("strong path: one winner per n for each c") {
  auto plan = ar_plan(ExperimentKind::Strong);
  plan.path_kmin = 6;
  plan.path_kmax = 9;
  plan.c_grid = {1.0, 3.0};
  const auto rep = run_experiment(plan);
  REQUIRE(rep.strong.size() == 2);
  for (const auto& rec : rep.strong) {
    CHECK(rec.n_path == std::vector<std::size_t>{64, 128, 256, 512});
    CHECK(rec.winners.size() == 4);
    if (rec.last_miss_n == 0) {
      for (const auto& w : rec.winners) CHECK(w == rep.true_subset);
    } else {
      CHECK(std::find(rec.n_path.begin(), rec.n_path.end(), rec.last_miss_n) != rec.n_path.end());
    }
  }
  CHECK(stable_dump(rep) == stable_dump(run_experiment(plan)));
}

TEST_CASE("experiment kind names") {
  for (auto k : {ExperimentKind::Consistency, ExperimentKind::NonConsistency, ExperimentKind::Normality,
                 ExperimentKind::Strong}) {
    CHECK(experiment_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS((void)experiment_kind_from_string("bogus"), InvalidArgument);
}
