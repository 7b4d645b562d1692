#include <doctest.h>

#include <random>

#include "pencrit/error.hpp"
#include "pencrit/model_zoo.hpp"
#include "test_support.hpp"

using namespace pencrit;

TEST_CASE("family layouts and default boxes") {
  const auto arx = FamilySpec::arx(2, 1, 2);
  CHECK(arx.param_dim() == 1 + 2 + 2 + 1);
  CHECK(arx.coordinate_names().front() == "c");
  CHECK(arx.coordinate_names().back() == "sigma");
  CHECK(FamilySpec::arch(3).param_dim() == 4);
  CHECK(FamilySpec::ingarch(2).param_dim() == 3);
  CHECK(FamilySpec::ingarch11().param_dim() == 3);
  CHECK(FamilySpec::biv_ingarch().param_dim() == 6);
  CHECK(FamilySpec::biv_ingarch().obs_dim() == 2);
  const auto ing = FamilySpec::ingarch(1);
  CHECK(ing.box()[0].lo > 0.0);
  CHECK(ing.box()[1].lo == 0.0);
  CHECK(ing.box()[1].hi == doctest::Approx(0.99));
  CHECK(arx.box()[1].lo == doctest::Approx(-0.99));
  CHECK(arx.box().back().lo > 0.0);
  CHECK(arx.h_floor() == 1e-6);
  CHECK(arx.c_floor() == 1e-6);
  CHECK(arx.coordinate_index("sigma") == 5);
  CHECK_THROWS_AS((void)arx.coordinate_index("zzz"), InvalidArgument);
}

TEST_CASE("invalid family construction is rejected") {
  CHECK_THROWS_AS((void)FamilySpec::arx(-1), InvalidArgument);
  CHECK_THROWS_AS((void)FamilySpec::arx(1, 1, 0), InvalidArgument);
  CHECK_THROWS_AS((void)FamilySpec::arx(1).with_floors(0.0, 1e-6), InvalidArgument);
  CHECK_THROWS_AS((void)FamilySpec::arx(1).with_box(0, Interval{1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS((void)FamilySpec::ingarch(1).with_box(0, Interval{0.0, 1.0}), InvalidArgument);
}

TEST_CASE("conditionals: linear AR example and truncated past") {
  const auto spec = FamilySpec::arx(1);
  const auto traj = Trajectory::univariate(SeriesKind::Real, {1.0, 3.0});
  const auto c2 = eval_conditionals(spec, ParamVector{0.0, 0.5, 1.0}, traj, 2);
  CHECK(c2.mean(0) == doctest::Approx(0.5));
  CHECK(c2.scale(0) == doctest::Approx(1.0));
  const auto c1 = eval_conditionals(spec, ParamVector{0.7, 0.5, 2.0}, traj, 1);
  CHECK(c1.mean(0) == doctest::Approx(0.7));
  CHECK(c1.scale(0) == doctest::Approx(4.0));
  const auto c3 = eval_conditionals(spec, ParamVector{0.0, 0.5, 1.0}, traj, 3);
  CHECK(c3.mean(0) == doctest::Approx(1.5));
  CHECK_THROWS_AS((void)eval_conditionals(spec, ParamVector{0.0, 0.5, 1.0}, traj, 4), InvalidArgument);
  CHECK_THROWS_AS((void)eval_conditionals(spec, ParamVector{0.0, 0.5, 1.0}, traj, 0), InvalidArgument);
  CHECK_THROWS_AS((void)eval_conditionals(spec, ParamVector{0.0, 1.5, 1.0}, traj, 2), InvalidArgument);
}

TEST_CASE("conditionals: INGARCH(2) intensity against a scalar evaluation") {
  const auto spec = FamilySpec::ingarch(2);
  const auto traj = Trajectory::univariate(SeriesKind::Count, {4.0, 2.0});
  const double a0 = 1.0, a1 = 0.3, a2 = 0.2;
  const auto c = eval_conditionals(spec, ParamVector{a0, a1, a2}, traj, 3);
  CHECK(c.mean(0) == doctest::Approx(a0 + a1 * 2.0 + a2 * 4.0).epsilon(1e-14));
  CHECK(c.mean(0) == doctest::Approx(2.4));
}

TEST_CASE("conditionals: ARCH, INGARCH(1,1) and bivariate recursions") {
  const auto arch = FamilySpec::arch(1);
  const auto y = Trajectory::univariate(SeriesKind::Real, {2.0, -1.0});
  CHECK(eval_conditionals(arch, ParamVector{0.5, 0.25}, y, 2).scale(0) == doctest::Approx(0.5 + 0.25 * 4.0));
  CHECK(eval_conditionals(arch, ParamVector{0.5, 0.25}, y, 1).scale(0) == doctest::Approx(0.5));

  const auto g11 = FamilySpec::ingarch11();
  const auto cnt = Trajectory::univariate(SeriesKind::Count, {3.0, 1.0});
  const double a0 = 1.0, a1 = 0.2, b1 = 0.5;
  const double l1 = a0 / (1.0 - b1);
  const double l2 = a0 + a1 * 3.0 + b1 * l1;
  const double l3 = a0 + a1 * 1.0 + b1 * l2;
  CHECK(eval_conditionals(g11, ParamVector{a0, a1, b1}, cnt, 1).mean(0) == doctest::Approx(l1));
  CHECK(eval_conditionals(g11, ParamVector{a0, a1, b1}, cnt, 3).mean(0) == doctest::Approx(l3));

  const auto biv = FamilySpec::biv_ingarch();
  const Trajectory yy(SeriesKind::Count, 2, {2.0, 5.0});
  const auto c = eval_conditionals(biv, ParamVector{1.0, 2.0, 0.1, 0.2, 0.3, 0.4}, yy, 2);
  CHECK(c.mean(0) == doctest::Approx(1.0 + 0.1 * 2.0 + 0.2 * 5.0));
  CHECK(c.mean(1) == doctest::Approx(2.0 + 0.3 * 2.0 + 0.4 * 5.0));
}

TEST_CASE("floors hold for every family at random box points") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& spec : {FamilySpec::arx(2), FamilySpec::arch(2), FamilySpec::ingarch(2), FamilySpec::ingarch11(),
                           FamilySpec::biv_ingarch()}) {
    const bool count = spec.is_count_family();
    std::vector<double> obs;
    for (int s = 0; s < 20 * spec.obs_dim(); ++s) obs.push_back(count ? std::floor(5.0 * u(eng)) : 4.0 * u(eng) - 2.0);
    const Trajectory traj(count ? SeriesKind::Count : SeriesKind::Real, static_cast<std::size_t>(spec.obs_dim()), obs);
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd v(spec.param_dim());
      for (int i = 0; i < spec.param_dim(); ++i) {
        const auto& iv = spec.box()[static_cast<std::size_t>(i)];
        v(i) = k % 2 == 0 ? iv.lo + (iv.hi - iv.lo) * u(eng) : 0.0;  // box points and the all-zero point
      }
      const ParamVector theta(v);
      for (std::size_t t = 1; t <= traj.size() + 1; ++t) {
        const auto c = eval_conditionals(spec, theta, traj, t);
        if (count) {
          CHECK(c.mean.minCoeff() >= spec.c_floor());
        } else {
          CHECK(c.scale(0) >= spec.h_floor());
        }
      }
    }
  }
}

TEST_CASE("project_to_subset") {
  const ParamVector theta{1.0, 2.0, 3.0};
  CHECK(project_to_subset(theta, ModelSubset({0, 2})) == ParamVector{1.0, 0.0, 3.0});
  CHECK(project_to_subset(theta, ModelSubset({0, 1, 2})) == theta);
  CHECK(project_to_subset(ParamVector{0.0, 0.0, 0.0}, ModelSubset({1})) == ParamVector{0.0, 0.0, 0.0});
  std::mt19937_64 eng(3);
  for (int k = 0; k < 20; ++k) {
    const auto th = ParamVector(Eigen::VectorXd::Random(5));
    const ModelSubset m({static_cast<std::size_t>(k % 5), static_cast<std::size_t>((k * 3) % 5)});
    const auto once = project_to_subset(th, m);
    CHECK(project_to_subset(once, m) == once);
  }
}

TEST_CASE("ModelSubset parsing, ordering and text form") {
  const auto m = ModelSubset::parse("{3,1,2,3}");
  CHECK(m.indices() == std::vector<std::size_t>{0, 1, 2});
  CHECK(m.to_string() == "{1,2,3}");
  CHECK(ModelSubset::parse("").empty());
  CHECK_THROWS((void)ModelSubset::parse("0,1"));
  CHECK_THROWS((void)ModelSubset::parse("1,x"));
  CHECK(ModelSubset({0}) < ModelSubset({0, 1}));
  CHECK(ModelSubset({0, 2}) < ModelSubset({1, 2}));
  CHECK(ModelSubset({0}).is_strict_subset_of(ModelSubset({0, 1})));
  CHECK_FALSE(ModelSubset({0, 1}).is_strict_subset_of(ModelSubset({0, 1})));
  CHECK_THROWS_AS(ModelSubset({4}).check_range(3), InvalidArgument);
}

TEST_CASE("enumerate_models examples") {
  // d = 2 power set, no mandatory coordinates
  const auto spec2 = FamilySpec::ingarch(1);
  const auto all = enumerate_models(spec2, EnumerationPolicy::AllSubsets, {});
  REQUIRE(all.size() == 4);
  CHECK(all[0] == ModelSubset());
  CHECK(all[1] == ModelSubset({0}));
  CHECK(all[2] == ModelSubset({1}));
  CHECK(all[3] == ModelSubset({0, 1}));

  const auto arx = FamilySpec::arx(2);
  const auto nested = enumerate_models(arx, EnumerationPolicy::HierarchicalLags, {0, 3});
  REQUIRE(nested.size() == 3);
  CHECK(nested[0] == ModelSubset({0, 3}));
  CHECK(nested[1] == ModelSubset({0, 1, 3}));
  CHECK(nested[2] == ModelSubset({0, 1, 2, 3}));

  const auto listed = enumerate_models(arx, EnumerationPolicy::ExplicitList, {0},
                                       {ModelSubset({0, 1, 3}), ModelSubset({0, 3}), ModelSubset({0, 1, 3})});
  REQUIRE(listed.size() == 2);
  CHECK(listed[0] == ModelSubset({0, 3}));
  CHECK_THROWS_AS((void)enumerate_models(arx, EnumerationPolicy::ExplicitList, {0}, {ModelSubset({1, 3})}),
                  InvalidArgument);
  CHECK_THROWS_AS((void)enumerate_models(arx, EnumerationPolicy::AllSubsets, {7}), InvalidArgument);
  CHECK_THROWS_AS((void)enumerate_models(FamilySpec::arch(20), EnumerationPolicy::AllSubsets, {}), InvalidArgument);
}

TEST_CASE("enumerated lists are strictly ordered and duplicate free") {
  for (const auto& spec : {FamilySpec::arx(3), FamilySpec::arx(1, 2, 1), FamilySpec::biv_ingarch(),
                           FamilySpec::ingarch11(), FamilySpec::arch(3)}) {
    for (auto policy : {EnumerationPolicy::AllSubsets, EnumerationPolicy::HierarchicalLags}) {
      const auto list = enumerate_models(spec, policy, spec.default_mandatory());
      REQUIRE_FALSE(list.empty());
      for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1] < list[i]);
      for (const auto& m : list) {
        for (auto k : spec.default_mandatory()) CHECK(m.contains(k));
      }
    }
  }
  const auto nested = nested_models(FamilySpec::arx(3), 1);
  CHECK(nested.size() == 2);
  CHECK(nested_models(FamilySpec::arx(1, 2, 1)).size() == 2);
  CHECK(enumerate_models(FamilySpec::arx(1, 2, 1), EnumerationPolicy::HierarchicalLags, {0, 4}).size() == 2 * 3);
}
