#include <doctest.h>

#include <cmath>

#include "pencrit/error.hpp"
#include "pencrit/select.hpp"
#include "pencrit/simulate.hpp"

using namespace pencrit;

namespace {

CriterionRow row(std::vector<std::size_t> idx, double contrast) {
  CriterionRow r;
  r.subset = ModelSubset(std::move(idx));
  r.contrast_at_min = contrast;
  return r;
}

}  // namespace

TEST_CASE("penalty values") {
  CHECK(penalty_value(PenaltySchedule::log(), 100) == doctest::Approx(4.60517).epsilon(1e-6));
  CHECK(penalty_value(PenaltySchedule::loglog(2.0), 100) == doctest::Approx(2.0 * std::log(std::log(100.0))).epsilon(1e-14));
  CHECK(penalty_value(PenaltySchedule::loglog(2.0), 100) == doctest::Approx(3.054357).epsilon(1e-6));
  CHECK(penalty_value(PenaltySchedule::loglog(1.0), 3) == doctest::Approx(std::log(std::log(16.0))));
  CHECK(penalty_value(PenaltySchedule::loglog(1.0), 3) == doctest::Approx(1.01978).epsilon(1e-5));
  CHECK(penalty_value(PenaltySchedule::constant(1.5), 12345) == 1.5);
  CHECK(penalty_value(PenaltySchedule::sqrt(), 400) == doctest::Approx(20.0));
  CHECK_THROWS_AS((void)penalty_value(PenaltySchedule::log(), 0), InvalidArgument);
  CHECK(PenaltySchedule::constant(1.0).name() == "const:1");
  CHECK(PenaltySchedule::loglog(2.5).name() == "loglog:2.5");
  CHECK(PenaltySchedule::log().name() == "log");
}

TEST_CASE("custom tables: lookup, extension and validation") {
  const auto s = PenaltySchedule::custom({{10, 1.0}, {100, 2.0}, {1000, 3.0}});
  CHECK(penalty_value(s, 5) == 1.0);
  CHECK(penalty_value(s, 10) == 1.0);
  CHECK(penalty_value(s, 99) == 1.0);
  CHECK(penalty_value(s, 100) == 2.0);
  CHECK(penalty_value(s, 1000000) == 3.0);
  CHECK_THROWS_AS((void)PenaltySchedule::custom({}), InvalidArgument);
  CHECK_THROWS_AS((void)PenaltySchedule::custom({{10, 6.0}}), InvalidArgument);
  CHECK_THROWS_AS((void)PenaltySchedule::custom({{10, 1.0}, {10, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS((void)PenaltySchedule::custom({{10, -1.0}}), InvalidArgument);
  CHECK_THROWS_AS((void)PenaltySchedule::constant(-1.0), InvalidArgument);
  CHECK_THROWS_AS((void)PenaltySchedule::loglog(0.0), InvalidArgument);
}

TEST_CASE("penalty schedules are nonnegative and sublinear on a grid") {
  for (const auto& s : {PenaltySchedule::log(), PenaltySchedule::sqrt(), PenaltySchedule::loglog(3.0),
                        PenaltySchedule::constant(2.0)}) {
    for (std::size_t n = 1; n <= 1000000; n *= 10) {
      CHECK(penalty_value(s, n) >= 0.0);
      if (n >= 100) CHECK(penalty_value(s, n) / static_cast<double>(n) < 0.5);
    }
  }
}

TEST_CASE("criterion arithmetic and winner") {
  const auto r = select_from_contrasts({row({0}, 10.0), row({0, 1}, 9.5)}, 1.0);
  REQUIRE(r.table.size() == 2);
  CHECK(r.table[0].criterion == 11.0);
  CHECK(r.table[1].criterion == 11.5);
  CHECK(r.winner == ModelSubset({0}));
  CHECK_FALSE(r.tie_broken);
  CHECK(r.kappa_used == 1.0);
  for (const auto& t : r.table) CHECK(t.criterion == t.contrast_at_min + r.kappa_used * static_cast<double>(t.subset.size()));
}

TEST_CASE("ties go to the smaller model, then lexicographic order") {
  const auto r = select_from_contrasts({row({0, 1}, 9.0), row({0}, 10.0)}, 1.0);
  CHECK(r.winner == ModelSubset({0}));
  CHECK(r.tie_broken);
  const auto lex = select_from_contrasts({row({1, 2}, 5.0), row({0, 2}, 5.0)}, 0.0);
  CHECK(lex.winner == ModelSubset({0, 2}));
  CHECK(lex.tie_broken);
}

TEST_CASE("excluded rows and empty input") {
  auto bad = row({0, 1}, 0.0);
  bad.excluded = true;
  bad.failure = "boom";
  const auto r = select_from_contrasts({bad, row({0}, 10.0)}, 1.0);
  CHECK(r.winner == ModelSubset({0}));
  CHECK_THROWS_AS((void)select_from_contrasts({bad}, 1.0), ComputationError);
  CHECK_THROWS_AS((void)select_from_contrasts({}, 1.0), InvalidArgument);
}

TEST_CASE("uniform shifts of the criterion keep the winner") {
  const std::vector<CriterionRow> rows{row({0}, 12.0), row({0, 1}, 9.7), row({0, 1, 2}, 9.1)};
  const auto base = select_from_contrasts(rows, 1.0);
  auto shifted = rows;
  for (auto& r : shifted) r.contrast_at_min += 123.456;
  CHECK(select_from_contrasts(shifted, 1.0).winner == base.winner);
}

TEST_CASE("zero penalty picks the largest nested model on AR data") {
  const auto spec = FamilySpec::arx(3);
  const auto tr = simulate_acx(spec, ParamVector{0.0, 0.5, 0.0, 0.0, 1.0}, 500, 200, Innovation::gaussian(),
                               RngStream{4, 4});
  const auto r = select_model(spec, tr, nested_models(spec), PenaltySchedule::constant(0.0));
  CHECK(r.winner == ModelSubset({0, 1, 2, 3, 4}));
}

TEST_CASE("selection is deterministic") {
  const auto spec = FamilySpec::ingarch(3);
  const auto tr = simulate_mod(spec, ParamVector{1.0, 0.5, 0.0, 0.0}, 800, 200, Emission::poisson(), RngStream{5, 5});
  std::vector<FitResult> fits;
  const auto a = select_model(spec, tr, nested_models(spec), PenaltySchedule::log(), {}, &fits);
  const auto b = select_model(spec, tr, nested_models(spec), PenaltySchedule::log());
  CHECK(fits.size() == 4);
  CHECK(a.winner == b.winner);
  for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].criterion == b.table[i].criterion);
  CHECK_THROWS_AS((void)select_model(spec, tr, {}, PenaltySchedule::log()), InvalidArgument);
}

TEST_CASE("LOG penalty recovers the AR(1) lag order in at least 95 of 100 replications at n = 5000") {
  const auto spec = FamilySpec::arx(3);
  const auto cands = nested_models(spec);
  const ModelSubset truth({0, 1, 4});
  int hits = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto tr = simulate_acx(spec, ParamVector{0.0, 0.5, 0.0, 0.0, 1.0}, 5000, kDefaultBurnIn,
                                 Innovation::gaussian(), RngStream{77, r});
    if (select_model(spec, tr, cands, PenaltySchedule::log()).winner == truth) ++hits;
  }
  MESSAGE("hits: " << hits);
  CHECK(hits >= 95);
}
