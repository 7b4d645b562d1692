#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>

#include "pencrit/error.hpp"
#include "pencrit/io.hpp"
#include "pencrit/simulate.hpp"

using namespace pencrit;

namespace {

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("pencrit_test_io_" + name);
  write_text_file(p.string(), content);
  return p;
}

}  // namespace

TEST_CASE("key-value config: comments, blanks and diagnostics with line numbers") {
  const auto cfg = KeyValueConfig::parse("# header\n\nfamily = arx  # trailing\np=2\n", "a.cfg");
  CHECK(cfg.at("family").value == "arx");
  CHECK(cfg.at("family").line == 3);
  CHECK(cfg.at("p").value == "2");
  CHECK(cfg.get("q", "0") == "0");

  CHECK(contains(error_of([] { (void)KeyValueConfig::parse("family = arx\nnot a pair\n", "b.cfg"); }), "b.cfg:2"));
  const auto dup = error_of([] { (void)KeyValueConfig::parse("p = 1\n\np = 2\n", "c.cfg"); });
  CHECK(contains(dup, "c.cfg:3"));
  CHECK(contains(dup, "duplicate key 'p'"));
  CHECK(contains(error_of([&] { (void)cfg.at("missing"); }), "missing required key 'missing'"));
  CHECK_THROWS_AS((void)KeyValueConfig::parse("= 3\n", "d.cfg"), ParseError);
}

TEST_CASE("family config: schema, boxes and floors") {
  const auto spec = family_from_config(
      KeyValueConfig::parse("family = arx\np = 2\nbox.a1 = -0.5, 0.5\nh_floor = 1e-4\n", "fam.cfg"));
  CHECK(spec == FamilySpec::arx(2).with_box(1, {-0.5, 0.5}).with_floors(1e-4, 1e-6));

  CHECK(family_from_config(KeyValueConfig::parse("family = ingarch\np = 3\n", "x")) == FamilySpec::ingarch(3));
  CHECK(family_from_config(KeyValueConfig::parse("family = ingarch11\n", "x")) == FamilySpec::ingarch11());

  const auto unknown = error_of([] { (void)family_from_config(KeyValueConfig::parse("family = arx\norder = 2\n", "u.cfg")); });
  CHECK(contains(unknown, "u.cfg:2"));
  CHECK(contains(unknown, "key 'order': unknown key"));

  const auto bad_p = error_of([] { (void)family_from_config(KeyValueConfig::parse("family = arx\np = two\n", "v.cfg")); });
  CHECK(contains(bad_p, "v.cfg:2: key 'p'"));

  const auto bad_box = error_of([] {
    (void)family_from_config(KeyValueConfig::parse("family = arx\np = 1\nbox.a7 = 0, 1\n", "w.cfg"));
  });
  CHECK(contains(bad_box, "w.cfg:3: key 'box.a7'"));

  const auto q_on_arch =
      error_of([] { (void)family_from_config(KeyValueConfig::parse("family = arch\nq = 1\n", "z.cfg")); });
  CHECK(contains(q_on_arch, "z.cfg:2: key 'q': only valid for family arx"));

  CHECK_THROWS_AS((void)family_from_config(KeyValueConfig::parse("family = garch\n", "g.cfg")), ParseError);
}

TEST_CASE("plan config round-trips into a validated plan") {
  const std::string text =
      "experiment = consistency\n"
      "family = arx\n"
      "p = 3\n"
      "theta_true = 0, 0.5, 0, 0, 1\n"
      "candidates = nested\n"
      "schedules = log; sqrt; const:1\n"
      "n_grid = 500, 2000\n"
      "replications = 20\n"
      "base_seed = 9\n"
      "starts = 3\n";
  const auto plan = plan_from_config(KeyValueConfig::parse(text, "plan.cfg"));
  CHECK(plan.kind == ExperimentKind::Consistency);
  CHECK(plan.spec == FamilySpec::arx(3));
  CHECK(plan.candidates.size() == 4);
  REQUIRE(plan.schedules.size() == 3);
  CHECK(plan.schedules[2].name() == "const:1");
  CHECK(plan.n_grid == std::vector<std::size_t>{500, 2000});
  CHECK(plan.replications == 20);
  CHECK(plan.base_seed == 9);
  CHECK(plan.optimizer.starts == 3);
  CHECK(plan.resolved_true_subset() == ModelSubset({0, 1, 4}));

  const auto j = to_json(plan);
  CHECK(j["experiment"] == "consistency");
  CHECK(j["true_subset"] == nlohmann::json({1, 2, 5}));
  CHECK(j["base_seed"] == 9);

  const auto no_seed = error_of([&] {
    (void)plan_from_config(KeyValueConfig::parse("experiment = consistency\nfamily = arx\ntheta_true = 0,0.5,1\n", "s.cfg"));
  });
  CHECK(contains(no_seed, "base_seed"));

  const auto bad_theta = error_of([] {
    (void)plan_from_config(KeyValueConfig::parse("experiment = consistency\nfamily = arx\ntheta_true = 0, 0.5\n", "t.cfg"));
  });
  CHECK(contains(bad_theta, "t.cfg:3: key 'theta_true'"));

  const auto bad_grid = error_of([] {
    (void)plan_from_config(KeyValueConfig::parse(
        "experiment = consistency\nfamily = arx\ntheta_true = 0,0.5,1\nn_grid = 900, 100\nbase_seed = 1\n", "n.cfg"));
  });
  CHECK(contains(bad_grid, "n.cfg"));
  CHECK(contains(bad_grid, "strictly increasing"));
}

TEST_CASE("small parsers") {
  CHECK(parse_penalty("const:1.5").name() == "const:1.5");
  CHECK(parse_penalty("loglog:2").name() == "loglog:2");
  CHECK(parse_penalty(" log ").name() == "log");
  CHECK(parse_penalty("sqrt").name() == "sqrt");
  CHECK_THROWS_AS((void)parse_penalty("bic"), ParseError);
  CHECK_THROWS_AS((void)parse_penalty("const:x"), ParseError);

  const auto table = temp_file("kappa.csv", "n,kappa\n10,1\n100,2.5\n");
  const auto custom = parse_penalty("file:" + table.string());
  CHECK(penalty_value(custom, 150) == 2.5);
  const auto bad_table = temp_file("kappa_bad.csv", "n,kappa\n10,1\n100\n");
  CHECK(contains(error_of([&] { (void)parse_penalty("file:" + bad_table.string()); }), "row 3"));

  const auto spec = FamilySpec::arx(3);
  CHECK(parse_candidates("nested:1", spec).size() == 2);
  CHECK(parse_candidates("nested", spec).size() == 4);
  CHECK(parse_candidates("all", spec).size() == 8);
  const auto list = temp_file("cands.txt", "{1,5}\n1,2,5\n");
  const auto cands = parse_candidates("file:" + list.string(), spec);
  REQUIRE(cands.size() == 2);
  CHECK(cands[1] == ModelSubset({0, 1, 4}));
  CHECK_THROWS_AS((void)parse_candidates("nested:-1", spec), ParseError);

  CHECK(parse_real_list("1, 2.5,-3") == std::vector<double>{1.0, 2.5, -3.0});
  CHECK_THROWS_AS((void)parse_real_list("1,2", 3), ParseError);
  CHECK(parse_innovation("student:6").nu == 6.0);
  CHECK(parse_emission("negbin:3").r == 3.0);
  CHECK_THROWS_AS((void)parse_innovation("cauchy"), ParseError);
  CHECK_THROWS_AS((void)parse_emission("binomial"), ParseError);
}

TEST_CASE("trajectory CSV: round trip and row diagnostics") {
  const auto spec = FamilySpec::arx(1, 1, 2);
  const auto tr = simulate(spec, ParamVector{0.1, 0.4, 0.3, -0.2, 1.0}, 50, 20, Innovation::gaussian(),
                           Emission::poisson(), RngStream{3, 0});
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  CHECK(os.str().rfind("t,y1,x1,x2\n", 0) == 0);
  std::istringstream is(os.str());
  const auto back = read_trajectory_csv(is, SeriesKind::Real, "mem");
  CHECK(vec(back.obs_data()) == vec(tr.obs_data()));
  CHECK(vec(back.covariate_data()) == vec(tr.covariate_data()));

  const auto counts = simulate(FamilySpec::ingarch(1), ParamVector{1.0, 0.4}, 30, 10, Innovation::gaussian(),
                               Emission::poisson(), RngStream{4, 0});
  std::ostringstream oc;
  write_trajectory_csv(oc, counts);
  CHECK(oc.str().find('.') == std::string::npos);
  std::istringstream ic(oc.str());
  CHECK(vec(read_trajectory_csv(ic, SeriesKind::Count, "mem").obs_data()) == vec(counts.obs_data()));

  auto parse = [](const std::string& text, SeriesKind kind) {
    std::istringstream in(text);
    return error_of([&] { (void)read_trajectory_csv(in, kind, "d.csv"); });
  };
  CHECK(contains(parse("t,y1\n1,0.5\n2,0.1,7\n", SeriesKind::Real), "d.csv: row 3: expected 2 columns, found 3"));
  CHECK(contains(parse("t,y1\n1,abc\n", SeriesKind::Real), "row 2, column 'y1': 'abc'"));
  CHECK(contains(parse("t,y1\n1,1.5\n", SeriesKind::Count), "non-negative integers"));
  CHECK(contains(parse("time,y\n", SeriesKind::Real), "row 1"));
  CHECK(contains(parse("", SeriesKind::Real), "header"));
  CHECK(contains(parse("t,y1\n", SeriesKind::Real), "no data rows"));

  CHECK(contains(error_of([] { (void)read_trajectory_csv("/nonexistent/y.csv", SeriesKind::Real); }),
                 "/nonexistent/y.csv"));
}

TEST_CASE("format_real round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0}) CHECK(std::stod(format_real(v)) == v);
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(3.0) == "3");
}

TEST_CASE("JSON shapes") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  CHECK(to_json(m) == nlohmann::json::parse("[[1,2,3],[4,5,6]]"));
  CHECK(to_json(ModelSubset({0, 2})) == nlohmann::json::parse("[1,3]"));

  const auto spec_json = to_json(FamilySpec::arx(1));
  CHECK(spec_json["param_dim"] == 3);
  CHECK(spec_json["coordinates"] == nlohmann::json::parse(R"(["c","a1","sigma"])"));

  PopulationMatrices pop{Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                         Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                         Eigen::MatrixXd::Zero(1, 2), 1.0};
  const auto jl = to_json(joint_limit_matrices(ModelSubset({0}), ModelSubset({0, 1}), pop));
  CHECK(jl["counts"]["negative"] == 1);
  CHECK(jl["counts"]["positive"] == 2);
  const auto ev = jl["eigenvalues"].get<std::vector<double>>();
  CHECK(std::is_sorted(ev.begin(), ev.end()));
}

TEST_CASE("selection CSV quotes subsets and flags the winner") {
  SelectionResult s;
  CriterionRow a;
  a.subset = ModelSubset({0});
  a.contrast_at_min = 10.0;
  a.penalty = 1.0;
  a.criterion = 11.0;
  CriterionRow b = a;
  b.subset = ModelSubset({0, 1});
  b.contrast_at_min = 9.5;
  b.criterion = 11.5;
  s.table = {a, b};
  s.winner = a.subset;
  std::ostringstream os;
  write_selection_csv(os, s);
  CHECK(os.str() == "subset,contrast,penalty,criterion,winner_flag\n\"{1}\",10,1,11,1\n\"{1,2}\",9.5,1,11.5,0\n");
}

TEST_CASE("missing files name the path") {
  CHECK(contains(error_of([] { (void)read_text_file("/no/such/plan.cfg"); }), "cannot open file '/no/such/plan.cfg'"));
  CHECK(contains(error_of([] { (void)load_family_config("/no/such/fam.cfg"); }), "/no/such/fam.cfg"));
}
