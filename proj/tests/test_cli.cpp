#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pencrit/io.hpp"

namespace fs = std::filesystem;
using pencrit::cli::dispatch;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path workdir() {
  const auto d = fs::temp_directory_path() / "pencrit_test_cli";
  fs::create_directories(d);
  return d;
}

std::string write(const std::string& name, const std::string& content) {
  const auto p = (workdir() / name).string();
  pencrit::write_text_file(p, content);
  return p;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("--help-all matches the golden file") {
  const auto r = run({"--help-all"});
  CHECK(r.code == 0);
  CHECK(r.out == pencrit::read_text_file(PENCRIT_GOLDEN_DIR "/help_all.txt"));
  for (const char* flag : {"--data", "--family", "--candidates", "--penalty", "--n", "--burn-in", "--seed",
                           "--threads", "--out", "--plot-data"}) {
    CHECK(contains(r.out, flag));
  }
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  const auto unknown = run({"simulate", "--family", "x.cfg", "--theta", "1", "--n", "5", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(contains(unknown.err, "--bogus"));
}

TEST_CASE("fit on a missing file names the path") {
  const auto fam = write("ar1.cfg", "family = arx\np = 1\n");
  const auto r = run({"fit", "--data", "/nonexistent/y.csv", "--family", fam});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "/nonexistent/y.csv"));
  const auto r2 = run({"fit", "--data", "/nonexistent/y.csv", "--family", "/nonexistent/fam.cfg"});
  CHECK(r2.code == 2);
  CHECK(contains(r2.err, "/nonexistent/fam.cfg"));
}

TEST_CASE("config and CSV diagnostics reach stderr with location") {
  const auto bad_fam = write("bad.cfg", "family = arx\nlags = 2\n");
  const auto r = run({"simulate", "--family", bad_fam, "--theta", "0,0.5,1", "--n", "10", "--seed", "1"});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "bad.cfg:2: key 'lags'"));

  const auto fam = write("ar1.cfg", "family = arx\np = 1\n");
  const auto csv = write("broken.csv", "t,y1\n1,0.1\n2,0.2,0.3\n");
  const auto r2 = run({"fit", "--data", csv, "--family", fam});
  CHECK(r2.code == 2);
  CHECK(contains(r2.err, "row 3: expected 2 columns, found 3"));
}

TEST_CASE("simulate twice with the same seed gives byte-identical CSVs") {
  const auto fam = write("ingarch.cfg", "family = ingarch\np = 1\n");
  const auto a = (workdir() / "sim_a.csv").string();
  const auto b = (workdir() / "sim_b.csv").string();
  CHECK(run({"simulate", "--family", fam, "--theta", "1,0.5", "--n", "1000", "--seed", "7", "--out", a}).code == 0);
  CHECK(run({"simulate", "--family", fam, "--theta", "1,0.5", "--n", "1000", "--seed", "7", "--out", b}).code == 0);
  CHECK(pencrit::read_text_file(a) == pencrit::read_text_file(b));
  const auto meta = nlohmann::json::parse(pencrit::read_text_file(a + ".meta.json"));
  CHECK(meta["seed"] == 7);
  CHECK(meta["burn_in"] == 1000);

  const auto c = (workdir() / "sim_c.csv").string();
  CHECK(run({"simulate", "--family", fam, "--theta", "1,0.5", "--n", "50", "--out", c}).code == 0);
  CHECK(nlohmann::json::parse(pencrit::read_text_file(c + ".meta.json")).contains("seed"));
  const auto to_stdout = run({"simulate", "--family", fam, "--theta", "1,0.5", "--n", "5"});
  CHECK(contains(to_stdout.err, "seed: "));
  CHECK(to_stdout.out.rfind("t,y1\n", 0) == 0);
}

TEST_CASE("select writes a SelectionResult with a winner, and the CSV table") {
  const auto fam = write("ar3.cfg", "family = arx\np = 3\n");
  const auto data = (workdir() / "ar_sel.csv").string();
  REQUIRE(run({"simulate", "--family", fam, "--theta", "0,0.5,0,0,1", "--n", "1500", "--seed", "3", "--out", data})
              .code == 0);
  const auto table = (workdir() / "sel.csv").string();
  const auto r = run({"select", "--data", data, "--family", fam, "--candidates", "nested:3", "--penalty", "log",
                      "--csv", table});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["winner"] == nlohmann::json({1, 2, 5}));
  CHECK(j["table"].size() == 4);
  CHECK(j["config"]["penalty"] == "log");
  const auto csv = pencrit::read_text_file(table);
  CHECK(csv.rfind("subset,contrast,penalty,criterion,winner_flag\n", 0) == 0);
  CHECK(contains(csv, "\"{1,2,5}\","));

  const auto fit = run({"fit", "--data", data, "--family", fam, "--subset", "1,2,5", "--sandwich"});
  REQUIRE(fit.code == 0);
  const auto fj = nlohmann::json::parse(fit.out);
  CHECK(fj["theta_hat"].size() == 5);
  CHECK(fj["theta_hat"][2] == 0.0);
  CHECK(fj.contains("sandwich"));
  CHECK(fj["config"]["starts"] == 5);
}

TEST_CASE("limits reports the signature and an overfit probability") {
  const auto fam = write("ar2.cfg", "family = arx\np = 2\n");
  const auto r = run({"limits", "--family", fam, "--m-star", "1,2,4", "--m-tilde", "1,2,3,4", "--theta",
                      "0,0.5,0,1", "--n", "3000", "--seed", "5", "--draws", "20000"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["counts"]["negative"] == 3);
  CHECK(j["counts"]["positive"] == 4);
  CHECK(j["overfit_probability"]["prob"].get<double>() > 0.05);
  CHECK(j["config"]["seed"] == 5);
  CHECK(run({"limits", "--family", fam, "--m-star", "1,2,3,4", "--m-tilde", "1,2,4", "--theta", "0,0.5,0,1", "--n",
             "100", "--seed", "1"})
            .code == 2);
}

TEST_CASE("experiment runs a plan config end to end") {
  const auto plan = write("plan.cfg",
                          "experiment = consistency\n"
                          "family = arx\n"
                          "p = 2\n"
                          "theta_true = 0, 0.5, 0, 1\n"
                          "schedules = log; const:1\n"
                          "n_grid = 150, 300\n"
                          "replications = 6\n"
                          "base_seed = 11\n"
                          "starts = 2\n");
  const auto out = (workdir() / "exp.json").string();
  const auto plot = (workdir() / "exp_plot.csv").string();
  const auto r = run({"experiment", "--plan", plan, "--threads", "2", "--out", out, "--plot-data", plot});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(pencrit::read_text_file(out));
  CHECK(j["cells"].size() == 4);
  CHECK(j["config"]["base_seed"] == 11);
  CHECK(j["config"]["replications"] == 6);
  CHECK(pencrit::read_text_file(out + ".cells.csv").rfind("experiment,schedule,n,", 0) == 0);
  CHECK(pencrit::read_text_file(plot).rfind("experiment,schedule,n,metric,value\n", 0) == 0);

  const auto bad = write("bad_plan.cfg", "experiment = consistency\nfamily = arx\ntheta_true = 0,0.5,1\n");
  const auto rb = run({"experiment", "--plan", bad});
  CHECK(rb.code == 2);
  CHECK(contains(rb.err, "base_seed"));
}
