#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dispcast/errors.hpp"
#include "dispcast/measures.hpp"
#include "dispcast/pipeline.hpp"

using namespace dispcast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("dispcast_pipe_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

RunConfig small_config(const fs::path& out_dir) {
  RunConfig c;
  c.use_synthetic = true;
  c.synthetic.n = 2500;
  c.synthetic.n_years = 3;
  c.synthetic.last_year_share = 0.06;
  c.synthetic.seed = 424242;
  c.scenario_specs = {"s0", "s21"};
  c.iterations = 8;
  c.seed = 9;
  c.measures = {MeasureKind::SD, MeasureKind::QDR};
  c.domain_names = {"population", "subpop_2"};
  c.out_dir = out_dir.string();
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("synthetic spec JSON round trips and rejects junk") {
  SyntheticSpec spec;
  spec.n = 4321;
  spec.n_years = 4;
  spec.sigma2_e = 0.5;
  spec.region_shares = {0.1, 0.2, 0.3, 0.4};
  spec.log_sqft_mean = {1.0, 2.0, 3.0};
  spec.beta_fed = -0.75;
  const std::string text = synthetic_spec_to_json(spec);
  const SyntheticSpec back = synthetic_spec_from_json(text);
  CHECK(synthetic_spec_to_json(back) == text);
  CHECK(back.n == 4321);
  CHECK(back.sigma2_e == 0.5);
  CHECK(back.region_shares[3] == 0.4);
  CHECK(back.beta_fed == -0.75);

  // Missing fields keep their defaults.
  const SyntheticSpec dflt = synthetic_spec_from_json("{}");
  CHECK(dflt.n == SyntheticSpec{}.n);
  CHECK(dflt.sigma2_v == SyntheticSpec{}.sigma2_v);
  CHECK(dflt.last_year_share == SyntheticSpec{}.last_year_share);

  CHECK_THROWS_AS(synthetic_spec_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"bogus":1})"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"n":"ten"})"), ConfigError);
  CHECK_THROWS_AS(synthetic_spec_from_json(R"({"region_shares":[1,2]})"),
                  ConfigError);
}

TEST_CASE("normalize resolves defaults and rejects inconsistent setups") {
  RunConfig base;
  base.use_synthetic = true;
  const RunConfig norm = normalize(base);
  REQUIRE(norm.resolved_scenarios.size() == 1);
  CHECK(norm.resolved_scenarios[0].name == "s0");
  CHECK(norm.domain_names.size() == 10);
  CHECK(norm.domain_names.front() == "population");
  CHECK(norm.data_fingerprint.empty());

  auto expect_config_error = [&base](auto&& tweak) {
    RunConfig c = base;
    tweak(c);
    CHECK_THROWS_AS(normalize(c), ConfigError);
  };
  expect_config_error([](RunConfig& c) { c.data_path = "also.csv"; });
  expect_config_error([](RunConfig& c) { c.use_synthetic = false; });
  expect_config_error([](RunConfig& c) { c.iterations = 0; });
  expect_config_error([](RunConfig& c) { c.measures.clear(); });
  expect_config_error(
      [](RunConfig& c) { c.measures = {MeasureKind::SD, MeasureKind::SD}; });
  expect_config_error([](RunConfig& c) { c.domain_names = {"nope"}; });
  expect_config_error(
      [](RunConfig& c) { c.domain_names = {"population", "population"}; });
  expect_config_error([](RunConfig& c) { c.qape_orders.clear(); });
  expect_config_error([](RunConfig& c) { c.qape_orders = {1.0}; });
  expect_config_error([](RunConfig& c) { c.qape_orders = {0.5, 0.0}; });
  expect_config_error([](RunConfig& c) { c.max_failure_rate = 1.5; });
  expect_config_error([](RunConfig& c) { c.thresholds.moderate = 0.9; });
  expect_config_error([](RunConfig& c) { c.thresholds.high = 1.0; });
  expect_config_error([](RunConfig& c) { c.workers = 0; });
  expect_config_error([](RunConfig& c) { c.scenario_specs = {"s0", "s0"}; });
  expect_config_error([](RunConfig& c) { c.scenario_specs.clear(); });
}

TEST_CASE("normalize fingerprints the data file") {
  TempDir tmp;
  const fs::path csv = tmp.path / "mini.csv";
  spill(csv, "a,b\n1,2\n");
  RunConfig c;
  c.data_path = csv.string();
  const RunConfig norm = normalize(c);
  CHECK(norm.data_fingerprint.size() == 16);

  RunConfig again = c;
  again.data_fingerprint = norm.data_fingerprint;
  CHECK(normalize(again).data_fingerprint == norm.data_fingerprint);

  again.data_fingerprint = "0000000000000000";
  CHECK_THROWS_AS(normalize(again), DataError);
  RunConfig gone = c;
  gone.data_path = (tmp.path / "missing.csv").string();
  CHECK_THROWS_AS(normalize(gone), DataError);
}

TEST_CASE("config hash ignores runtime details only") {
  RunConfig c;
  c.use_synthetic = true;
  const std::string h = config_hash(c);
  CHECK(h.size() == 16);

  RunConfig runtime = c;
  runtime.workers = 7;
  runtime.out_dir = "elsewhere";
  CHECK(config_hash(runtime) == h);

  RunConfig reseeded = c;
  reseeded.seed = 2;
  CHECK(config_hash(reseeded) != h);
  RunConfig refit_off = c;
  refit_off.refit = false;
  CHECK(config_hash(refit_off) != h);
}

TEST_CASE("manifest round trips through a file") {
  TempDir tmp;
  RunConfig c;
  c.use_synthetic = true;
  c.synthetic.n = 2500;
  c.synthetic.n_years = 3;
  c.synthetic.last_year_share = 0.05;
  c.synthetic.seed = 77;
  c.binary_variables = {"FLAG"};
  c.scenario_specs = {"s0", "s31"};
  c.iterations = 12;
  c.seed = 5;
  c.measures = {MeasureKind::SD, MeasureKind::AAD};
  c.domain_names = {"population", "subpop_3"};
  c.qape_orders = {0.25, 0.75};
  c.refit = false;
  c.max_failure_rate = 0.2;
  c.thresholds = {1.2, 2.5};
  c.measure_method = QuantileMethod::LeftInverse;
  c.reml.tol = 1e-8;
  c.reml.max_iter = 123;
  c.reml.rho_max = 5000.0;

  const std::string text = manifest_text(c);
  CHECK(text.rfind("dispcast_manifest=1\n", 0) == 0);
  const fs::path manifest = tmp.path / "manifest.txt";
  spill(manifest, text);

  const RunConfig rt = config_from_manifest(manifest.string());
  CHECK(rt.use_synthetic);
  CHECK(synthetic_spec_to_json(rt.synthetic) ==
        synthetic_spec_to_json(c.synthetic));
  CHECK(rt.binary_variables == std::vector<std::string>{"FLAG"});
  REQUIRE(rt.resolved_scenarios.size() == 2);
  CHECK(rt.resolved_scenarios[0].name == "s0");
  CHECK(rt.resolved_scenarios[1].name == "s31");
  CHECK(rt.iterations == 12);
  CHECK(rt.seed == 5);
  CHECK(rt.measures ==
        std::vector<MeasureKind>{MeasureKind::SD, MeasureKind::AAD});
  CHECK(rt.domain_names == c.domain_names);
  CHECK(rt.qape_orders == c.qape_orders);
  CHECK_FALSE(rt.refit);
  CHECK(rt.max_failure_rate == 0.2);
  CHECK(rt.thresholds.moderate == 1.2);
  CHECK(rt.thresholds.high == 2.5);
  CHECK(rt.measure_method == QuantileMethod::LeftInverse);
  CHECK(rt.reml.tol == 1e-8);
  CHECK(rt.reml.max_iter == 123);
  CHECK(rt.reml.rho_max == 5000.0);
  CHECK(config_hash(rt) == config_hash(c));

  // Tampering with the body breaks the stored hash.
  std::string tampered = text;
  const auto pos = tampered.find("refit=0");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 7, "refit=1");
  spill(tmp.path / "tampered.txt", tampered);
  CHECK_THROWS_AS(config_from_manifest((tmp.path / "tampered.txt").string()),
                  ConfigError);

  // An unknown header key and a duplicated body key are both rejected.
  std::string extra = text;
  extra.insert(extra.find('\n') + 1, "bogus=1\n");
  spill(tmp.path / "extra.txt", extra);
  CHECK_THROWS_AS(config_from_manifest((tmp.path / "extra.txt").string()),
                  ConfigError);
  std::string doubled = text + "refit=0\n";
  spill(tmp.path / "doubled.txt", doubled);
  CHECK_THROWS_AS(config_from_manifest((tmp.path / "doubled.txt").string()),
                  ConfigError);

  spill(tmp.path / "junk.txt", "x=1\ny=2\n");
  CHECK_THROWS_AS(config_from_manifest((tmp.path / "junk.txt").string()),
                  ConfigError);
  CHECK_THROWS_AS(config_from_manifest((tmp.path / "absent.txt").string()),
                  ConfigError);
}

TEST_CASE("pipeline writes the artifact set and replays bit for bit") {
  TempDir tmp;
  const RunConfig cfg = small_config(tmp.path / "run1");
  const RunResult result = run_pipeline(cfg);

  CHECK(result.future_units > 0);
  CHECK(result.forecasts.size() == 4);
  CHECK(result.scenario_names == std::vector<std::string>{"s0", "s21"});
  CHECK(result.accuracy.rows.size() == 8);   // 2 scenarios x 2 x 2
  CHECK(result.comparisons.size() == 12);    // s21 x 2 x 2 x 3 statistics

  const std::vector<std::string> artifacts = {
      "forecasts.csv",     "errors_s0.csv",       "errors_s21.csv",
      "accuracy.csv",      "comparison.csv",      "plots/rmse.csv",
      "plots/qape_0.5.csv", "plots/qape_0.99.csv", "manifest.txt"};
  for (const std::string& name : artifacts)
    CHECK_MESSAGE(fs::exists(tmp.path / "run1" / name), name);
  CHECK(result.manifest_path == (tmp.path / "run1" / "manifest.txt").string());

  // 8 iterations x 2 measures x 2 domains plus the header.
  CHECK(count_lines(slurp(tmp.path / "run1" / "errors_s0.csv")) == 33);
  const std::string rmse_plot = slurp(tmp.path / "run1" / "plots/rmse.csv");
  CHECK(rmse_plot.rfind("measure,domain,s0,s21\n", 0) == 0);

  // Replaying the manifest with another worker count changes nothing.
  RunConfig replay = config_from_manifest(result.manifest_path);
  replay.workers = 3;
  replay.out_dir = (tmp.path / "run2").string();
  run_pipeline(replay);
  for (const std::string& name : artifacts)
    CHECK_MESSAGE(slurp(tmp.path / "run1" / name) ==
                      slurp(tmp.path / "run2" / name),
                  name);
}

}  // TEST_SUITE
