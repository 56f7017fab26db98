#include <doctest.h>

#include <cmath>
#include <vector>

#include "dispcast/bootstrap.hpp"
#include "dispcast/dataio.hpp"
#include "dispcast/errors.hpp"
#include "dispcast/rng.hpp"
#include "dispcast/synthetic.hpp"

using namespace dispcast;

namespace {

struct Fixture {
  TransactionPanel panel;
  FittedModel model;
  FutureFrame frame;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    SyntheticSpec spec;
    spec.n = 4000;
    spec.n_years = 3;
    spec.last_year_share = 0.05;
    const auto gen = generate_synthetic(spec);
    Fixture out;
    out.panel = make_panel(ingest(gen.data));
    out.model = fit_reml(out.panel);
    auto policy = CovariatePolicy::standard(out.panel.design_columns);
    policy.future_values = gen.truth.next_period_lagged;
    out.frame = build_future_frame(out.panel, policy);
    return out;
  }();
  return fx;
}

BootstrapPlan small_plan(long B, std::uint64_t seed) {
  BootstrapPlan plan;
  plan.iterations = B;
  plan.seed = seed;
  return plan;
}

bool cells_equal(const BootstrapCell& a, const BootstrapCell& b) {
  return a.missing == b.missing &&
         (a.missing ||
          (a.theta_star == b.theta_star && a.theta_hat_star == b.theta_hat_star));
}

}  // namespace

TEST_SUITE("bootstrap") {

TEST_CASE("stream helpers are deterministic and well-shaped") {
  const auto& fx = fixture();
  auto e1 = make_engine(7, Stream::SampleNoise, 3);
  auto e2 = make_engine(7, Stream::SampleNoise, 3);
  const auto v1 = draw_region_effects(fx.model, kNumRegions, e1);
  const auto v2 = draw_region_effects(fx.model, kNumRegions, e2);
  REQUIRE(v1.size() == kNumRegions);
  for (int d = 0; d < kNumRegions; ++d) CHECK(v1[d] == v2[d]);

  // Different streams with the same seed and index stay apart.
  auto e3 = make_engine(7, Stream::FutureNoise, 3);
  const auto v3 = draw_region_effects(fx.model, kNumRegions, e3);
  bool same = true;
  for (int d = 0; d < kNumRegions; ++d) same = same && v1[d] == v3[d];
  CHECK_FALSE(same);
}

TEST_CASE("noise-free generation reproduces the linear predictor") {
  const auto& fx = fixture();
  FittedModel quiet = fx.model;
  quiet.sigma2_e = 0.0;
  const RemlDesign design(fx.panel.design, fx.panel.region, kNumRegions);
  auto engine = make_engine(1, Stream::SampleNoise, 0);
  const Eigen::VectorXd v = draw_region_effects(quiet, kNumRegions, engine);
  const auto y = generate_sample_star(quiet, design, v, engine);
  for (long i = 0; i < std::min<long>(y.size(), 200); ++i) {
    const double eta = fx.panel.design.row(i).dot(quiet.beta) +
                       v[fx.panel.region[i] - 1];
    CHECK(y[i] == doctest::Approx(eta).epsilon(1e-12));
  }

  auto fut_engine = make_engine(1, Stream::FutureNoise, 0);
  const auto yf = generate_future_star(quiet, fx.frame, v, fut_engine);
  CHECK(static_cast<long>(yf.size()) == fx.frame.total_units);
  long k = 0;
  for (const auto& row : fx.frame.rows) {
    const double eta = row.x.dot(quiet.beta) + v[row.region - 1];
    for (long c = 0; c < row.copies; ++c, ++k)
      CHECK(yf[k] == doctest::Approx(eta).epsilon(1e-12));
  }
}

TEST_CASE("worker count never changes the panel") {
  const auto& fx = fixture();
  auto plan = small_plan(16, 91);
  plan.scenario = builtin_scenario("s4");
  const auto serial = run_bootstrap(fx.panel, fx.model, fx.frame, plan);
  plan.workers = 4;
  const auto parallel = run_bootstrap(fx.panel, fx.model, fx.frame, plan);
  REQUIRE(serial.iterations() == parallel.iterations());
  for (long b = 0; b < serial.iterations(); ++b) {
    CHECK(serial.branch(b) == parallel.branch(b));
    CHECK(serial.excluded(b) == parallel.excluded(b));
    for (int m = 0; m < 8; ++m)
      for (int d = 0; d < 10; ++d)
        CHECK(cells_equal(serial.at(b, m, d), parallel.at(b, m, d)));
  }
}

TEST_CASE("the refit side never sees the shock") {
  const auto& fx = fixture();
  auto base = small_plan(12, 17);
  const auto s0 = run_bootstrap(fx.panel, fx.model, fx.frame, base);
  auto shocked_plan = base;
  shocked_plan.scenario = builtin_scenario("s21");
  const auto s21 = run_bootstrap(fx.panel, fx.model, fx.frame, shocked_plan);

  bool star_differs = false;
  for (long b = 0; b < 12; ++b) {
    CHECK(s0.branch(b) == kNoShockBranch);
    CHECK(s21.branch(b) == 0);
    for (int m = 0; m < 8; ++m)
      for (int d = 0; d < 10; ++d) {
        const auto& a = s0.at(b, m, d);
        const auto& c = s21.at(b, m, d);
        REQUIRE_FALSE(a.missing);
        REQUIRE_FALSE(c.missing);
        // Identical plug-in forecasts, bit for bit.
        CHECK(a.theta_hat_star == c.theta_hat_star);
        if (a.theta_star != c.theta_star) star_differs = true;
      }
  }
  CHECK(star_differs);
}

TEST_CASE("domains outside the shock footprint are untouched") {
  const auto& fx = fixture();
  auto base = small_plan(12, 29);
  const auto s0 = run_bootstrap(fx.panel, fx.model, fx.frame, base);
  auto hurricane = base;
  hurricane.scenario = builtin_scenario("s41");  // northeast and south only
  const auto s41 = run_bootstrap(fx.panel, fx.model, fx.frame, hurricane);

  // Midwest and west subpopulations and the national three-plus market keep
  // their exact draws; the population cells move.
  bool population_differs = false;
  for (long b = 0; b < 12; ++b) {
    for (int m = 0; m < 8; ++m) {
      for (int d : {2, 4, 6, 8, 9})  // subpop_2, subpop_4, subpop_6, subpop_8, subpop_9
        CHECK(cells_equal(s0.at(b, m, d), s41.at(b, m, d)));
      if (!cells_equal(s0.at(b, m, 0), s41.at(b, m, 0)))
        population_differs = true;
    }
  }
  CHECK(population_differs);
}

TEST_CASE("skipping the refit changes only the forecast side") {
  const auto& fx = fixture();
  auto refit = small_plan(10, 53);
  auto fixed = refit;
  fixed.refit = false;
  const auto a = run_bootstrap(fx.panel, fx.model, fx.frame, refit);
  const auto b = run_bootstrap(fx.panel, fx.model, fx.frame, fixed);
  bool hat_differs = false;
  for (long it = 0; it < 10; ++it)
    for (int m = 0; m < 8; ++m)
      for (int d = 0; d < 10; ++d) {
        CHECK(a.at(it, m, d).theta_star == b.at(it, m, d).theta_star);
        if (a.at(it, m, d).theta_hat_star != b.at(it, m, d).theta_hat_star)
          hat_differs = true;
      }
  CHECK(hat_differs);
}

TEST_CASE("branch bookkeeping follows the schedule") {
  const auto& fx = fixture();
  auto plan = small_plan(50, 3);
  plan.scenario = builtin_scenario("s4");
  const auto panel = run_bootstrap(fx.panel, fx.model, fx.frame, plan);
  const BranchSchedule schedule(plan.scenario, plan.iterations, plan.seed);
  std::vector<long> seen(3, 0);
  long none = 0;
  for (long b = 0; b < 50; ++b) {
    if (panel.branch(b) == kNoShockBranch)
      ++none;
    else
      ++seen[panel.branch(b)];
  }
  const auto& counts = schedule.fixed_counts();
  CHECK(seen[0] == counts[0]);
  CHECK(seen[1] == counts[1]);
  CHECK(seen[2] == counts[2]);
  CHECK(none == 50 - counts[0] - counts[1] - counts[2]);
  CHECK(panel.n_excluded() == 0);
  CHECK(panel.errors(0, 0).size() == 50);
}

TEST_CASE("plans are validated up front") {
  const auto& fx = fixture();
  auto plan = small_plan(0, 1);
  CHECK_THROWS_AS(run_bootstrap(fx.panel, fx.model, fx.frame, plan),
                  ConfigError);
  plan = small_plan(5, 1);
  plan.workers = 0;
  CHECK_THROWS_AS(run_bootstrap(fx.panel, fx.model, fx.frame, plan),
                  ConfigError);
  plan = small_plan(5, 1);
  FittedModel broken = fx.model;
  broken.sigma2_e = 0.0;
  CHECK_THROWS_AS(run_bootstrap(fx.panel, broken, fx.frame, plan),
                  NumericalError);
}

}  // TEST_SUITE
