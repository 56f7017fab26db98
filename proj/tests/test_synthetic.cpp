#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "dispcast/dataio.hpp"
#include "dispcast/errors.hpp"
#include "dispcast/lmm.hpp"
#include "dispcast/synthetic.hpp"

using namespace dispcast;

TEST_SUITE("synthetic") {

TEST_CASE("rows are complete and ingest keeps all of them") {
  SyntheticSpec spec;
  spec.n = 4000;
  const auto gen = generate_synthetic(spec);
  CHECK(gen.data.n_rows == 4000);
  CHECK(gen.data.columns.size() == 15);
  const auto data = ingest(gen.data);
  CHECK(data.n_rows == 4000);
  CHECK(data.n_rejected == 0);
}

TEST_CASE("composition tracks the configured shares") {
  SyntheticSpec spec;
  spec.n = 20000;
  const auto gen = generate_synthetic(spec);
  const auto& region = gen.data.at("REGION").values;
  const auto& sections = gen.data.at("SECTIONS").labels;
  const auto& year = gen.data.at("YEAR").values;

  const double n = static_cast<double>(spec.n);
  long three = 0, single = 0, last_year = 0;
  long by_region[5] = {0, 0, 0, 0, 0};
  for (long i = 0; i < spec.n; ++i) {
    if (sections[i] == "three_or_more") {
      ++three;
      CHECK(region[i] == kRegionNational);
    } else {
      if (sections[i] == "single") ++single;
      ++by_region[static_cast<int>(region[i]) - 1];
    }
    if (year[i] == 2015.0 + spec.n_years - 1) ++last_year;
  }
  CHECK(static_cast<double>(three) / n ==
        doctest::Approx(spec.three_plus_share).epsilon(0.10));
  CHECK(static_cast<double>(single) / static_cast<double>(spec.n - three) ==
        doctest::Approx(spec.single_share).epsilon(0.05));
  for (int r = 0; r < 4; ++r)
    CHECK(static_cast<double>(by_region[r]) / static_cast<double>(spec.n - three) ==
          doctest::Approx(spec.region_shares[r]).epsilon(0.08));
  CHECK(by_region[4] == 0);
  CHECK(std::abs(static_cast<double>(last_year) / n - spec.last_year_share) <
        0.005);

  // Survey weights are lognormal with unit mean.
  const auto& weight = gen.data.at("WEIGHT").values;
  double wsum = 0.0;
  for (double w : weight) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(wsum / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("generation replays bit-identically per seed") {
  SyntheticSpec spec;
  spec.n = 1500;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  const auto& pa = a.data.at("PRICE").values;
  const auto& pb = b.data.at("PRICE").values;
  for (long i = 0; i < spec.n; ++i) CHECK(pa[i] == pb[i]);

  spec.seed += 1;
  const auto c = generate_synthetic(spec);
  long differs = 0;
  for (long i = 0; i < spec.n; ++i)
    differs += pa[i] != c.data.at("PRICE").values[i];
  CHECK(differs > 1400);
}

TEST_CASE("the truth card matches the generator settings") {
  SyntheticSpec spec;
  spec.n = 500;
  const auto gen = generate_synthetic(spec);
  const auto& beta = gen.truth.beta;
  CHECK(beta.at("(Intercept)") == spec.intercept);
  CHECK(beta.at("LOG.SQFT") == spec.beta_log_sqft);
  CHECK(beta.at("HOUSEHOLDS") == spec.beta_households);
  CHECK(beta.at("PPI") == spec.beta_ppi);
  // Year effects: trend plus the late-period bump.
  CHECK(beta.at("YEAR=2016") == doctest::Approx(spec.year_trend));
  CHECK(beta.at("YEAR=2023") ==
        doctest::Approx(spec.year_trend * 8 + spec.year_bump * 3));
  CHECK(gen.truth.sigma2_v == spec.sigma2_v);
  CHECK(gen.truth.sigma2_e == spec.sigma2_e);
  // Next-period macro levels exist for every lagged covariate and region.
  for (const char* col : {"HOUSEHOLDS", "LOG.OWNER", "INCOME"}) {
    const auto& by_region = gen.truth.next_period_lagged.at(col);
    CHECK(by_region.size() == 5);
    for (const auto& [code, value] : by_region) {
      CHECK(code >= 1);
      CHECK(code <= 5);
      CHECK(std::isfinite(value));
    }
  }
}

TEST_CASE("a reml fit recovers the generator") {
  SyntheticSpec spec;  // default size
  const auto gen = generate_synthetic(spec);
  const auto panel = make_panel(ingest(gen.data));
  const auto fit = fit_reml(panel);
  CHECK(fit.converged);
  CHECK_FALSE(fit.boundary);

  auto coef = [&](const std::string& name) {
    for (std::size_t j = 0; j < fit.beta_names.size(); ++j)
      if (fit.beta_names[j] == name) return fit.beta[static_cast<long>(j)];
    FAIL("missing coefficient " << name);
    return 0.0;
  };
  CHECK(coef("LOG.SQFT") == doctest::Approx(spec.beta_log_sqft).epsilon(0.02));
  CHECK(coef("BEDROOMS=two_or_fewer") ==
        doctest::Approx(-0.04).epsilon(0.05));
  CHECK(fit.sigma2_e == doctest::Approx(spec.sigma2_e).epsilon(0.05));

  // Region effects are recovered up to the common level soaked up by the
  // intercept.
  double mean_hat = 0.0, mean_true = 0.0;
  for (int d = 0; d < 5; ++d) {
    mean_hat += fit.v_hat[d] / 5.0;
    mean_true += gen.truth.region_effect[d] / 5.0;
  }
  for (int d = 0; d < 5; ++d)
    CHECK(std::abs((fit.v_hat[d] - mean_hat) -
                   (gen.truth.region_effect[d] - mean_true)) < 0.03);
}

TEST_CASE("degenerate specs are refused") {
  SyntheticSpec tiny;
  tiny.n = 50;
  CHECK_THROWS_AS(generate_synthetic(tiny), ConfigError);
  SyntheticSpec flat;
  flat.n_years = 1;
  CHECK_THROWS_AS(generate_synthetic(flat), ConfigError);
}

}  // TEST_SUITE
