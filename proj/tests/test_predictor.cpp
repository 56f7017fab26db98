#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "dispcast/errors.hpp"
#include "dispcast/predictor.hpp"

using namespace dispcast;

namespace {

// Two-period panel over columns (Intercept), INCOME, PPI, COLOR=red,
// YEAR=2016. Final period: two region-1 rows, one region-2 row, one
// national three-plus row.
TransactionPanel toy_panel() {
  TransactionPanel panel;
  const long n = 6;
  panel.n_years = 2;
  panel.design_columns = {"(Intercept)", "INCOME", "PPI", "COLOR=red",
                          "YEAR=2016"};
  panel.design.resize(n, 5);
  panel.log_price.resize(n);
  struct Row {
    int region, sections, year;
    double income, ppi, red, weight;
  };
  const Row rows[] = {
      {1, kSectionsSingle, 2015, 9.0, 4.0, 1.0, 1.0},
      {2, kSectionsSingle, 2015, 18.0, 4.5, 0.0, 1.0},
      {1, kSectionsSingle, 2016, 10.0, 5.0, 1.0, 2.4},
      {1, kSectionsDouble, 2016, 14.0, 7.0, 0.0, 0.2},
      {2, kSectionsSingle, 2016, 20.0, 6.0, 1.0, 1.6},
      {5, kSectionsThreePlus, 2016, 30.0, 8.0, 0.0, 1.0},
  };
  for (long i = 0; i < n; ++i) {
    const Row& r = rows[i];
    panel.design(i, 0) = 1.0;
    panel.design(i, 1) = r.income;
    panel.design(i, 2) = r.ppi;
    panel.design(i, 3) = r.red;
    panel.design(i, 4) = r.year == 2016 ? 1.0 : 0.0;
    panel.log_price[i] = 10.0;
    panel.region.push_back(r.region);
    panel.year_index.push_back(r.year == 2015 ? 1 : 2);
    panel.year_label.push_back(r.year);
    panel.weight.push_back(r.weight);
    panel.sections_class.push_back(r.sections);
    panel.bedrooms_class.push_back(kBedroomsTwoOrFewer);
    panel.subpopulation.push_back(subpopulation_of(r.region, r.sections));
  }
  return panel;
}

CovariatePolicy toy_policy() {
  CovariatePolicy policy;
  policy.lagged_known = {"INCOME"};
  policy.frozen = {"PPI"};
  policy.replicated = {"COLOR"};
  policy.future_values["INCOME"][1] = 12.0;
  return policy;
}

FittedModel toy_model() {
  FittedModel model;
  model.beta.resize(5);
  model.beta << 1.0, 0.01, 0.02, 0.1, 0.05;
  model.beta_names = {"(Intercept)", "INCOME", "PPI", "COLOR=red",
                      "YEAR=2016"};
  model.v_hat.resize(5);
  model.v_hat << 0.1, -0.05, 0.0, 0.0, 0.02;
  model.sigma2_v = 0.04;
  model.sigma2_e = 0.01;
  model.converged = true;
  return model;
}

}  // namespace

TEST_SUITE("predictor") {

TEST_CASE("future frame replicates the final period") {
  const auto panel = toy_panel();
  const auto frame = build_future_frame(panel, toy_policy());
  REQUIRE(frame.rows.size() == 4);
  CHECK(frame.base_year == 2016);
  CHECK(frame.columns == panel.design_columns);
  // Copies: round(2.4) = 2, round(0.2) floored at 1, round(1.6) = 2, 1.
  CHECK(frame.rows[0].copies == 2);
  CHECK(frame.rows[1].copies == 1);
  CHECK(frame.rows[2].copies == 2);
  CHECK(frame.rows[3].copies == 1);
  CHECK(frame.total_units == 6);
  CHECK(frame.units_in(Domain{"population", 0}) == 6);
  CHECK(frame.units_in(Domain{"subpop_1", 1}) == 2);
  CHECK(frame.units_in(Domain{"subpop_5", 5}) == 1);
  CHECK(frame.units_in(Domain{"subpop_9", 9}) == 1);
  CHECK(frame.units_in(Domain{"subpop_3", 3}) == 0);
  CHECK(frame.rows[0].subpopulation == 1);
  CHECK(frame.rows[3].subpopulation == 9);
}

TEST_CASE("covariate treatments fill the design row") {
  const auto frame = build_future_frame(toy_panel(), toy_policy());
  // Lagged INCOME: supplied for region 1, final-period region mean else.
  CHECK(frame.rows[0].x[1] == 12.0);
  CHECK(frame.rows[1].x[1] == 12.0);
  CHECK(frame.rows[2].x[1] == 20.0);
  CHECK(frame.rows[3].x[1] == 30.0);
  // Frozen PPI: global final-period mean (5 + 7 + 6 + 8) / 4.
  for (const auto& row : frame.rows) CHECK(row.x[2] == 6.5);
  // Replicated COLOR keeps the source values.
  CHECK(frame.rows[0].x[3] == 1.0);
  CHECK(frame.rows[1].x[3] == 0.0);
  CHECK(frame.rows[2].x[3] == 1.0);
  // The year block keeps the final-period pattern.
  for (const auto& row : frame.rows) {
    CHECK(row.x[0] == 1.0);
    CHECK(row.x[4] == 1.0);
  }
}

TEST_CASE("policy must cover the covariates exactly once") {
  CovariatePolicy gap;
  gap.frozen = {"PPI"};
  gap.replicated = {"COLOR"};
  CHECK_THROWS_AS(build_future_frame(toy_panel(), gap), DataError);

  CovariatePolicy twice = toy_policy();
  twice.frozen.push_back("INCOME");
  CHECK_THROWS_AS(build_future_frame(toy_panel(), twice), DataError);

  // Extra names for absent covariates are harmless.
  CovariatePolicy extra = toy_policy();
  extra.frozen.push_back("NOT.A.COLUMN");
  CHECK(build_future_frame(toy_panel(), extra).rows.size() == 4);
}

TEST_CASE("frame refuses a panel without final-period rows") {
  auto panel = toy_panel();
  panel.n_years = 3;  // no row carries year_index 3
  CHECK_THROWS_AS(build_future_frame(panel, toy_policy()), DataError);
}

TEST_CASE("predicted prices are exponentiated mixed-effect fits") {
  const auto frame = build_future_frame(toy_panel(), toy_policy());
  const auto model = toy_model();
  const auto prices = predicted_prices(model, frame, Domain{"population", 0});
  REQUIRE(prices.size() == 6);
  // Row 0: 1 + 0.12 + 0.13 + 0.1 + 0.05 + v_1 = 1.5; two copies.
  const double p0 = std::exp(1.5);
  CHECK(prices[0] == doctest::Approx(p0).epsilon(1e-14));
  CHECK(prices[1] == prices[0]);
  // Row 2 (region 2): 1 + 0.2 + 0.13 + 0.1 + 0.05 - 0.05 = 1.43.
  CHECK(prices[3] == doctest::Approx(std::exp(1.43)).epsilon(1e-14));
  CHECK(prices[3] == prices[4]);
  // Row 3 (national): 1 + 0.3 + 0.13 + 0 + 0.05 + 0.02 = 1.5.
  CHECK(prices[5] == doctest::Approx(std::exp(1.5)).epsilon(1e-14));

  const auto sub = predicted_prices(model, frame, Domain{"subpop_2", 2});
  REQUIRE(sub.size() == 2);
  CHECK(sub[0] == prices[3]);
}

TEST_CASE("plug-in forecast is the measure of the predicted prices") {
  const auto frame = build_future_frame(toy_panel(), toy_policy());
  const auto model = toy_model();
  const auto prices = predicted_prices(model, frame, Domain{"population", 0});
  for (MeasureKind kind : kAllMeasures)
    CHECK(plug_in_forecast(model, frame, kind, Domain{"population", 0}) ==
          doctest::Approx(measure(prices, kind)).epsilon(1e-14));
  CHECK_THROWS_AS(
      plug_in_forecast(model, frame, MeasureKind::SD, Domain{"subpop_3", 3}),
      DataError);
}

TEST_CASE("forecast table is domain-major over the measure list") {
  const auto frame = build_future_frame(toy_panel(), toy_policy());
  const auto model = toy_model();
  const std::vector<Domain> domains = {Domain{"population", 0},
                                       Domain{"subpop_1", 1}};
  const std::vector<MeasureKind> measures(kAllMeasures.begin(),
                                          kAllMeasures.end());
  const auto table = forecast_table(model, frame, measures, domains);
  REQUIRE(table.size() == 16);
  CHECK(table[0].measure == "SD");
  CHECK(table[0].domain == "population");
  CHECK(table[0].value ==
        doctest::Approx(
            plug_in_forecast(model, frame, MeasureKind::SD,
                             Domain{"population", 0})).epsilon(1e-12));
  CHECK(table[8].domain == "subpop_1");
  // subpop_1 holds two identical units: zero dispersion, unit ratios.
  CHECK(table[8].measure == "SD");
  CHECK(table[8].value == 0.0);
  CHECK_FALSE(table[8].missing);
  CHECK(table[14].measure == "QDR");
  CHECK(table[14].value == 1.0);

  // A domain with no future units fails loudly.
  const std::vector<Domain> with_empty = {Domain{"population", 0},
                                          Domain{"subpop_3", 3}};
  CHECK_THROWS_AS(forecast_table(model, frame, measures, with_empty),
                  DataError);
}

TEST_CASE("standard policy sorts the survey roster") {
  const std::vector<std::string> columns = {
      "(Intercept)", "LOG.SQFT", "HOUSEHOLDS", "LOG.OWNER",
      "INCOME",      "PPI",      "FED",        "BEDROOMS=three_or_more",
      "YEAR=2016"};
  const auto policy = CovariatePolicy::standard(columns);
  CHECK(policy.lagged_known ==
        std::vector<std::string>{"HOUSEHOLDS", "LOG.OWNER", "INCOME"});
  CHECK(policy.frozen == std::vector<std::string>{"PPI", "FED"});
  CHECK(policy.replicated ==
        std::vector<std::string>{"LOG.SQFT", "BEDROOMS"});
}

}  // TEST_SUITE
