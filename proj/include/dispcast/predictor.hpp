#ifndef DISPCAST_PREDICTOR_HPP_
#define DISPCAST_PREDICTOR_HPP_

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dispcast/lmm.hpp"
#include "dispcast/measures.hpp"
#include "dispcast/panel.hpp"

namespace dispcast {

// How each covariate extends one period past the panel. The three lists
// must partition the non-structural covariates that appear in the design.
struct CovariatePolicy {
  // Published with a one-period lag, so the out-of-panel value is knowable;
  // values come from future_values, falling back to frozen when absent.
  std::vector<std::string> lagged_known;
  // Held at their final-period mean.
  std::vector<std::string> frozen;
  // Copied from the record being replicated.
  std::vector<std::string> replicated;
  // Known future values for lagged covariates: column -> region code -> value.
  std::map<std::string, std::map<int, double>> future_values;

  // The standard assignment for the survey roster: HOUSEHOLDS, LOG.OWNER
  // and INCOME lagged; PPI and FED frozen; everything else replicated.
  static CovariatePolicy standard(const std::vector<std::string>& columns);
};

// One future-period design row, produced by replicating a final-period
// record round(weight) times (floored at one copy).
struct FutureRow {
  Eigen::VectorXd x;
  int region = 0;
  int subpopulation = 0;
  int sections_class = 0;
  int bedrooms_class = 0;
  long copies = 0;  // replication count of the source record
};

struct FutureFrame {
  std::vector<FutureRow> rows;  // one entry per source record
  long total_units = 0;         // sum of copies = N_T
  std::vector<std::string> columns;
  int base_year = 0;

  long units_in(const Domain& domain) const;
};

// Builds the future-period population frame from the final panel period.
// Design columns follow the panel; the year-indicator block keeps the
// final period's pattern, since the design has no column for a period it
// never observed. Throws DataError when the panel has no final-period
// records or the policy does not cover the design's covariates.
FutureFrame build_future_frame(const TransactionPanel& panel,
                               const CovariatePolicy& policy);

// Predicted unit-level prices exp(x'beta + v_region) for every replicated
// unit in the domain, in frame order.
std::vector<double> predicted_prices(const FittedModel& model,
                                     const FutureFrame& frame,
                                     const Domain& domain);

// Plug-in forecast: the measure evaluated on the predicted prices of the
// domain. Throws DataError when the domain holds no future units.
double plug_in_forecast(const FittedModel& model, const FutureFrame& frame,
                        MeasureKind kind, const Domain& domain,
                        QuantileMethod method = QuantileMethod::LinearInterpolation);

struct ForecastCell {
  std::string measure;
  std::string domain;
  double value = 0.0;
  bool missing = true;
};

// The full measure x domain forecast table.
std::vector<ForecastCell> forecast_table(
    const FittedModel& model, const FutureFrame& frame,
    const std::vector<MeasureKind>& measures, const std::vector<Domain>& domains,
    QuantileMethod method = QuantileMethod::LinearInterpolation);

}  // namespace dispcast

#endif  // DISPCAST_PREDICTOR_HPP_
