#ifndef DISPCAST_SYNTHETIC_HPP_
#define DISPCAST_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dispcast/dataio.hpp"

namespace dispcast {

// Synthetic manufactured-home transaction panel: five region blocks, nine
// sale years, the survey covariate roster, lognormal survey weights and a
// log-linear price process with region intercepts. The defaults keep the
// design spread of log prices large relative to the residual noise, so
// forecast errors are driven by sampling fluctuation rather than by the
// back-transform gap of the plug-in predictor.
struct SyntheticSpec {
  long n = 25561;
  int n_years = 9;
  int first_year = 2015;
  std::uint64_t seed = 20250819;

  double sigma2_v = 0.04;    // region intercept variance
  double sigma2_e = 0.0012;  // residual variance of log price

  double intercept = 1.5;
  double beta_log_sqft = 1.2;
  double beta_households = 0.05;
  double beta_log_owner = 0.10;
  double beta_income = 0.004;
  double beta_ppi = 0.004;
  double beta_fed = 0.02;
  double year_trend = 0.045;  // per year on log price
  double year_bump = 0.06;    // extra growth per year from the 7th year on

  // Final-year share of transactions; earlier years split the rest evenly.
  // Kept small so the forecast-target cross-section stays noisy enough that
  // shock-free dispersion estimates dominate the plug-in back-transform gap.
  double last_year_share = 0.015;
  double weight_log_sd = 0.35;

  // Composition: three-or-more-section share, single share among one- and
  // two-section homes, and region shares for those homes.
  double three_plus_share = 0.12;
  double single_share = 0.59;
  std::array<double, 4> region_shares = {0.19, 0.24, 0.35, 0.22};

  // P(three or more bedrooms | sections class).
  std::array<double, 3> bedrooms_three_plus = {0.05, 0.20, 0.50};

  // LOG.SQFT location by sections class and common spread.
  std::array<double, 3> log_sqft_mean = {6.7, 7.5, 8.1};
  double log_sqft_sd = 0.45;
};

struct SyntheticTruth {
  std::map<std::string, double> beta;  // by design column name
  double sigma2_v = 0.0;
  double sigma2_e = 0.0;
  std::array<double, 5> region_effect = {};
  // Realized next-period values of the lagged covariates, by column then
  // region code; feed these to CovariatePolicy::future_values.
  std::map<std::string, std::map<int, double>> next_period_lagged;
};

struct SyntheticData {
  RawDataset data;
  SyntheticTruth truth;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace dispcast

#endif  // DISPCAST_SYNTHETIC_HPP_
