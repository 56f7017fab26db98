#ifndef DISPCAST_ACCURACY_HPP_
#define DISPCAST_ACCURACY_HPP_

#include <span>
#include <string>
#include <vector>

#include "dispcast/bootstrap.hpp"

namespace dispcast {

// Root mean squared prediction error. Throws DataError on an empty set.
double rmse(std::span<const double> errors);

// Quantile of absolute prediction error at order p, always the left
// inverse of the ECDF (an order statistic, never interpolated).
double qape(std::span<const double> errors, double p);

struct AccuracyCell {
  double rmse = 0.0;
  std::vector<double> qape;  // one per requested order
  long n_effective = 0;
  bool missing = true;
};

struct AccuracyRow {
  std::string scenario;
  std::string measure;
  std::string domain;
  AccuracyCell cell;
};

struct AccuracyReport {
  std::vector<double> qape_orders;
  std::vector<AccuracyRow> rows;

  const AccuracyRow* find(const std::string& scenario,
                          const std::string& measure,
                          const std::string& domain) const;
};

// Accuracy table over several scenario runs that share measure and domain
// layouts.
AccuracyReport summarize_accuracy(
    const std::vector<std::pair<std::string, const ErrorPanel*>>& panels,
    std::vector<double> qape_orders);

struct ComparisonThresholds {
  double moderate = 1.15;
  double high = 2.0;
};

struct ComparisonRow {
  std::string scenario;
  std::string measure;
  std::string domain;
  std::string statistic;  // "rmse" or "qape_<order>"
  double value = 0.0;
  double reference = 0.0;
  double ratio = 0.0;
  std::string classification;  // neutral | moderate | high | missing_reference
};

// Each non-reference cell against the same cell under the reference
// scenario: neutral below the moderate threshold, high beyond the high one.
std::vector<ComparisonRow> compare_to_reference(
    const AccuracyReport& report, const std::string& reference_scenario,
    const ComparisonThresholds& thresholds = {});

}  // namespace dispcast

#endif  // DISPCAST_ACCURACY_HPP_
