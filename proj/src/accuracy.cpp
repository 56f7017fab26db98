#include "dispcast/accuracy.hpp"

#include <algorithm>
#include <cmath>

#include "dispcast/errors.hpp"
#include "dispcast/format.hpp"

namespace dispcast {

double rmse(std::span<const double> errors) {
  if (errors.empty()) throw DataError("RMSE of an empty error set");
  double ss = 0.0;
  for (double e : errors) ss += e * e;
  return std::sqrt(ss / static_cast<double>(errors.size()));
}

double qape(std::span<const double> errors, double p) {
  if (errors.empty()) throw DataError("QAPE of an empty error set");
  std::vector<double> abs_errors(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i)
    abs_errors[i] = std::abs(errors[i]);
  std::sort(abs_errors.begin(), abs_errors.end());
  return quantile_sorted(abs_errors, p, QuantileMethod::LeftInverse);
}

const AccuracyRow* AccuracyReport::find(const std::string& scenario,
                                        const std::string& measure,
                                        const std::string& domain) const {
  for (const AccuracyRow& row : rows)
    if (row.scenario == scenario && row.measure == measure &&
        row.domain == domain)
      return &row;
  return nullptr;
}

AccuracyReport summarize_accuracy(
    const std::vector<std::pair<std::string, const ErrorPanel*>>& panels,
    std::vector<double> qape_orders) {
  AccuracyReport report;
  report.qape_orders = std::move(qape_orders);
  for (const auto& [scenario, panel] : panels) {
    for (std::size_t m = 0; m < panel->measures().size(); ++m) {
      for (std::size_t d = 0; d < panel->domains().size(); ++d) {
        AccuracyRow row;
        row.scenario = scenario;
        row.measure = panel->measures()[m];
        row.domain = panel->domains()[d];
        const std::vector<double> errors =
            panel->errors(static_cast<int>(m), static_cast<int>(d));
        row.cell.n_effective = static_cast<long>(errors.size());
        if (!errors.empty()) {
          row.cell.missing = false;
          row.cell.rmse = rmse(errors);
          for (double p : report.qape_orders)
            row.cell.qape.push_back(qape(errors, p));
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

std::vector<ComparisonRow> compare_to_reference(
    const AccuracyReport& report, const std::string& reference_scenario,
    const ComparisonThresholds& thresholds) {
  std::vector<ComparisonRow> out;
  auto classify = [&thresholds](double ratio) -> std::string {
    if (ratio < thresholds.moderate) return "neutral";
    if (ratio < thresholds.high) return "moderate";
    return "high";
  };
  for (const AccuracyRow& row : report.rows) {
    if (row.scenario == reference_scenario) continue;
    const AccuracyRow* ref =
        report.find(reference_scenario, row.measure, row.domain);
    auto push = [&](const std::string& stat, double value,
                    const double* reference) {
      ComparisonRow cmp;
      cmp.scenario = row.scenario;
      cmp.measure = row.measure;
      cmp.domain = row.domain;
      cmp.statistic = stat;
      cmp.value = value;
      if (!reference || *reference == 0.0) {
        cmp.classification = "missing_reference";
      } else {
        cmp.reference = *reference;
        cmp.ratio = value / *reference;
        cmp.classification = classify(cmp.ratio);
      }
      out.push_back(std::move(cmp));
    };
    if (row.cell.missing) continue;
    const bool ref_ok = ref && !ref->cell.missing;
    const double ref_rmse = ref_ok ? ref->cell.rmse : 0.0;
    push("rmse", row.cell.rmse, ref_ok ? &ref_rmse : nullptr);
    for (std::size_t q = 0; q < report.qape_orders.size(); ++q) {
      const double ref_q = ref_ok ? ref->cell.qape[q] : 0.0;
      push("qape_" + strg(report.qape_orders[q]), row.cell.qape[q],
           ref_ok ? &ref_q : nullptr);
    }
  }
  return out;
}

}  // namespace dispcast
