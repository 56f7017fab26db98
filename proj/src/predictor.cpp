#include "dispcast/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dispcast/errors.hpp"

namespace dispcast {

namespace {

struct ParsedColumn {
  std::string parent;  // source covariate, empty for the intercept
  bool log_transform = false;
  bool dummy = false;
  bool year_block = false;
};

ParsedColumn parse_column(const std::string& name) {
  ParsedColumn out;
  if (name == "(Intercept)") return out;
  if (name.rfind("YEAR=", 0) == 0) {
    out.year_block = true;
    return out;
  }
  const std::size_t eq = name.find('=');
  if (eq != std::string::npos) {
    out.parent = name.substr(0, eq);
    out.dummy = true;
    return out;
  }
  if (name.rfind("LOG(", 0) == 0 && name.back() == ')') {
    out.parent = name.substr(4, name.size() - 5);
    out.log_transform = true;
    return out;
  }
  out.parent = name;
  return out;
}

enum class Treatment { Replicate, Freeze, Lag, Structural };

}  // namespace

CovariatePolicy CovariatePolicy::standard(
    const std::vector<std::string>& columns) {
  static const std::set<std::string> kLagged = {"HOUSEHOLDS", "LOG.OWNER",
                                                "INCOME"};
  static const std::set<std::string> kFrozen = {"PPI", "FED"};
  CovariatePolicy policy;
  std::set<std::string> seen;
  for (const std::string& name : columns) {
    const ParsedColumn parsed = parse_column(name);
    if (parsed.parent.empty() || !seen.insert(parsed.parent).second) continue;
    if (kLagged.count(parsed.parent))
      policy.lagged_known.push_back(parsed.parent);
    else if (kFrozen.count(parsed.parent))
      policy.frozen.push_back(parsed.parent);
    else
      policy.replicated.push_back(parsed.parent);
  }
  return policy;
}

long FutureFrame::units_in(const Domain& domain) const {
  long total = 0;
  for (const FutureRow& row : rows)
    if (domain.contains(row.subpopulation)) total += row.copies;
  return total;
}

FutureFrame build_future_frame(const TransactionPanel& panel,
                               const CovariatePolicy& policy) {
  panel.validate();
  const long n = panel.rows();
  const int p = panel.params();

  std::vector<long> base_rows;
  int base_year = 0;
  for (long i = 0; i < n; ++i) {
    if (panel.year_index[i] != panel.n_years) continue;
    base_rows.push_back(i);
    base_year = panel.year_label[i];
  }
  if (base_rows.empty())
    throw DataError("panel has no records in its final period");

  // Policy coverage: every covariate in exactly one list.
  std::map<std::string, Treatment> treatment;
  auto claim = [&treatment](const std::vector<std::string>& names,
                            Treatment t) {
    for (const std::string& name : names) {
      if (treatment.count(name))
        throw DataError("covariate policy lists " + name + " twice");
      treatment[name] = t;
    }
  };
  claim(policy.lagged_known, Treatment::Lag);
  claim(policy.frozen, Treatment::Freeze);
  claim(policy.replicated, Treatment::Replicate);

  std::vector<ParsedColumn> parsed(p);
  std::string uncovered;
  for (int j = 0; j < p; ++j) {
    parsed[j] = parse_column(panel.design_columns[j]);
    if (parsed[j].parent.empty() || parsed[j].year_block) continue;
    if (!treatment.count(parsed[j].parent) &&
        uncovered.find(parsed[j].parent) == std::string::npos)
      uncovered += (uncovered.empty() ? "" : ", ") + parsed[j].parent;
  }
  if (!uncovered.empty())
    throw DataError("covariate policy does not cover: " + uncovered);

  // Final-period column means, global and per region, for frozen values
  // and for lagged covariates whose future value was not supplied.
  Eigen::VectorXd global_mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd region_mean = Eigen::MatrixXd::Zero(kNumRegions, p);
  Eigen::VectorXd region_n = Eigen::VectorXd::Zero(kNumRegions);
  for (long i : base_rows) {
    global_mean += panel.design.row(i).transpose();
    region_mean.row(panel.region[i] - 1) += panel.design.row(i);
    region_n[panel.region[i] - 1] += 1.0;
  }
  global_mean /= static_cast<double>(base_rows.size());
  for (int d = 0; d < kNumRegions; ++d)
    if (region_n[d] > 0.0) region_mean.row(d) /= region_n[d];

  FutureFrame frame;
  frame.columns = panel.design_columns;
  frame.base_year = base_year;
  frame.rows.reserve(base_rows.size());
  for (long i : base_rows) {
    FutureRow row;
    row.region = panel.region[i];
    row.subpopulation = panel.subpopulation[i];
    row.sections_class = panel.sections_class[i];
    row.bedrooms_class = panel.bedrooms_class[i];
    row.copies = std::max<long>(1, std::llround(panel.weight[i]));
    row.x = panel.design.row(i).transpose();
    for (int j = 0; j < p; ++j) {
      const ParsedColumn& col = parsed[j];
      if (col.parent.empty() || col.year_block) continue;
      switch (treatment.at(col.parent)) {
        case Treatment::Replicate:
          break;
        case Treatment::Freeze:
          row.x[j] = global_mean[j];
          break;
        case Treatment::Lag: {
          bool supplied = false;
          if (!col.dummy) {
            const auto var = policy.future_values.find(col.parent);
            if (var != policy.future_values.end()) {
              const auto reg = var->second.find(row.region);
              if (reg != var->second.end()) {
                row.x[j] =
                    col.log_transform ? std::log(reg->second) : reg->second;
                supplied = true;
              }
            }
          }
          // No supplied value: carry the region's final-period level.
          if (!supplied) row.x[j] = region_mean(row.region - 1, j);
          break;
        }
        case Treatment::Structural:
          break;
      }
    }
    frame.rows.push_back(std::move(row));
    frame.total_units += frame.rows.back().copies;
  }
  return frame;
}

std::vector<double> predicted_prices(const FittedModel& model,
                                     const FutureFrame& frame,
                                     const Domain& domain) {
  std::vector<double> prices;
  for (const FutureRow& row : frame.rows) {
    if (!domain.contains(row.subpopulation)) continue;
    double eta = row.x.dot(model.beta);
    if (model.v_hat.size() >= static_cast<long>(row.region))
      eta += model.v_hat[row.region - 1];
    const double price = std::exp(eta);
    prices.insert(prices.end(), row.copies, price);
  }
  return prices;
}

double plug_in_forecast(const FittedModel& model, const FutureFrame& frame,
                        MeasureKind kind, const Domain& domain,
                        QuantileMethod method) {
  std::vector<double> prices = predicted_prices(model, frame, domain);
  if (prices.empty())
    throw DataError("no future units in domain " + domain.name);
  return measure(prices, kind, method);
}

std::vector<ForecastCell> forecast_table(const FittedModel& model,
                                         const FutureFrame& frame,
                                         const std::vector<MeasureKind>& measures,
                                         const std::vector<Domain>& domains,
                                         QuantileMethod method) {
  std::vector<ForecastCell> out;
  for (const Domain& domain : domains) {
    std::vector<double> prices = predicted_prices(model, frame, domain);
    if (prices.empty())
      throw DataError("no future units in domain " + domain.name);
    std::sort(prices.begin(), prices.end());
    const auto values = all_measures_sorted(prices, method);
    for (MeasureKind kind : measures) {
      const MeasureValue& v = values[static_cast<int>(kind)];
      out.push_back({to_string(kind), domain.name, v.value, v.missing});
    }
  }
  return out;
}

}  // namespace dispcast
