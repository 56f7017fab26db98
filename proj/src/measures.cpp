#include "dispcast/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dispcast/errors.hpp"

namespace dispcast {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double aad_of(std::span<const double> v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += std::abs(x - m);
  return s / static_cast<double>(v.size());
}

double median_sorted(std::span<const double> sorted, QuantileMethod method) {
  return quantile_sorted(sorted, 0.5, method);
}

double mad_sorted(std::span<const double> sorted, QuantileMethod method) {
  const double med = median_sorted(sorted, method);
  std::vector<double> dev(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    dev[i] = std::abs(sorted[i] - med);
  std::sort(dev.begin(), dev.end());
  return median_sorted(dev, method);
}

}  // namespace

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::SD:
      return "SD";
    case MeasureKind::AAD:
      return "AAD";
    case MeasureKind::IQR:
      return "IQR";
    case MeasureKind::MAD:
      return "MAD";
    case MeasureKind::CV:
      return "CV";
    case MeasureKind::QCD:
      return "QCD";
    case MeasureKind::QDR:
      return "QDR";
    case MeasureKind::DDR:
      return "DDR";
  }
  return "?";
}

const char* to_string(QuantileMethod method) {
  return method == QuantileMethod::LeftInverse ? "left_inverse" : "linear";
}

MeasureKind measure_from_string(std::string_view name) {
  for (MeasureKind kind : kAllMeasures)
    if (name == to_string(kind)) return kind;
  throw ConfigError("unknown measure: " + std::string(name));
}

QuantileMethod quantile_method_from_string(std::string_view name) {
  if (name == "left_inverse") return QuantileMethod::LeftInverse;
  if (name == "linear") return QuantileMethod::LinearInterpolation;
  throw ConfigError("unknown quantile method: " + std::string(name));
}

std::size_t left_inverse_rank(double p, std::size_t n) {
  const double target = p * static_cast<double>(n);
  double k = std::ceil(target - 1e-9);
  if (k < 1.0) k = 1.0;
  if (k > static_cast<double>(n)) k = static_cast<double>(n);
  return static_cast<std::size_t>(k);
}

double quantile_sorted(std::span<const double> sorted, double p,
                       QuantileMethod method) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(p > 0.0 && p < 1.0))
    throw DataError("quantile order must lie in (0, 1)");
  if (method == QuantileMethod::LeftInverse)
    return sorted[left_inverse_rank(p, sorted.size()) - 1];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> values, double p,
                QuantileMethod method) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, p, method);
}

double measure(std::span<const double> values, MeasureKind kind,
               QuantileMethod method) {
  if (values.empty()) throw DataError("measure of an empty sample");
  const std::size_t n = values.size();
  switch (kind) {
    case MeasureKind::SD:
      if (n < 2) throw NumericalError("SD needs at least two observations");
      return sd_of(values);
    case MeasureKind::AAD:
      return aad_of(values);
    case MeasureKind::CV: {
      if (n < 2) throw NumericalError("CV needs at least two observations");
      const double m = mean_of(values);
      if (m == 0.0) throw NumericalError("CV undefined for zero mean");
      return sd_of(values) / m * 100.0;
    }
    default:
      break;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  switch (kind) {
    case MeasureKind::IQR:
      return quantile_sorted(sorted, 0.75, method) -
             quantile_sorted(sorted, 0.25, method);
    case MeasureKind::MAD:
      return mad_sorted(sorted, method);
    case MeasureKind::QCD: {
      const double q1 = quantile_sorted(sorted, 0.25, method);
      const double q3 = quantile_sorted(sorted, 0.75, method);
      if (q1 + q3 == 0.0) throw NumericalError("QCD undefined: Q1 + Q3 = 0");
      return (q3 - q1) / (q3 + q1) * 100.0;
    }
    case MeasureKind::QDR: {
      const double q1 = quantile_sorted(sorted, 0.25, method);
      if (q1 == 0.0) throw NumericalError("QDR undefined: Q1 = 0");
      return quantile_sorted(sorted, 0.75, method) / q1;
    }
    case MeasureKind::DDR: {
      const double d1 = quantile_sorted(sorted, 0.10, method);
      if (d1 == 0.0) throw NumericalError("DDR undefined: D1 = 0");
      return quantile_sorted(sorted, 0.90, method) / d1;
    }
    default:
      break;
  }
  throw NumericalError("unhandled measure");
}

std::array<MeasureValue, kNumMeasures> all_measures_sorted(
    std::span<const double> sorted, QuantileMethod method) {
  if (sorted.empty()) throw DataError("measure of an empty sample");
  std::array<MeasureValue, kNumMeasures> out;
  const std::size_t n = sorted.size();
  const double m = mean_of(sorted);

  auto set = [&out](MeasureKind kind, double value) {
    out[static_cast<int>(kind)] = MeasureValue{value, false};
  };

  if (n >= 2) {
    const double sd = sd_of(sorted);
    set(MeasureKind::SD, sd);
    if (m != 0.0) set(MeasureKind::CV, sd / m * 100.0);
  }
  set(MeasureKind::AAD, aad_of(sorted));

  const double q1 = quantile_sorted(sorted, 0.25, method);
  const double q3 = quantile_sorted(sorted, 0.75, method);
  const double d1 = quantile_sorted(sorted, 0.10, method);
  const double d9 = quantile_sorted(sorted, 0.90, method);
  set(MeasureKind::IQR, q3 - q1);
  set(MeasureKind::MAD, mad_sorted(sorted, method));
  if (q1 + q3 != 0.0) set(MeasureKind::QCD, (q3 - q1) / (q3 + q1) * 100.0);
  if (q1 != 0.0) set(MeasureKind::QDR, q3 / q1);
  if (d1 != 0.0) set(MeasureKind::DDR, d9 / d1);
  return out;
}

}  // namespace dispcast
