#ifndef DISPCAST_MEASURES_HPP_
#define DISPCAST_MEASURES_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dispcast {

enum class QuantileMethod {
  LeftInverse,          // inf{x : ECDF(x) >= p}, an order statistic
  LinearInterpolation,  // interpolation between order statistics (R type 7)
};

enum class MeasureKind { SD, AAD, IQR, MAD, CV, QCD, QDR, DDR };

inline constexpr int kNumMeasures = 8;
inline constexpr std::array<MeasureKind, kNumMeasures> kAllMeasures = {
    MeasureKind::SD,  MeasureKind::AAD, MeasureKind::IQR, MeasureKind::MAD,
    MeasureKind::CV,  MeasureKind::QCD, MeasureKind::QDR, MeasureKind::DDR};

const char* to_string(MeasureKind kind);
const char* to_string(QuantileMethod method);
MeasureKind measure_from_string(std::string_view name);
QuantileMethod quantile_method_from_string(std::string_view name);

// Rank of the left-inverse p-quantile in a sample of size n, 1-based.
// Smallest k with k/n >= p; the epsilon guard keeps p*n from landing a hair
// above an integer it mathematically equals (e.g. 0.1 * 10 > 1 in doubles).
std::size_t left_inverse_rank(double p, std::size_t n);

// Quantile of an ascending-sorted sample. Throws DataError on an empty
// sample or p outside (0, 1).
double quantile_sorted(std::span<const double> sorted, double p,
                       QuantileMethod method);

// Convenience overload for unsorted data (copies and sorts).
double quantile(std::span<const double> values, double p,
                QuantileMethod method);

// One dispersion measure of an unsorted sample. Quantile-based measures use
// `method`. Throws DataError on empty input and NumericalError when the
// measure is undefined for the sample (SD and CV need n >= 2, CV and the
// ratio measures need nonzero denominators).
double measure(std::span<const double> values, MeasureKind kind,
               QuantileMethod method = QuantileMethod::LinearInterpolation);

struct MeasureValue {
  double value = 0.0;
  bool missing = true;
};

// All eight measures from a single ascending-sorted pass. Measures that are
// undefined for the sample come back missing instead of throwing; an empty
// sample still throws.
std::array<MeasureValue, kNumMeasures> all_measures_sorted(
    std::span<const double> sorted,
    QuantileMethod method = QuantileMethod::LinearInterpolation);

}  // namespace dispcast

#endif  // DISPCAST_MEASURES_HPP_
