#ifndef DISPCAST_PIPELINE_HPP_
#define DISPCAST_PIPELINE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dispcast/accuracy.hpp"
#include "dispcast/bootstrap.hpp"
#include "dispcast/synthetic.hpp"

namespace dispcast {

struct RunConfig {
  // Data source: a CSV panel, or the built-in synthetic generator.
  std::string data_path;
  bool use_synthetic = false;
  SyntheticSpec synthetic;
  std::vector<std::string> binary_variables;

  // Scenario names or JSON file paths; resolved_scenarios wins when
  // non-empty (manifest replay fills it directly). The first scenario is
  // the comparison reference.
  std::vector<std::string> scenario_specs = {"s0"};
  std::vector<ShockScenario> resolved_scenarios;

  long iterations = 2000;
  std::uint64_t seed = 1;
  std::vector<MeasureKind> measures{kAllMeasures.begin(), kAllMeasures.end()};
  std::vector<std::string> domain_names;  // empty = the default domains
  std::vector<double> qape_orders = {0.5, 0.99};
  bool refit = true;
  double max_failure_rate = 0.05;
  QuantileMethod measure_method = QuantileMethod::LinearInterpolation;
  ComparisonThresholds thresholds;
  RemlOptions reml;

  // Fingerprint of the data file, filled when a manifest is written or
  // replayed; replay refuses a file that no longer matches.
  std::string data_fingerprint;

  // Runtime details; they shape neither the manifest nor any artifact, so
  // a replay may change them freely.
  int workers = 1;
  std::string out_dir = "out";
};

struct RunResult {
  FittedModel model;
  long future_units = 0;
  std::vector<ForecastCell> forecasts;
  AccuracyReport accuracy;
  std::vector<ComparisonRow> comparisons;
  std::vector<std::string> scenario_names;
  std::string manifest_path;
};

// JSON round trip for generator settings; parsing rejects unknown fields
// and keeps defaults for missing ones.
SyntheticSpec synthetic_spec_from_json(const std::string& text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);

// Canonical form: scenarios resolved, domain list spelled out, data
// fingerprint computed. Throws ConfigError on an inconsistent setup.
RunConfig normalize(const RunConfig& config);

// 64-bit FNV-1a over the canonical manifest body. Runtime details are not
// part of it.
std::string config_hash(const RunConfig& config);

// The full manifest for a run, scenario definitions inlined, so replaying
// needs no scenario files.
std::string manifest_text(const RunConfig& config);

// Rebuilds a configuration from a manifest file, verifying the stored
// configuration hash. Runtime details keep their defaults.
RunConfig config_from_manifest(const std::string& path);

// Fit, forecast, bootstrap every scenario and write the artifact set under
// out_dir: forecasts.csv, errors_<scenario>.csv, accuracy.csv,
// comparison.csv, plots/<statistic>.csv, manifest.txt (last, as the
// completion marker). Every file is written beside its final name and
// renamed into place. Identical configurations produce byte-identical
// artifacts for any worker count.
RunResult run_pipeline(const RunConfig& config);

}  // namespace dispcast

#endif  // DISPCAST_PIPELINE_HPP_
