#include "dispcast/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "dispcast/dataio.hpp"
#include "dispcast/errors.hpp"
#include "dispcast/format.hpp"

namespace dispcast {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex16(fnv1a(buf.str()));
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(text.substr(start)));
      break;
    }
    out.push_back(trim(text.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

ordered_json spec_to_json(const SyntheticSpec& s) {
  ordered_json j;
  j["n"] = s.n;
  j["n_years"] = s.n_years;
  j["first_year"] = s.first_year;
  j["seed"] = s.seed;
  j["sigma2_v"] = s.sigma2_v;
  j["sigma2_e"] = s.sigma2_e;
  j["intercept"] = s.intercept;
  j["beta_log_sqft"] = s.beta_log_sqft;
  j["beta_households"] = s.beta_households;
  j["beta_log_owner"] = s.beta_log_owner;
  j["beta_income"] = s.beta_income;
  j["beta_ppi"] = s.beta_ppi;
  j["beta_fed"] = s.beta_fed;
  j["year_trend"] = s.year_trend;
  j["year_bump"] = s.year_bump;
  j["last_year_share"] = s.last_year_share;
  j["weight_log_sd"] = s.weight_log_sd;
  j["three_plus_share"] = s.three_plus_share;
  j["single_share"] = s.single_share;
  j["region_shares"] = s.region_shares;
  j["bedrooms_three_plus"] = s.bedrooms_three_plus;
  j["log_sqft_mean"] = s.log_sqft_mean;
  j["log_sqft_sd"] = s.log_sqft_sd;
  return j;
}

SyntheticSpec spec_from_json(const ordered_json& j) {
  static const std::set<std::string> known = {
      "n", "n_years", "first_year", "seed", "sigma2_v", "sigma2_e",
      "intercept", "beta_log_sqft", "beta_households", "beta_log_owner",
      "beta_income", "beta_ppi", "beta_fed", "year_trend", "year_bump",
      "last_year_share", "weight_log_sd", "three_plus_share", "single_share",
      "region_shares", "bedrooms_three_plus", "log_sqft_mean", "log_sqft_sd"};
  if (!j.is_object()) throw ConfigError("synthetic_spec must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown synthetic field: " + it.key());
  SyntheticSpec s;
  try {
    s.n = j.value("n", s.n);
    s.n_years = j.value("n_years", s.n_years);
    s.first_year = j.value("first_year", s.first_year);
    s.seed = j.value("seed", s.seed);
    s.sigma2_v = j.value("sigma2_v", s.sigma2_v);
    s.sigma2_e = j.value("sigma2_e", s.sigma2_e);
    s.intercept = j.value("intercept", s.intercept);
    s.beta_log_sqft = j.value("beta_log_sqft", s.beta_log_sqft);
    s.beta_households = j.value("beta_households", s.beta_households);
    s.beta_log_owner = j.value("beta_log_owner", s.beta_log_owner);
    s.beta_income = j.value("beta_income", s.beta_income);
    s.beta_ppi = j.value("beta_ppi", s.beta_ppi);
    s.beta_fed = j.value("beta_fed", s.beta_fed);
    s.year_trend = j.value("year_trend", s.year_trend);
    s.year_bump = j.value("year_bump", s.year_bump);
    s.last_year_share = j.value("last_year_share", s.last_year_share);
    s.weight_log_sd = j.value("weight_log_sd", s.weight_log_sd);
    s.three_plus_share = j.value("three_plus_share", s.three_plus_share);
    s.single_share = j.value("single_share", s.single_share);
    if (j.contains("region_shares"))
      s.region_shares = j.at("region_shares").get<std::array<double, 4>>();
    if (j.contains("bedrooms_three_plus"))
      s.bedrooms_three_plus =
          j.at("bedrooms_three_plus").get<std::array<double, 3>>();
    if (j.contains("log_sqft_mean"))
      s.log_sqft_mean = j.at("log_sqft_mean").get<std::array<double, 3>>();
    s.log_sqft_sd = j.value("log_sqft_sd", s.log_sqft_sd);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("bad synthetic_spec: ") + e.what());
  }
  return s;
}

std::string manifest_body(const RunConfig& c) {
  std::string out;
  auto line = [&out](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  line("use_synthetic", c.use_synthetic ? "1" : "0");
  if (c.use_synthetic)
    line("synthetic_spec", spec_to_json(c.synthetic).dump());
  else
    line("data_fingerprint", c.data_fingerprint);
  line("binary_variables", join(c.binary_variables));
  ordered_json scenarios = ordered_json::array();
  for (const ShockScenario& s : c.resolved_scenarios)
    scenarios.push_back(ordered_json::parse(scenario_to_json(s)));
  line("scenarios", scenarios.dump());
  line("iterations", std::to_string(c.iterations));
  line("seed", std::to_string(c.seed));
  {
    std::vector<std::string> names;
    for (MeasureKind k : c.measures) names.push_back(to_string(k));
    line("measures", join(names));
  }
  line("domains", join(c.domain_names));
  {
    std::vector<std::string> orders;
    for (double o : c.qape_orders) orders.push_back(str17(o));
    line("qape", join(orders));
  }
  line("refit", c.refit ? "1" : "0");
  line("max_failure_rate", str17(c.max_failure_rate));
  line("thresholds",
       str17(c.thresholds.moderate) + "," + str17(c.thresholds.high));
  line("quantile_method", to_string(c.measure_method));
  line("reml", str17(c.reml.tol) + "," + std::to_string(c.reml.max_iter) +
                   "," + str17(c.reml.rho_max));
  return out;
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad manifest value for " + key + ": " + value);
  }
}

long parse_long(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad manifest value for " + key + ": " + value);
  }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad manifest value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "0") return false;
  if (value == "1") return true;
  throw ConfigError("bad manifest value for " + key + ": " + value);
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp(path);
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " into place");
}

std::string forecasts_csv(const std::vector<ForecastCell>& cells) {
  std::string out = "measure,domain,value\n";
  for (const ForecastCell& cell : cells) {
    out += cell.measure;
    out += ',';
    out += cell.domain;
    out += ',';
    if (!cell.missing) out += str17(cell.value);
    out += '\n';
  }
  return out;
}

std::string errors_csv(const ErrorPanel& panel) {
  std::string out =
      "iteration,branch,measure,domain,theta_star,theta_hat_star,error\n";
  for (long b = 0; b < panel.iterations(); ++b) {
    if (panel.excluded(b)) continue;
    for (int m = 0; m < static_cast<int>(panel.measures().size()); ++m) {
      for (int d = 0; d < static_cast<int>(panel.domains().size()); ++d) {
        const BootstrapCell& cell = panel.at(b, m, d);
        out += std::to_string(b);
        out += ',';
        out += std::to_string(panel.branch(b));
        out += ',';
        out += panel.measures()[m];
        out += ',';
        out += panel.domains()[d];
        out += ',';
        if (!cell.missing) {
          out += str17(cell.theta_star);
          out += ',';
          out += str17(cell.theta_hat_star);
          out += ',';
          out += str17(cell.error());
        } else {
          out += ",,";
        }
        out += '\n';
      }
    }
  }
  return out;
}

std::string accuracy_csv(const AccuracyReport& report) {
  std::string out = "scenario,measure,domain,n_effective,rmse";
  for (double o : report.qape_orders) out += ",qape_" + strg(o);
  out += '\n';
  for (const AccuracyRow& row : report.rows) {
    out += row.scenario;
    out += ',';
    out += row.measure;
    out += ',';
    out += row.domain;
    out += ',';
    out += std::to_string(row.cell.n_effective);
    out += ',';
    if (!row.cell.missing) out += str17(row.cell.rmse);
    for (std::size_t i = 0; i < report.qape_orders.size(); ++i) {
      out += ',';
      if (!row.cell.missing) out += str17(row.cell.qape[i]);
    }
    out += '\n';
  }
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out =
      "scenario,measure,domain,statistic,value,reference,ratio,classification\n";
  for (const ComparisonRow& row : rows) {
    out += row.scenario;
    out += ',';
    out += row.measure;
    out += ',';
    out += row.domain;
    out += ',';
    out += row.statistic;
    out += ',';
    out += str17(row.value);
    out += ',';
    if (row.classification != "missing_reference") {
      out += str17(row.reference);
      out += ',';
      out += str17(row.ratio);
    } else {
      out += ',';
    }
    out += ',';
    out += row.classification;
    out += '\n';
  }
  return out;
}

std::string plot_csv(const AccuracyReport& report,
                     const std::vector<std::string>& scenarios,
                     const std::string& statistic, int qape_index) {
  std::string out = "measure,domain";
  for (const std::string& s : scenarios) out += "," + s;
  out += '\n';
  for (const AccuracyRow& row : report.rows) {
    if (row.scenario != scenarios.front()) continue;
    out += row.measure;
    out += ',';
    out += row.domain;
    for (const std::string& s : scenarios) {
      out += ',';
      const AccuracyRow* cell = report.find(s, row.measure, row.domain);
      if (cell == nullptr || cell->cell.missing) continue;
      out += statistic == "rmse" ? str17(cell->cell.rmse)
                                 : str17(cell->cell.qape[qape_index]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("bad synthetic spec JSON: ") + e.what());
  }
  return spec_from_json(j);
}

std::string synthetic_spec_to_json(const SyntheticSpec& spec) {
  return spec_to_json(spec).dump();
}

RunConfig normalize(const RunConfig& config) {
  RunConfig c = config;
  if (c.use_synthetic) {
    if (!c.data_path.empty())
      throw ConfigError(
          "both a data file and the synthetic generator are configured");
    c.data_fingerprint.clear();
  } else {
    if (c.data_path.empty()) throw ConfigError("no data source configured");
    const std::string fp = file_fingerprint(c.data_path);
    if (!c.data_fingerprint.empty() && c.data_fingerprint != fp)
      throw DataError("data file does not match the manifest fingerprint: " +
                      c.data_path);
    c.data_fingerprint = fp;
  }
  if (c.resolved_scenarios.empty())
    c.resolved_scenarios = parse_scenario_list(join(c.scenario_specs));
  if (c.resolved_scenarios.empty())
    throw ConfigError("no scenarios configured");
  {
    std::set<std::string> seen;
    for (const ShockScenario& s : c.resolved_scenarios) {
      if (s.name.empty()) throw ConfigError("scenario without a name");
      if (!seen.insert(s.name).second)
        throw ConfigError("duplicate scenario name: " + s.name);
    }
  }
  if (c.iterations < 1) throw ConfigError("iterations must be positive");
  if (c.measures.empty()) throw ConfigError("no measures configured");
  {
    std::set<int> seen;
    for (MeasureKind m : c.measures)
      if (!seen.insert(static_cast<int>(m)).second)
        throw ConfigError(std::string("duplicate measure: ") + to_string(m));
  }
  if (c.domain_names.empty())
    for (const Domain& d : default_domains()) c.domain_names.push_back(d.name);
  {
    std::set<std::string> seen;
    for (const std::string& d : c.domain_names) {
      domain_from_string(d);  // throws on unknown names
      if (!seen.insert(d).second) throw ConfigError("duplicate domain: " + d);
    }
  }
  if (c.qape_orders.empty()) throw ConfigError("no QAPE orders configured");
  for (double o : c.qape_orders)
    if (!(o > 0.0 && o < 1.0))
      throw ConfigError("QAPE order outside (0,1): " + strg(o));
  if (!(c.max_failure_rate >= 0.0 && c.max_failure_rate <= 1.0))
    throw ConfigError("max_failure_rate outside [0,1]");
  if (!(c.thresholds.moderate >= 1.0) ||
      !(c.thresholds.high >= c.thresholds.moderate))
    throw ConfigError("comparison thresholds must satisfy 1 <= moderate <= high");
  if (c.workers < 1) throw ConfigError("workers must be positive");
  return c;
}

std::string config_hash(const RunConfig& config) {
  return hex16(fnv1a(manifest_body(normalize(config))));
}

std::string manifest_text(const RunConfig& config) {
  const RunConfig c = normalize(config);
  const std::string body = manifest_body(c);
  std::string out = "dispcast_manifest=1\n";
  if (!c.use_synthetic) out += "data=" + c.data_path + "\n";
  out += "config_hash=" + hex16(fnv1a(body)) + "\n";
  out += body;
  return out;
}

RunConfig config_from_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  RunConfig c;
  c.scenario_specs.clear();
  std::string stored_hash;
  std::string body;
  std::map<std::string, std::string> fields;
  bool saw_version = false;
  bool in_body = false;

  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("bad manifest line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (!saw_version) {
      if (key != "dispcast_manifest" || value != "1")
        throw ConfigError("not a manifest: " + path);
      saw_version = true;
      continue;
    }
    if (!in_body) {
      if (key == "data") {
        c.data_path = value;
        continue;
      }
      if (key == "config_hash") {
        stored_hash = value;
        in_body = true;
        continue;
      }
      throw ConfigError("unknown manifest key: " + key);
    }
    body += line;
    body += '\n';
    if (!fields.emplace(key, value).second)
      throw ConfigError("duplicate manifest key: " + key);
  }
  if (!saw_version) throw ConfigError("not a manifest: " + path);
  if (stored_hash.empty()) throw ConfigError("manifest has no config_hash");
  if (hex16(fnv1a(body)) != stored_hash)
    throw ConfigError("manifest config hash mismatch");

  static const std::set<std::string> known = {
      "use_synthetic", "synthetic_spec", "data_fingerprint",
      "binary_variables", "scenarios", "iterations", "seed", "measures",
      "domains", "qape", "refit", "max_failure_rate", "thresholds",
      "quantile_method", "reml"};
  for (const auto& kv : fields)
    if (!known.count(kv.first))
      throw ConfigError("unknown manifest key: " + kv.first);
  auto need = [&fields, &path](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end())
      throw ConfigError("manifest is missing " + key + ": " + path);
    return it->second;
  };

  c.use_synthetic = parse_bool(need("use_synthetic"), "use_synthetic");
  if (c.use_synthetic) {
    c.data_path.clear();
    try {
      c.synthetic = spec_from_json(ordered_json::parse(need("synthetic_spec")));
    } catch (const ordered_json::exception& e) {
      throw ConfigError(std::string("bad synthetic_spec: ") + e.what());
    }
  } else {
    if (c.data_path.empty())
      throw ConfigError("manifest is missing the data path: " + path);
    c.data_fingerprint = need("data_fingerprint");
  }
  c.binary_variables = split(need("binary_variables"));
  {
    ordered_json arr;
    try {
      arr = ordered_json::parse(need("scenarios"));
    } catch (const ordered_json::exception& e) {
      throw ConfigError(std::string("bad scenarios entry: ") + e.what());
    }
    if (!arr.is_array()) throw ConfigError("scenarios entry must be an array");
    for (const auto& elem : arr)
      c.resolved_scenarios.push_back(scenario_from_json(elem.dump()));
  }
  c.iterations = parse_long(need("iterations"), "iterations");
  c.seed = parse_u64(need("seed"), "seed");
  c.measures.clear();
  for (const std::string& name : split(need("measures")))
    c.measures.push_back(measure_from_string(name));
  c.domain_names = split(need("domains"));
  c.qape_orders.clear();
  for (const std::string& o : split(need("qape")))
    c.qape_orders.push_back(parse_double(o, "qape"));
  c.refit = parse_bool(need("refit"), "refit");
  c.max_failure_rate = parse_double(need("max_failure_rate"), "max_failure_rate");
  {
    const std::vector<std::string> parts = split(need("thresholds"));
    if (parts.size() != 2)
      throw ConfigError("thresholds entry must hold two values");
    c.thresholds.moderate = parse_double(parts[0], "thresholds");
    c.thresholds.high = parse_double(parts[1], "thresholds");
  }
  c.measure_method = quantile_method_from_string(need("quantile_method"));
  {
    const std::vector<std::string> parts = split(need("reml"));
    if (parts.size() != 3) throw ConfigError("reml entry must hold three values");
    c.reml.tol = parse_double(parts[0], "reml");
    c.reml.max_iter = static_cast<int>(parse_long(parts[1], "reml"));
    c.reml.rho_max = parse_double(parts[2], "reml");
  }
  return c;
}

RunResult run_pipeline(const RunConfig& raw) {
  const RunConfig config = normalize(raw);

  IngestOptions iopts;
  iopts.binary_variables = config.binary_variables;
  RawDataset data;
  SyntheticTruth truth;
  bool have_truth = false;
  if (config.use_synthetic) {
    SyntheticData gen = generate_synthetic(config.synthetic);
    data = ingest(gen.data, iopts);
    truth = std::move(gen.truth);
    have_truth = true;
  } else {
    data = ingest(load_csv(config.data_path), iopts);
  }

  const TransactionPanel panel = make_panel(data);
  FittedModel model = fit_reml(panel, config.reml);

  CovariatePolicy policy = CovariatePolicy::standard(panel.design_columns);
  if (have_truth) policy.future_values = truth.next_period_lagged;
  const FutureFrame frame = build_future_frame(panel, policy);

  std::vector<Domain> domains;
  for (const std::string& name : config.domain_names)
    domains.push_back(domain_from_string(name));

  RunResult result;
  result.model = model;
  result.future_units = frame.total_units;
  result.forecasts = forecast_table(model, frame, config.measures, domains,
                                    config.measure_method);

  std::vector<ErrorPanel> panels;
  panels.reserve(config.resolved_scenarios.size());
  for (const ShockScenario& scenario : config.resolved_scenarios) {
    BootstrapPlan plan;
    plan.iterations = config.iterations;
    plan.seed = config.seed;
    plan.scenario = scenario;
    plan.measures = config.measures;
    plan.domains = domains;
    plan.workers = config.workers;
    plan.refit = config.refit;
    plan.max_failure_rate = config.max_failure_rate;
    plan.measure_method = config.measure_method;
    plan.reml = config.reml;
    panels.push_back(run_bootstrap(panel, model, frame, plan));
    result.scenario_names.push_back(scenario.name);
  }

  std::vector<std::pair<std::string, const ErrorPanel*>> refs;
  for (std::size_t i = 0; i < panels.size(); ++i)
    refs.emplace_back(result.scenario_names[i], &panels[i]);
  result.accuracy = summarize_accuracy(refs, config.qape_orders);
  result.comparisons = compare_to_reference(
      result.accuracy, result.scenario_names.front(), config.thresholds);

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir / "plots");
  write_atomic(out_dir / "forecasts.csv", forecasts_csv(result.forecasts));
  for (std::size_t i = 0; i < panels.size(); ++i)
    write_atomic(
        out_dir / ("errors_" + sanitize(result.scenario_names[i]) + ".csv"),
        errors_csv(panels[i]));
  write_atomic(out_dir / "accuracy.csv", accuracy_csv(result.accuracy));
  write_atomic(out_dir / "comparison.csv", comparison_csv(result.comparisons));
  write_atomic(out_dir / "plots" / "rmse.csv",
               plot_csv(result.accuracy, result.scenario_names, "rmse", -1));
  for (std::size_t i = 0; i < config.qape_orders.size(); ++i) {
    const std::string label = "qape_" + strg(config.qape_orders[i]);
    write_atomic(out_dir / "plots" / (label + ".csv"),
                 plot_csv(result.accuracy, result.scenario_names, label,
                          static_cast<int>(i)));
  }
  const fs::path manifest_path = out_dir / "manifest.txt";
  write_atomic(manifest_path, manifest_text(config));
  result.manifest_path = manifest_path.string();
  return result;
}

}  // namespace dispcast
