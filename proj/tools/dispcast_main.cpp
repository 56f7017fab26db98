#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dispcast/errors.hpp"
#include "dispcast/format.hpp"
#include "dispcast/pipeline.hpp"
#include "dispcast/selection.hpp"

namespace {

int default_workers() {
  const char* env = std::getenv("DISPCAST_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t pos = 0;
    const int n = std::stoi(env, &pos);
    if (pos != std::string(env).size() || n < 1)
      throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw dispcast::ConfigError(std::string("bad DISPCAST_WORKERS value: ") +
                                env);
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(dispcast::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(dispcast::trim(cur));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dispcast::ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_run_summary(const dispcast::RunResult& result) {
  const dispcast::FittedModel& m = result.model;
  std::cout << "model: sigma2_v=" << dispcast::strg(m.sigma2_v)
            << " sigma2_e=" << dispcast::strg(m.sigma2_e)
            << (m.boundary ? " (boundary)" : "") << "\n";
  std::cout << "future units: " << result.future_units << "\n";
  std::cout << "forecast (population):";
  for (const dispcast::ForecastCell& cell : result.forecasts) {
    if (cell.domain != "population") continue;
    std::cout << ' ' << cell.measure << '='
              << (cell.missing ? std::string("NA") : dispcast::strg(cell.value));
  }
  std::cout << "\n";
  if (result.scenario_names.size() > 1) {
    std::cout << "rmse (SD, population):";
    for (const std::string& s : result.scenario_names) {
      const dispcast::AccuracyRow* row =
          result.accuracy.find(s, "SD", "population");
      std::cout << ' ' << s << '=';
      if (row != nullptr && !row->cell.missing)
        std::cout << dispcast::strg(row->cell.rmse);
      else
        std::cout << "NA";
    }
    std::cout << "\n";
  }
  std::cout << "manifest: " << result.manifest_path << "\n";
}

void print_selection_trace(const dispcast::SelectionTrace& trace) {
  std::cout << "form choices:\n";
  for (const dispcast::FormChoice& f : trace.forms)
    std::cout << "  " << f.column << (f.log_form ? " -> log" : " -> raw")
              << " (r_raw=" << dispcast::strg(f.r_raw)
              << ", r_log=" << dispcast::strg(f.r_log) << ")\n";
  for (const dispcast::WeakDrop& w : trace.weak_dropped)
    std::cout << "dropped (weak): " << w.column
              << " r=" << dispcast::strg(w.r) << "\n";
  for (const dispcast::CollinearDrop& c : trace.collinear_dropped)
    std::cout << "dropped (collinear with " << c.kept << "): " << c.dropped
              << " r=" << dispcast::strg(c.r) << "\n";
  std::cout << "best subset (adjusted R2="
            << dispcast::strg(trace.best_adjusted_r2) << "):";
  for (const std::string& s : trace.best_subset) std::cout << ' ' << s;
  std::cout << "\n";
  for (const dispcast::EliminationStep& e : trace.elimination)
    std::cout << "round " << e.round << ": " << e.column
              << " p=" << dispcast::strg(e.p_value)
              << (e.dropped ? " dropped" : " kept") << "\n";
  std::cout << "final terms:";
  for (const dispcast::Term& t : trace.final_terms)
    std::cout << ' ' << t.display();
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-in dispersion forecasts and their bootstrap accuracy "
               "for longitudinal transaction panels"};
  app.require_subcommand(0, 1);

  std::string data_path;
  bool synthetic = false;
  std::string synthetic_spec_path;
  std::string scenarios = "s0";
  long iterations = 2000;
  std::uint64_t seed = 1;
  std::string measures;
  std::string domains;
  std::string qape = "0.5,0.99";
  int workers = 0;
  std::string out_dir = "out";
  bool no_refit = false;
  double max_failure_rate = 0.05;
  std::string thresholds;
  std::string quantile_method = "linear";
  std::string binaries;
  std::string manifest_path;
  bool dry_run = false;

  auto* data_opt =
      app.add_option("--data", data_path, "CSV transaction panel");
  auto* synth_opt = app.add_flag("--synthetic", synthetic,
                                 "Generate the built-in synthetic panel");
  auto* spec_opt = app.add_option("--synthetic-spec", synthetic_spec_path,
                                  "JSON overrides for the synthetic generator");
  auto* scen_opt = app.add_option(
      "--scenarios", scenarios,
      "Comma list of scenario names or JSON files; first is the reference");
  auto* iter_opt = app.add_option("-B,--iterations", iterations,
                                  "Bootstrap iterations per scenario");
  auto* seed_opt = app.add_option("--seed", seed, "Bootstrap seed");
  auto* meas_opt = app.add_option("--measures", measures,
                                  "Comma list of dispersion measures");
  auto* dom_opt =
      app.add_option("--domains", domains, "Comma list of domains");
  auto* qape_opt =
      app.add_option("--qape", qape, "Comma list of QAPE orders in (0,1)");
  app.add_option("--workers", workers,
                 "Worker threads (default: DISPCAST_WORKERS or 1)");
  app.add_option("--out", out_dir, "Artifact directory");
  auto* refit_opt = app.add_flag(
      "--no-refit", no_refit,
      "Keep the fitted variance components on every bootstrap sample");
  auto* fail_opt = app.add_option("--max-failure-rate", max_failure_rate,
                                  "Tolerated share of failed refits");
  auto* thr_opt = app.add_option(
      "--thresholds", thresholds,
      "Comparison thresholds moderate,high (default 1.15,2)");
  auto* qm_opt = app.add_option("--quantile-method", quantile_method,
                                "Measure quantiles: linear or left_inverse");
  auto* bin_opt = app.add_option(
      "--binary", binaries,
      "Comma list of numeric 0/1 columns kept through selection filters");
  auto* manifest_opt = app.add_option(
      "--manifest", manifest_path,
      "Replay a recorded run; only --workers and --out still apply");
  app.add_flag("--dry-run", dry_run,
               "Print the manifest for this configuration and exit");

  for (CLI::Option* opt :
       {data_opt, synth_opt, spec_opt, scen_opt, iter_opt, seed_opt, meas_opt,
        dom_opt, qape_opt, refit_opt, fail_opt, thr_opt, qm_opt, bin_opt})
    manifest_opt->excludes(opt);
  data_opt->excludes(synth_opt);
  data_opt->excludes(spec_opt);

  auto* select_cmd =
      app.add_subcommand("select", "Variable selection audit for a panel");
  std::string sel_data;
  std::string sel_binaries;
  std::uint64_t sel_seed = 0;
  dispcast::SelectionOptions sel_opts;
  select_cmd->add_option("--data", sel_data, "CSV transaction panel")
      ->required();
  select_cmd->add_option("--binary", sel_binaries,
                         "Comma list of designated 0/1 columns");
  select_cmd->add_option("--seed", sel_seed, "Permutation seed");
  select_cmd->add_option("--alpha", sel_opts.alpha, "Elimination level");
  select_cmd->add_option("--permutations", sel_opts.n_permutations,
                         "Permutations per test");
  select_cmd->add_option("--min-r", sel_opts.min_target_correlation,
                         "Weak-correlation cutoff against LOG.PRICE");
  select_cmd->add_option("--max-pair-r", sel_opts.max_pair_correlation,
                         "Pairwise collinearity cutoff");

  auto* print_cmd = app.add_subcommand("print-scenario",
                                       "Dump a built-in scenario as JSON");
  std::string print_name;
  print_cmd->add_option("name", print_name, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*print_cmd) {
      std::cout << dispcast::scenario_to_json(
                       dispcast::builtin_scenario(print_name))
                << "\n";
      return 0;
    }
    if (*select_cmd) {
      sel_opts.seed = sel_seed;
      sel_opts.binary_variables = split_list(sel_binaries);
      dispcast::IngestOptions iopts;
      iopts.binary_variables = sel_opts.binary_variables;
      const dispcast::RawDataset data =
          dispcast::ingest(dispcast::load_csv(sel_data), iopts);
      print_selection_trace(dispcast::select_variables(data, sel_opts));
      return 0;
    }

    auto parse_num = [](const std::string& s, const char* what) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw dispcast::ConfigError(std::string("bad value for ") + what +
                                    ": " + s);
      }
    };

    dispcast::RunConfig config;
    if (!manifest_path.empty()) {
      config = dispcast::config_from_manifest(manifest_path);
    } else {
      config.data_path = data_path;
      config.use_synthetic = synthetic || !synthetic_spec_path.empty();
      if (!synthetic_spec_path.empty())
        config.synthetic =
            dispcast::synthetic_spec_from_json(read_file(synthetic_spec_path));
      config.binary_variables = split_list(binaries);
      config.scenario_specs = split_list(scenarios);
      config.iterations = iterations;
      config.seed = seed;
      if (!measures.empty()) {
        config.measures.clear();
        for (const std::string& name : split_list(measures))
          config.measures.push_back(dispcast::measure_from_string(name));
      }
      config.domain_names = split_list(domains);
      if (!qape.empty()) {
        config.qape_orders.clear();
        for (const std::string& o : split_list(qape))
          config.qape_orders.push_back(parse_num(o, "--qape"));
      }
      config.refit = !no_refit;
      config.max_failure_rate = max_failure_rate;
      if (!thresholds.empty()) {
        const std::vector<std::string> parts = split_list(thresholds);
        if (parts.size() != 2)
          throw dispcast::ConfigError("--thresholds needs two values");
        config.thresholds.moderate = parse_num(parts[0], "--thresholds");
        config.thresholds.high = parse_num(parts[1], "--thresholds");
      }
      config.measure_method =
          dispcast::quantile_method_from_string(quantile_method);
    }
    config.workers = workers > 0 ? workers : default_workers();
    config.out_dir = out_dir;

    if (dry_run) {
      std::cout << dispcast::manifest_text(config);
      return 0;
    }
    print_run_summary(dispcast::run_pipeline(config));
    return 0;
  } catch (const dispcast::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dispcast::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const dispcast::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const dispcast::PartialRunError& e) {
    std::cerr << "partial run: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
