#include "dispcast/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "dispcast/errors.hpp"
#include "dispcast/rng.hpp"

namespace dispcast {

ErrorPanel::ErrorPanel(long iterations, std::vector<std::string> measures,
                       std::vector<std::string> domains)
    : iterations_(iterations),
      measures_(std::move(measures)),
      domains_(std::move(domains)),
      cells_(iterations * static_cast<long>(measures_.size()) *
             static_cast<long>(domains_.size())),
      branch_(iterations, kNoShockBranch),
      excluded_(iterations, 0) {}

BootstrapCell& ErrorPanel::at(long b, int m, int d) {
  const long md = static_cast<long>(measures_.size());
  const long dd = static_cast<long>(domains_.size());
  return cells_[(b * md + m) * dd + d];
}

const BootstrapCell& ErrorPanel::at(long b, int m, int d) const {
  const long md = static_cast<long>(measures_.size());
  const long dd = static_cast<long>(domains_.size());
  return cells_[(b * md + m) * dd + d];
}

long ErrorPanel::n_excluded() const {
  long out = 0;
  for (char e : excluded_) out += e != 0;
  return out;
}

std::vector<double> ErrorPanel::errors(int m, int d) const {
  std::vector<double> out;
  out.reserve(iterations_);
  for (long b = 0; b < iterations_; ++b) {
    if (excluded_[b]) continue;
    const BootstrapCell& cell = at(b, m, d);
    if (cell.missing) continue;
    out.push_back(cell.error());
  }
  return out;
}

Eigen::VectorXd draw_region_effects(const FittedModel& model, int n_regions,
                                    std::mt19937_64& sample_engine) {
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double sd_v = std::sqrt(std::max(0.0, model.sigma2_v));
  Eigen::VectorXd v(n_regions);
  for (int d = 0; d < n_regions; ++d) v[d] = sd_v * std_normal(sample_engine);
  return v;
}

Eigen::VectorXd generate_sample_star(const FittedModel& model,
                                     const RemlDesign& design,
                                     const Eigen::VectorXd& v_star,
                                     std::mt19937_64& sample_engine) {
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double sd_e = std::sqrt(model.sigma2_e);
  Eigen::VectorXd y = design.design() * model.beta;
  for (long i = 0; i < y.size(); ++i)
    y[i] += v_star[design.regions()[i] - 1] + sd_e * std_normal(sample_engine);
  return y;
}

std::vector<double> generate_future_star(const FittedModel& model,
                                         const FutureFrame& frame,
                                         const Eigen::VectorXd& v_star,
                                         std::mt19937_64& future_engine) {
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double sd_e = std::sqrt(model.sigma2_e);
  std::vector<double> out;
  out.reserve(frame.total_units);
  for (const FutureRow& row : frame.rows) {
    const double eta = row.x.dot(model.beta) + v_star[row.region - 1];
    for (long c = 0; c < row.copies; ++c)
      out.push_back(eta + sd_e * std_normal(future_engine));
  }
  return out;
}

namespace {

// Expanded future-unit view plus per-domain unit lists, shared read-only by
// all workers.
struct FutureUnits {
  Eigen::MatrixXd row_design;       // frame rows x p
  std::vector<double> row_eta_hat;  // x'beta of the original fit, per row
  std::vector<long> unit_row;       // frame row of each replicated unit
  std::vector<int> unit_region, unit_sections, unit_bedrooms;
  std::vector<std::vector<long>> domain_units;  // per domain
};

FutureUnits expand_future(const FutureFrame& frame, const FittedModel& model,
                          const std::vector<Domain>& domains) {
  FutureUnits fu;
  const long rows = static_cast<long>(frame.rows.size());
  const long p = rows > 0 ? frame.rows[0].x.size() : 0;
  fu.row_design.resize(rows, p);
  fu.row_eta_hat.resize(rows);
  fu.unit_row.reserve(frame.total_units);
  fu.unit_region.reserve(frame.total_units);
  fu.unit_sections.reserve(frame.total_units);
  fu.unit_bedrooms.reserve(frame.total_units);
  fu.domain_units.resize(domains.size());
  for (long j = 0; j < rows; ++j) {
    const FutureRow& row = frame.rows[j];
    fu.row_design.row(j) = row.x.transpose();
    fu.row_eta_hat[j] = row.x.dot(model.beta);
    for (long c = 0; c < row.copies; ++c) {
      const long k = static_cast<long>(fu.unit_row.size());
      fu.unit_row.push_back(j);
      fu.unit_region.push_back(row.region);
      fu.unit_sections.push_back(row.sections_class);
      fu.unit_bedrooms.push_back(row.bedrooms_class);
      for (std::size_t d = 0; d < domains.size(); ++d)
        if (domains[d].contains(row.subpopulation))
          fu.domain_units[d].push_back(k);
    }
  }
  return fu;
}

}  // namespace

ErrorPanel run_bootstrap(const TransactionPanel& panel,
                         const FittedModel& model, const FutureFrame& frame,
                         const BootstrapPlan& plan) {
  panel.validate();
  if (plan.iterations < 1) throw ConfigError("bootstrap needs iterations >= 1");
  if (plan.workers < 1) throw ConfigError("bootstrap needs workers >= 1");
  if (!(model.sigma2_e > 0.0))
    throw NumericalError("bootstrap needs a positive residual variance");

  std::vector<std::string> measure_names, domain_names;
  for (MeasureKind kind : plan.measures) measure_names.push_back(to_string(kind));
  for (const Domain& d : plan.domains) domain_names.push_back(d.name);
  ErrorPanel panel_out(plan.iterations, measure_names, domain_names);

  const RemlDesign design(panel.design, panel.region, kNumRegions);
  const FutureUnits fu = expand_future(frame, model, plan.domains);
  const BranchSchedule schedule(plan.scenario, plan.iterations, plan.seed);
  const long n_units = static_cast<long>(fu.unit_row.size());
  if (n_units == 0) throw DataError("future frame has no units");

  const int n_measures = static_cast<int>(plan.measures.size());
  const int n_domains = static_cast<int>(plan.domains.size());

  std::atomic<long> next{0};
  std::atomic<long> failures{0};

  auto worker = [&]() {
    std::vector<double> y_future(n_units);
    std::vector<double> star_prices(n_units), hat_prices(n_units);
    std::vector<double> scratch;
    Eigen::VectorXd eta_hat_star(fu.row_design.rows());
    while (true) {
      const long b = next.fetch_add(1);
      if (b >= plan.iterations) break;
      auto sample_engine = make_engine(plan.seed, Stream::SampleNoise, b);
      auto future_engine = make_engine(plan.seed, Stream::FutureNoise, b);
      auto shock_engine = make_engine(plan.seed, Stream::Shock, b);

      const Eigen::VectorXd v_star =
          draw_region_effects(model, kNumRegions, sample_engine);

      // Forecast side: refit on the bootstrap sample, rebuild the plug-in
      // predictions. The shock never enters this side.
      FittedModel star;
      try {
        const Eigen::VectorXd y_star =
            generate_sample_star(model, design, v_star, sample_engine);
        star = plan.refit
                   ? design.fit(y_star, plan.reml)
                   : design.fit_fixed_variances(y_star, model.sigma2_v,
                                                model.sigma2_e);
      } catch (const std::exception&) {
        panel_out.exclude(b);
        failures.fetch_add(1);
        continue;
      }
      eta_hat_star.noalias() = fu.row_design * star.beta;

      // Realized side: generated future prices, shocked per the branch.
      const int branch = schedule.branch(b, shock_engine);
      panel_out.set_branch(b, branch);
      std::normal_distribution<double> std_normal(0.0, 1.0);
      const double sd_e = std::sqrt(model.sigma2_e);
      for (long k = 0; k < n_units; ++k)
        y_future[k] = fu.row_eta_hat[fu.unit_row[k]] +
                      v_star[fu.unit_region[k] - 1] +
                      sd_e * std_normal(future_engine);
      apply_branch(plan.scenario, branch, y_future, fu.unit_region,
                   fu.unit_sections, fu.unit_bedrooms, shock_engine);

      for (long k = 0; k < n_units; ++k) {
        star_prices[k] = std::exp(y_future[k]);
        hat_prices[k] =
            std::exp(eta_hat_star[fu.unit_row[k]] +
                     star.v_hat[fu.unit_region[k] - 1]);
      }

      for (int d = 0; d < n_domains; ++d) {
        const std::vector<long>& units = fu.domain_units[d];
        if (units.empty()) continue;

        scratch.resize(units.size());
        for (std::size_t i = 0; i < units.size(); ++i)
          scratch[i] = star_prices[units[i]];
        std::sort(scratch.begin(), scratch.end());
        const auto star_values = all_measures_sorted(scratch, plan.measure_method);

        for (std::size_t i = 0; i < units.size(); ++i)
          scratch[i] = hat_prices[units[i]];
        std::sort(scratch.begin(), scratch.end());
        const auto hat_values = all_measures_sorted(scratch, plan.measure_method);

        for (int m = 0; m < n_measures; ++m) {
          const int kind = static_cast<int>(plan.measures[m]);
          BootstrapCell& cell = panel_out.at(b, m, d);
          if (star_values[kind].missing || hat_values[kind].missing) continue;
          cell.theta_star = star_values[kind].value;
          cell.theta_hat_star = hat_values[kind].value;
          cell.missing = false;
        }
      }
    }
  };

  if (plan.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(plan.workers);
    for (int w = 0; w < plan.workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  const double failed = static_cast<double>(failures.load());
  if (failed > plan.max_failure_rate * static_cast<double>(plan.iterations))
    throw PartialRunError(
        std::to_string(failures.load()) + " of " +
        std::to_string(plan.iterations) +
        " bootstrap iterations failed; the run cannot stand");
  return panel_out;
}

}  // namespace dispcast
