#ifndef DISPCAST_BOOTSTRAP_HPP_
#define DISPCAST_BOOTSTRAP_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dispcast/lmm.hpp"
#include "dispcast/measures.hpp"
#include "dispcast/panel.hpp"
#include "dispcast/predictor.hpp"
#include "dispcast/scenario.hpp"

namespace dispcast {

struct BootstrapPlan {
  long iterations = 2000;
  std::uint64_t seed = 1;
  ShockScenario scenario;  // default-constructed = no shock
  std::vector<MeasureKind> measures{kAllMeasures.begin(), kAllMeasures.end()};
  std::vector<Domain> domains = default_domains();
  int workers = 1;
  // Refit the variance components on every bootstrap sample. The faster
  // alternative keeps the original components and only recomputes the
  // coefficients and region effects.
  bool refit = true;
  // Iterations whose refit fails are excluded; beyond this share the whole
  // run is abandoned.
  double max_failure_rate = 0.05;
  QuantileMethod measure_method = QuantileMethod::LinearInterpolation;
  RemlOptions reml;
};

// theta_star is the measure on generated future prices, theta_hat_star the
// refitted plug-in forecast. A cell is missing when the measure was
// undefined on either side.
struct BootstrapCell {
  double theta_star = 0.0;
  double theta_hat_star = 0.0;
  bool missing = true;

  double error() const { return theta_hat_star - theta_star; }
};

class ErrorPanel {
 public:
  ErrorPanel(long iterations, std::vector<std::string> measures,
             std::vector<std::string> domains);

  long iterations() const { return iterations_; }
  const std::vector<std::string>& measures() const { return measures_; }
  const std::vector<std::string>& domains() const { return domains_; }

  BootstrapCell& at(long b, int m, int d);
  const BootstrapCell& at(long b, int m, int d) const;

  int branch(long b) const { return branch_[b]; }
  void set_branch(long b, int br) { branch_[b] = br; }
  bool excluded(long b) const { return excluded_[b] != 0; }
  void exclude(long b) { excluded_[b] = 1; }
  long n_excluded() const;

  // Prediction errors of one (measure, domain) over the effective
  // iterations: not excluded, both sides defined.
  std::vector<double> errors(int m, int d) const;

 private:
  long iterations_;
  std::vector<std::string> measures_;
  std::vector<std::string> domains_;
  std::vector<BootstrapCell> cells_;
  std::vector<int> branch_;
  std::vector<char> excluded_;
};

// Region effects v* for one iteration, drawn from the fitted variance.
Eigen::VectorXd draw_region_effects(const FittedModel& model, int n_regions,
                                    std::mt19937_64& sample_engine);

// Bootstrap sample-side response: x'beta + v*_d + e*, residuals drawn from
// the engine in row order. Generation always uses the original fit.
Eigen::VectorXd generate_sample_star(const FittedModel& model,
                                     const RemlDesign& design,
                                     const Eigen::VectorXd& v_star,
                                     std::mt19937_64& sample_engine);

// Future-period log prices per replicated unit, in frame order (each source
// row contributes `copies` consecutive units with independent residuals).
std::vector<double> generate_future_star(const FittedModel& model,
                                         const FutureFrame& frame,
                                         const Eigen::VectorXd& v_star,
                                         std::mt19937_64& future_engine);

// Full parametric bootstrap of the plug-in forecast errors under one
// scenario. Iteration b derives three private engines (sample, future,
// shock) from (seed, b) alone, so results are bit-identical for any worker
// count and the no-shock side of every scenario shares its draws with s0.
// Throws PartialRunError when more than max_failure_rate of the iterations
// had to be excluded.
ErrorPanel run_bootstrap(const TransactionPanel& panel,
                         const FittedModel& model, const FutureFrame& frame,
                         const BootstrapPlan& plan);

}  // namespace dispcast

#endif  // DISPCAST_BOOTSTRAP_HPP_
