#ifndef DISPCAST_SELECTION_HPP_
#define DISPCAST_SELECTION_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dispcast/dataio.hpp"

namespace dispcast {

struct SelectionOptions {
  // Step thresholds.
  double min_target_correlation = 0.4;  // against LOG.PRICE
  double max_pair_correlation = 0.8;
  int n_permutations = 200;
  double alpha = 0.05;
  // Exhaustive best-subset beyond this many candidate units is refused.
  int subset_cap = 20;
  std::uint64_t seed = 0;
  // Numeric 0/1 columns exempt from the weak-correlation filter.
  std::vector<std::string> binary_variables;
};

struct FormChoice {
  std::string column;
  bool log_form = false;
  double r_raw = 0.0;
  double r_log = 0.0;  // 0 when the log form was not applicable
};

struct WeakDrop {
  std::string column;
  double r = 0.0;
};

struct CollinearDrop {
  std::string kept;
  std::string dropped;
  double r = 0.0;  // pairwise correlation that triggered the drop
};

struct EliminationStep {
  int round = 0;
  std::string column;  // expanded design column name
  double p_value = 0.0;
  bool dropped = false;
};

struct SelectionTrace {
  std::vector<FormChoice> forms;
  std::vector<WeakDrop> weak_dropped;
  std::vector<CollinearDrop> collinear_dropped;
  std::vector<std::string> subset_candidates;  // units entering best-subset
  std::vector<std::string> best_subset;        // winning units
  double best_adjusted_r2 = 0.0;
  std::vector<EliminationStep> elimination;
  std::vector<Term> final_terms;
};

// Adjusted R^2 of an intercept-included OLS fit.
double adjusted_r2(const Eigen::VectorXd& y, const Eigen::MatrixXd& design);

// Two-sided permutation test of one design column: residuals of the
// reduced model are permuted, the full model refitted, and the observed
// t-statistic ranked among the permuted ones. The design carries the
// intercept; `column` indexes into it. Returns (1 + #{|t*| >= |t|}) /
// (1 + n_permutations).
double permutation_t_test(const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& design, long column,
                          int n_permutations, std::mt19937_64& engine);

// The full variable-selection pipeline on an ingested dataset:
// raw-versus-log form choice, weak-correlation filter, pairwise collinearity
// pruning, exhaustive best-subset by adjusted R^2 over variable and
// indicator-block units, then backward elimination by permutation test.
SelectionTrace select_variables(const RawDataset& data,
                                const SelectionOptions& opts = {});

}  // namespace dispcast

#endif  // DISPCAST_SELECTION_HPP_
