#ifndef DISPCAST_LMM_HPP_
#define DISPCAST_LMM_HPP_

#include <Eigen/Dense>
#include <vector>

#include "dispcast/panel.hpp"

namespace dispcast {

struct RemlOptions {
  double tol = 1e-10;      // relative width of the final bracket on rho
  int max_iter = 200;      // golden-section iterations
  double rho_max = 1e6;    // search range for rho = sigma2_v / sigma2_e
};

struct FittedModel {
  Eigen::VectorXd beta;
  std::vector<std::string> beta_names;
  double sigma2_v = 0.0;
  double sigma2_e = 0.0;
  Eigen::VectorXd v_hat;  // EBLUPs by region code (index = code - 1)
  double reml_loglik = 0.0;
  bool converged = false;
  bool boundary = false;  // variance ratio pinned at 0 or rho_max

  double gamma(int region_code, double n_d) const {
    (void)region_code;
    return sigma2_v * n_d / (sigma2_v * n_d + sigma2_e);
  }
};

// Random-intercept model with one intercept per region and homoskedastic
// residuals. The region-block covariance sigma2_v J + sigma2_e I is
// inverted in closed form, so a fit touches the data once through a fixed
// set of cross products and the likelihood search costs O(D p^2 + p^3) per
// evaluation. Construction keys all design-side products so repeated fits
// on fresh responses (the bootstrap) reuse them.
class RemlDesign {
 public:
  // regions carries 1-based codes; rows with code d contribute to block d.
  RemlDesign(Eigen::MatrixXd design, std::vector<int> regions, int n_regions);

  FittedModel fit(const Eigen::VectorXd& y, const RemlOptions& opts = {}) const;

  // GLS coefficients and predicted region effects at externally fixed
  // variance components (the no-refit mode).
  FittedModel fit_fixed_variances(const Eigen::VectorXd& y, double sigma2_v,
                                  double sigma2_e) const;

  // Restricted log-likelihood at (sigma2_v, sigma2_e), used by tests and
  // convergence diagnostics.
  double restricted_loglik(const Eigen::VectorXd& y, double sigma2_v,
                           double sigma2_e) const;

  int n_regions() const { return n_regions_; }
  long rows() const { return design_.rows(); }
  int params() const { return static_cast<int>(design_.cols()); }
  const Eigen::MatrixXd& design() const { return design_; }
  const std::vector<int>& regions() const { return regions_; }
  double region_count(int code) const { return counts_[code - 1]; }

 private:
  struct Profile;  // per-response cross products

  Profile profile_of(const Eigen::VectorXd& y) const;
  // Profiled restricted log-likelihood of rho given a response profile;
  // fills the GLS solution and residual quadratic form as side outputs.
  double profiled_loglik(const Profile& p, double rho, Eigen::VectorXd* beta,
                         double* quad_form, double* logdet_gram) const;
  FittedModel assemble(const Profile& p, double rho, bool converged,
                       bool boundary) const;

  Eigen::MatrixXd design_;
  std::vector<int> regions_;
  int n_regions_ = 0;
  Eigen::MatrixXd xtx_;                       // X'X
  std::vector<Eigen::VectorXd> region_xsum_;  // per-region column sums of X
  std::vector<double> counts_;                // per-region record counts
};

// One-shot fit of a panel.
FittedModel fit_reml(const TransactionPanel& panel,
                     const RemlOptions& opts = {});

// Shrinkage predictor of the region effects; already filled in FittedModel
// by the fitting routines, exposed for direct use on fresh responses.
Eigen::VectorXd eblup(const RemlDesign& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, double sigma2_v,
                      double sigma2_e);

}  // namespace dispcast

#endif  // DISPCAST_LMM_HPP_
