#include "dispcast/lmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "dispcast/errors.hpp"

namespace dispcast {

namespace {

constexpr double kGolden = 0.6180339887498949;

}  // namespace

struct RemlDesign::Profile {
  Eigen::VectorXd xty;
  double yty = 0.0;
  Eigen::VectorXd region_ysum;  // t_d
};

RemlDesign::RemlDesign(Eigen::MatrixXd design, std::vector<int> regions,
                       int n_regions)
    : design_(std::move(design)),
      regions_(std::move(regions)),
      n_regions_(n_regions) {
  const long n = design_.rows();
  const long p = design_.cols();
  if (n == 0) throw DataError("empty design matrix");
  if (static_cast<long>(regions_.size()) != n)
    throw DataError("region tags disagree with design rows");
  if (n <= p)
    throw NumericalError("design has more parameters than observations");
  for (int code : regions_)
    if (code < 1 || code > n_regions_)
      throw DataError("region code out of range");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_);
  if (qr.rank() < p) throw NumericalError("design matrix is rank deficient");

  xtx_ = design_.transpose() * design_;
  region_xsum_.assign(n_regions_, Eigen::VectorXd::Zero(p));
  counts_.assign(n_regions_, 0.0);
  for (long i = 0; i < n; ++i) {
    const int d = regions_[i] - 1;
    region_xsum_[d] += design_.row(i).transpose();
    counts_[d] += 1.0;
  }
}

RemlDesign::Profile RemlDesign::profile_of(const Eigen::VectorXd& y) const {
  if (y.size() != design_.rows())
    throw DataError("response length disagrees with design rows");
  Profile p;
  p.xty = design_.transpose() * y;
  p.yty = y.squaredNorm();
  p.region_ysum = Eigen::VectorXd::Zero(n_regions_);
  for (long i = 0; i < y.size(); ++i)
    p.region_ysum[regions_[i] - 1] += y[i];
  return p;
}

double RemlDesign::profiled_loglik(const Profile& prof, double rho,
                                   Eigen::VectorXd* beta, double* quad_form,
                                   double* logdet_gram) const {
  const long n = design_.rows();
  const long p = design_.cols();

  Eigen::MatrixXd gram = xtx_;
  Eigen::VectorXd rhs = prof.xty;
  double yvy = prof.yty;
  double logdet_v = 0.0;
  for (int d = 0; d < n_regions_; ++d) {
    if (counts_[d] == 0.0) continue;
    const double c = rho / (1.0 + rho * counts_[d]);
    gram.noalias() -= c * (region_xsum_[d] * region_xsum_[d].transpose());
    rhs.noalias() -= c * prof.region_ysum[d] * region_xsum_[d];
    yvy -= c * prof.region_ysum[d] * prof.region_ysum[d];
    logdet_v += std::log1p(rho * counts_[d]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success ||
      (ldlt.vectorD().array() <= 0.0).any())
    throw NumericalError("whitened normal equations are singular");
  Eigen::VectorXd b = ldlt.solve(rhs);
  const double quad = yvy - b.dot(rhs);
  if (!(quad > 0.0))
    throw NumericalError("degenerate residual sum of squares");

  const double logdet_gram_v = ldlt.vectorD().array().log().sum();
  const double df = static_cast<double>(n - p);
  const double sigma2_e = quad / df;
  const double loglik =
      -0.5 * (df * (std::log(2.0 * std::numbers::pi) + 1.0) +
              df * std::log(sigma2_e) + logdet_v + logdet_gram_v);

  if (beta) *beta = std::move(b);
  if (quad_form) *quad_form = quad;
  if (logdet_gram) *logdet_gram = logdet_gram_v;
  return loglik;
}

FittedModel RemlDesign::assemble(const Profile& prof, double rho,
                                 bool converged, bool boundary) const {
  FittedModel fit;
  double quad = 0.0;
  fit.reml_loglik = profiled_loglik(prof, rho, &fit.beta, &quad, nullptr);
  const double df = static_cast<double>(design_.rows() - design_.cols());
  fit.sigma2_e = quad / df;
  fit.sigma2_v = rho * fit.sigma2_e;
  fit.converged = converged;
  fit.boundary = boundary;
  fit.v_hat = Eigen::VectorXd::Zero(n_regions_);
  for (int d = 0; d < n_regions_; ++d) {
    if (counts_[d] == 0.0) continue;
    const double gamma = rho * counts_[d] / (1.0 + rho * counts_[d]);
    const double resid_mean =
        (prof.region_ysum[d] - region_xsum_[d].dot(fit.beta)) / counts_[d];
    fit.v_hat[d] = gamma * resid_mean;
  }
  return fit;
}

FittedModel RemlDesign::fit(const Eigen::VectorXd& y,
                            const RemlOptions& opts) const {
  const Profile prof = profile_of(y);

  // Coarse log-spaced scan brackets the optimum before the local search.
  std::vector<double> grid;
  grid.push_back(0.0);
  for (double e = -8.0; e <= 6.0 + 1e-12; e += 0.25) {
    const double rho = std::pow(10.0, e);
    if (rho <= opts.rho_max) grid.push_back(rho);
  }
  if (grid.back() < opts.rho_max) grid.push_back(opts.rho_max);

  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> lls(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    lls[i] = profiled_loglik(prof, grid[i], nullptr, nullptr, nullptr);
    if (lls[i] > best_ll) {
      best_ll = lls[i];
      best = i;
    }
  }

  if (best == 0) return assemble(prof, 0.0, true, true);

  const double lo = grid[best - 1];
  const double hi = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  if (best + 1 == grid.size()) {
    // Optimum presses against the cap.
    return assemble(prof, grid.back(), true, true);
  }

  // Golden-section search on [lo, hi].
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = profiled_loglik(prof, x1, nullptr, nullptr, nullptr);
  double f2 = profiled_loglik(prof, x2, nullptr, nullptr, nullptr);
  bool converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (b - a <= opts.tol * (1.0 + a)) {
      converged = true;
      break;
    }
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = profiled_loglik(prof, x2, nullptr, nullptr, nullptr);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = profiled_loglik(prof, x1, nullptr, nullptr, nullptr);
    }
  }
  double rho = 0.5 * (a + b);

  // The bracket can straddle zero when the best grid point is the first
  // positive one; a vanishing ratio is the boundary case.
  const bool at_zero = rho <= 1e-9;
  const bool at_cap = rho >= opts.rho_max * (1.0 - 1e-9);
  if (at_zero) rho = 0.0;
  return assemble(prof, rho, converged, at_zero || at_cap);
}

FittedModel RemlDesign::fit_fixed_variances(const Eigen::VectorXd& y,
                                            double sigma2_v,
                                            double sigma2_e) const {
  if (!(sigma2_e > 0.0))
    throw NumericalError("residual variance must be positive");
  if (sigma2_v < 0.0)
    throw NumericalError("region variance must be nonnegative");
  const Profile prof = profile_of(y);
  const double rho = sigma2_v / sigma2_e;
  FittedModel fit;
  fit.reml_loglik = restricted_loglik(y, sigma2_v, sigma2_e);
  profiled_loglik(prof, rho, &fit.beta, nullptr, nullptr);
  fit.sigma2_v = sigma2_v;
  fit.sigma2_e = sigma2_e;
  fit.converged = true;
  fit.boundary = false;
  fit.v_hat = Eigen::VectorXd::Zero(n_regions_);
  for (int d = 0; d < n_regions_; ++d) {
    if (counts_[d] == 0.0) continue;
    const double gamma = rho * counts_[d] / (1.0 + rho * counts_[d]);
    fit.v_hat[d] = gamma *
                   (prof.region_ysum[d] - region_xsum_[d].dot(fit.beta)) /
                   counts_[d];
  }
  return fit;
}

double RemlDesign::restricted_loglik(const Eigen::VectorXd& y, double sigma2_v,
                                     double sigma2_e) const {
  if (!(sigma2_e > 0.0))
    throw NumericalError("residual variance must be positive");
  const Profile prof = profile_of(y);
  const double rho = sigma2_v / sigma2_e;
  const long n = design_.rows();
  const long p = design_.cols();

  Eigen::VectorXd beta;
  double quad = 0.0, logdet_gram = 0.0;
  profiled_loglik(prof, rho, &beta, &quad, &logdet_gram);
  double logdet_v = 0.0;
  for (int d = 0; d < n_regions_; ++d)
    if (counts_[d] > 0.0) logdet_v += std::log1p(rho * counts_[d]);

  const double df = static_cast<double>(n - p);
  return -0.5 * (df * std::log(2.0 * std::numbers::pi) +
                 df * std::log(sigma2_e) + logdet_v + logdet_gram +
                 quad / sigma2_e);
}

FittedModel fit_reml(const TransactionPanel& panel, const RemlOptions& opts) {
  panel.validate();
  RemlDesign design(panel.design, panel.region, kNumRegions);
  FittedModel fit = design.fit(panel.log_price, opts);
  fit.beta_names = panel.design_columns;
  return fit;
}

Eigen::VectorXd eblup(const RemlDesign& design, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, double sigma2_v,
                      double sigma2_e) {
  if (!(sigma2_e > 0.0))
    throw NumericalError("residual variance must be positive");
  const long n = design.rows();
  Eigen::VectorXd resid = y - design.design() * beta;
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(design.n_regions());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(design.n_regions());
  for (long i = 0; i < n; ++i) {
    const int d = design.regions()[i] - 1;
    sums[d] += resid[i];
    counts[d] += 1.0;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design.n_regions());
  for (int d = 0; d < design.n_regions(); ++d) {
    if (counts[d] == 0.0) continue;
    const double gamma =
        sigma2_v * counts[d] / (sigma2_v * counts[d] + sigma2_e);
    out[d] = gamma * sums[d] / counts[d];
  }
  return out;
}

}  // namespace dispcast
