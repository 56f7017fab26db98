#include "dispcast/selection.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>

#include "dispcast/errors.hpp"
#include "dispcast/rng.hpp"

namespace dispcast {
namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

bool solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                Eigen::VectorXd* beta, Eigen::LDLT<Eigen::MatrixXd>* out) {
  out->compute(gram);
  if (out->info() != Eigen::Success) return false;
  const double dmax = out->vectorD().maxCoeff();
  if (!(dmax > 0.0)) return false;
  if (out->vectorD().minCoeff() <= dmax * 1e-13) return false;
  *beta = out->solve(rhs);
  return true;
}

void permute_in_place(Eigen::VectorXd* v, std::mt19937_64* engine) {
  for (long i = v->size() - 1; i > 0; --i) {
    std::uniform_int_distribution<long> pick(0, i);
    std::swap((*v)[i], (*v)[pick(*engine)]);
  }
}

struct Unit {
  std::string name;
  std::vector<Term> terms;
  int first_col = 0;  // into the expanded design, intercept at 0
  int n_cols = 0;
  double target_r = 0.0;  // only meaningful for numeric units
};

}  // namespace

double adjusted_r2(const Eigen::VectorXd& y, const Eigen::MatrixXd& design) {
  const long n = design.rows();
  const long k = design.cols() - 1;  // parameters beside the intercept
  if (n - k - 1 < 1) throw DataError("too few rows for adjusted R^2");
  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd xty = design.transpose() * y;
  Eigen::VectorXd beta;
  Eigen::LDLT<Eigen::MatrixXd> solver;
  if (!solve_gram(gram, xty, &beta, &solver))
    throw NumericalError("design matrix is rank deficient");
  const double rss = std::max(0.0, y.squaredNorm() - beta.dot(xty));
  const double ybar = y.mean();
  const double tss = y.squaredNorm() - static_cast<double>(n) * ybar * ybar;
  if (tss <= 0.0) throw NumericalError("response has no variance");
  return 1.0 - (rss / static_cast<double>(n - k - 1)) /
                   (tss / static_cast<double>(n - 1));
}

double permutation_t_test(const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& design, long column,
                          int n_permutations, std::mt19937_64& engine) {
  const long n = design.rows();
  const long k = design.cols();
  if (column < 1 || column >= k)
    throw ConfigError("permutation test column out of range");
  if (n_permutations < 1) throw ConfigError("n_permutations must be positive");
  if (n - k < 1) throw NumericalError("too few rows for permutation test");

  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd xty = design.transpose() * y;
  Eigen::VectorXd beta;
  Eigen::LDLT<Eigen::MatrixXd> solver;
  if (!solve_gram(gram, xty, &beta, &solver))
    throw NumericalError("design matrix is rank deficient");
  const double rss = std::max(0.0, y.squaredNorm() - beta.dot(xty));
  const double sigma2 = rss / static_cast<double>(n - k);
  Eigen::VectorXd ej = Eigen::VectorXd::Zero(k);
  ej(column) = 1.0;
  const double ajj = solver.solve(ej)(column);
  if (!(sigma2 > 0.0) || !(ajj > 0.0))
    throw NumericalError("degenerate design in permutation test");
  const double t_obs = std::abs(beta(column)) / std::sqrt(sigma2 * ajj);

  // Reduced model without the tested column.
  Eigen::MatrixXd reduced(n, k - 1);
  long at = 0;
  for (long c = 0; c < k; ++c)
    if (c != column) reduced.col(at++) = design.col(c);
  const Eigen::MatrixXd gram_r = reduced.transpose() * reduced;
  const Eigen::VectorXd xty_r = reduced.transpose() * y;
  Eigen::VectorXd beta_r;
  Eigen::LDLT<Eigen::MatrixXd> solver_r;
  if (!solve_gram(gram_r, xty_r, &beta_r, &solver_r))
    throw NumericalError("reduced design is rank deficient");
  const Eigen::VectorXd fitted = reduced * beta_r;
  const Eigen::VectorXd resid = y - fitted;
  const double fitted_ss = fitted.squaredNorm();
  const double resid_ss = resid.squaredNorm();
  const Eigen::VectorXd base_xty = design.transpose() * fitted;

  // One permuted-residual response per column, ranked in a single batch.
  Eigen::MatrixXd perms(n, n_permutations);
  Eigen::VectorXd work = resid;
  for (int q = 0; q < n_permutations; ++q) {
    work = resid;
    permute_in_place(&work, &engine);
    perms.col(q) = work;
  }
  const Eigen::MatrixXd xte = design.transpose() * perms;
  const Eigen::VectorXd cross = perms.transpose() * fitted;

  int count = 0;
  for (int q = 0; q < n_permutations; ++q) {
    const Eigen::VectorXd rhs = base_xty + xte.col(q);
    const Eigen::VectorXd bstar = solver.solve(rhs);
    const double ystar_ss = fitted_ss + 2.0 * cross(q) + resid_ss;
    const double rss_star = ystar_ss - bstar.dot(rhs);
    const double s2_star = rss_star / static_cast<double>(n - k);
    double t_star = std::numeric_limits<double>::infinity();
    if (s2_star > 0.0)
      t_star = std::abs(bstar(column)) / std::sqrt(s2_star * ajj);
    if (t_star >= t_obs) ++count;
  }
  return (1.0 + count) / (1.0 + static_cast<double>(n_permutations));
}

SelectionTrace select_variables(const RawDataset& data,
                                const SelectionOptions& opts) {
  if (!data.has("LOG.PRICE"))
    throw DataError("selection requires a LOG.PRICE column");
  const std::vector<double>& target = data.at("LOG.PRICE").values;
  const std::size_t n = data.n_rows;
  if (n < 10) throw DataError("too few rows for variable selection");

  for (const std::string& name : opts.binary_variables) {
    if (!data.has(name))
      throw ConfigError("unknown binary variable: " + name);
    const Column& col = data.at(name);
    if (!col.numeric)
      throw ConfigError("binary variable is not numeric: " + name);
    for (double v : col.values)
      if (v != 0.0 && v != 1.0)
        throw ConfigError("binary variable is not 0/1: " + name);
  }
  auto is_binary = [&opts](const std::string& name) {
    return std::find(opts.binary_variables.begin(),
                     opts.binary_variables.end(),
                     name) != opts.binary_variables.end();
  };

  SelectionTrace trace;

  // Step 1: form choice for numeric candidates, raw against log.
  struct NumericCandidate {
    std::string column;
    Term term;
    std::vector<double> values;  // in the chosen form
    double r = 0.0;
    bool binary = false;
  };
  std::vector<NumericCandidate> numeric;
  for (const Column& col : data.columns) {
    if (is_structural_column(col.name) || !col.numeric) continue;
    for (double v : col.values)
      if (!std::isfinite(v))
        throw DataError("selection requires complete numeric columns: " +
                        col.name);
    FormChoice choice;
    choice.column = col.name;
    choice.r_raw = pearson(col.values, target);
    bool log_ok = !is_binary(col.name);
    for (double v : col.values)
      if (v <= 0.0) log_ok = false;
    std::vector<double> logged;
    if (log_ok) {
      logged.resize(n);
      for (std::size_t i = 0; i < n; ++i) logged[i] = std::log(col.values[i]);
      choice.r_log = pearson(logged, target);
      choice.log_form = std::abs(choice.r_log) > std::abs(choice.r_raw);
    }
    trace.forms.push_back(choice);

    NumericCandidate cand;
    cand.column = col.name;
    cand.binary = is_binary(col.name);
    if (choice.log_form) {
      cand.term = Term{TermKind::LogNumeric, col.name, ""};
      cand.values = std::move(logged);
      cand.r = choice.r_log;
    } else {
      cand.term = Term{TermKind::Numeric, col.name, ""};
      cand.values = col.values;
      cand.r = choice.r_raw;
    }
    numeric.push_back(std::move(cand));
  }

  // Step 2: weak-correlation filter; designated binaries are exempt unless
  // constant.
  std::vector<NumericCandidate> strong;
  for (NumericCandidate& cand : numeric) {
    const bool constant = pearson(cand.values, cand.values) == 0.0;
    const bool weak = std::abs(cand.r) < opts.min_target_correlation;
    if (constant || (weak && !cand.binary)) {
      trace.weak_dropped.push_back({cand.column, cand.r});
      continue;
    }
    strong.push_back(std::move(cand));
  }

  // Step 3: pairwise collinearity pruning, worst pair first.
  std::vector<char> alive(strong.size(), 1);
  for (;;) {
    double worst = opts.max_pair_correlation;
    std::size_t wi = strong.size(), wj = strong.size();
    for (std::size_t i = 0; i < strong.size(); ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < strong.size(); ++j) {
        if (!alive[j]) continue;
        const double r = std::abs(pearson(strong[i].values, strong[j].values));
        if (r > worst) {
          worst = r;
          wi = i;
          wj = j;
        }
      }
    }
    if (wi == strong.size()) break;
    // Keep the one better correlated with the target; ties keep the earlier.
    std::size_t drop = wj;
    if (std::abs(strong[wj].r) > std::abs(strong[wi].r)) drop = wi;
    const std::size_t keep = drop == wi ? wj : wi;
    alive[drop] = 0;
    trace.collinear_dropped.push_back(
        {strong[keep].column, strong[drop].column, worst});
  }

  // Step 4: exhaustive best-subset by adjusted R^2. Units are surviving
  // numeric variables, indicator blocks, and the year block.
  std::vector<Unit> units;
  for (std::size_t i = 0; i < strong.size(); ++i) {
    if (!alive[i]) continue;
    Unit u;
    u.name = strong[i].term.display();
    u.terms = {strong[i].term};
    u.target_r = strong[i].r;
    units.push_back(std::move(u));
  }
  for (const Column& col : data.columns) {
    if (is_structural_column(col.name) || col.numeric) continue;
    std::vector<std::string> levels(col.labels);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() < 2) continue;
    Unit u;
    u.name = col.name;
    for (std::size_t l = 1; l < levels.size(); ++l)
      u.terms.push_back(Term{TermKind::Dummy, col.name, levels[l]});
    units.push_back(std::move(u));
  }
  if (data.has("YEAR")) {
    std::vector<Term> yt = year_terms(data);
    if (!yt.empty()) {
      Unit u;
      u.name = "YEAR";
      u.terms = std::move(yt);
      units.push_back(std::move(u));
    }
  }
  if (units.empty()) throw DataError("no selection candidates survive");
  if (static_cast<int>(units.size()) > opts.subset_cap)
    throw ConfigError("too many selection candidates for exhaustive search: " +
                      std::to_string(units.size()));

  std::vector<Term> all_terms;
  for (Unit& u : units) {
    u.first_col = 1 + static_cast<int>(all_terms.size());
    u.n_cols = static_cast<int>(u.terms.size());
    all_terms.insert(all_terms.end(), u.terms.begin(), u.terms.end());
  }
  std::vector<std::string> col_names;
  const Eigen::MatrixXd design = build_design(data, all_terms, &col_names);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = target[i];

  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::VectorXd xty = design.transpose() * y;
  const double yty = y.squaredNorm();
  const double ybar = y.mean();
  const double tss = yty - static_cast<double>(n) * ybar * ybar;
  if (tss <= 0.0) throw NumericalError("response has no variance");

  for (const Unit& u : units) trace.subset_candidates.push_back(u.name);

  const std::size_t n_units = units.size();
  double best_adj = -std::numeric_limits<double>::infinity();
  std::uint64_t best_mask = 0;
  std::vector<int> cols;
  for (std::uint64_t mask = 0; mask < (1ull << n_units); ++mask) {
    cols.clear();
    cols.push_back(0);
    for (std::size_t u = 0; u < n_units; ++u)
      if (mask & (1ull << u))
        for (int c = 0; c < units[u].n_cols; ++c)
          cols.push_back(units[u].first_col + c);
    const long k = static_cast<long>(cols.size()) - 1;
    if (static_cast<long>(n) - k - 1 < 1) continue;
    Eigen::MatrixXd g(cols.size(), cols.size());
    Eigen::VectorXd b(cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a) {
      b(a) = xty(cols[a]);
      for (std::size_t c = 0; c < cols.size(); ++c) g(a, c) = gram(cols[a], cols[c]);
    }
    Eigen::VectorXd beta;
    Eigen::LDLT<Eigen::MatrixXd> solver;
    if (!solve_gram(g, b, &beta, &solver)) continue;
    const double rss = std::max(0.0, yty - beta.dot(b));
    const double adj = 1.0 - (rss / static_cast<double>(n - k - 1)) /
                                 (tss / static_cast<double>(n - 1));
    if (adj > best_adj) {
      best_adj = adj;
      best_mask = mask;
    }
  }
  trace.best_adjusted_r2 = best_adj;
  std::vector<int> active;  // design columns of the winning subset
  for (std::size_t u = 0; u < n_units; ++u)
    if (best_mask & (1ull << u)) {
      trace.best_subset.push_back(units[u].name);
      for (int c = 0; c < units[u].n_cols; ++c)
        active.push_back(units[u].first_col + c);
    }

  // Step 5: backward elimination by permutation test, one column per round.
  for (int round = 1; !active.empty(); ++round) {
    Eigen::MatrixXd cur(n, 1 + active.size());
    cur.col(0) = design.col(0);
    for (std::size_t i = 0; i < active.size(); ++i)
      cur.col(1 + static_cast<long>(i)) = design.col(active[i]);
    std::vector<double> pvals(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      std::mt19937_64 engine = make_engine(
          opts.seed, Stream::Permutation,
          static_cast<std::uint64_t>(round) * 4096u +
              static_cast<std::uint64_t>(active[i]));
      pvals[i] = permutation_t_test(y, cur, 1 + static_cast<long>(i),
                                    opts.n_permutations, engine);
    }
    std::size_t worst = 0;
    for (std::size_t i = 1; i < active.size(); ++i)
      if (pvals[i] > pvals[worst]) worst = i;
    const bool drop = pvals[worst] > opts.alpha;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (drop && i != worst) continue;  // only the dropped column is logged
      EliminationStep step;
      step.round = round;
      step.column = col_names[active[i]];
      step.p_value = pvals[i];
      step.dropped = drop && i == worst;
      trace.elimination.push_back(step);
    }
    if (!drop) break;
    active.erase(active.begin() + static_cast<long>(worst));
  }

  for (int c : active) trace.final_terms.push_back(all_terms[c - 1]);
  return trace;
}

}  // namespace dispcast
