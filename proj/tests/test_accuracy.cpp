#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dispcast/accuracy.hpp"
#include "dispcast/errors.hpp"
#include "oracles.hpp"

using namespace dispcast;

TEST_SUITE("accuracy") {

TEST_CASE("qape is the left inverse on absolute errors") {
  const std::vector<double> e = {-3, -1, 0, 2, 4};
  CHECK(qape(e, 0.5) == 2.0);
  CHECK(qape(e, 0.99) == 4.0);
  CHECK(qape(e, 0.2) == 0.0);
  CHECK(qape(e, 0.21) == 1.0);
  CHECK(rmse(e) == doctest::Approx(std::sqrt(30.0 / 5.0)).epsilon(1e-15));
}

TEST_CASE("qape monotone in the order") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 60);
  std::normal_distribution<double> noise(0.0, 3.0);
  std::uniform_real_distribution<double> order(0.001, 0.999);
  for (int rep = 0; rep < 10000; ++rep) {
    std::vector<double> e(len(rng));
    for (double& x : e) x = noise(rng);
    double p1 = order(rng), p2 = order(rng);
    if (p2 < p1) std::swap(p1, p2);
    const double q1 = qape(e, p1);
    const double q2 = qape(e, p2);
    CHECK(q1 <= q2);
    CHECK(qape(e, p1) == oracle::qape(e, p1));
  }
}

TEST_CASE("rmse matches the oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> e(50);
    for (double& x : e) x = noise(rng);
    CHECK(rmse(e) == doctest::Approx(oracle::rmse(e)).epsilon(1e-14));
  }
  CHECK_THROWS_AS((void)rmse(std::vector<double>{}), DataError);
  CHECK_THROWS_AS((void)qape(std::vector<double>{}, 0.5), DataError);
}

namespace {

// Tiny panel with known cells for the summary plumbing.
ErrorPanel toy_panel(double shift) {
  ErrorPanel panel(4, {"SD", "AAD"}, {"population"});
  for (long b = 0; b < 4; ++b) {
    for (int m = 0; m < 2; ++m) {
      auto& cell = panel.at(b, m, 0);
      cell.theta_star = 1.0;
      cell.theta_hat_star = 1.0 + shift * static_cast<double>(b - 1) -
                            (m == 1 ? 0.5 * shift : 0.0);
      cell.missing = false;
    }
    panel.set_branch(b, kNoShockBranch);
  }
  return panel;
}

}  // namespace

TEST_CASE("summary over scenarios") {
  const ErrorPanel base = toy_panel(1.0);
  const ErrorPanel loud = toy_panel(3.0);
  const auto report = summarize_accuracy({{"s0", &base}, {"sX", &loud}}, {0.5, 0.99});

  REQUIRE(report.rows.size() == 4);
  const auto* row = report.find("s0", "SD", "population");
  REQUIRE(row != nullptr);
  CHECK(row->cell.n_effective == 4);
  // errors -1, 0, 1, 2.
  CHECK(row->cell.rmse == doctest::Approx(std::sqrt(6.0 / 4.0)));
  CHECK(row->cell.qape.size() == 2);
  CHECK(row->cell.qape[0] == 1.0);
  CHECK(row->cell.qape[1] == 2.0);
  CHECK(report.find("sX", "AAD", "population") != nullptr);
  CHECK(report.find("sX", "IQR", "population") == nullptr);

  const auto rows = compare_to_reference(report, "s0");
  // Two measures, one domain, three statistics, one non-reference scenario.
  CHECK(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.scenario == "sX");
    CHECK(r.ratio == doctest::Approx(r.value / r.reference));
    CHECK(r.classification == (r.ratio >= 2.0 ? "high" : (r.ratio >= 1.15 ? "moderate" : "neutral")));
  }
}

TEST_CASE("excluded iterations and missing cells leave the summary") {
  ErrorPanel panel = toy_panel(1.0);
  panel.exclude(3);                 // drops error 2
  panel.at(0, 0, 0).missing = true; // drops error -1 for SD only
  CHECK(panel.n_excluded() == 1);

  const auto report = summarize_accuracy({{"s0", &panel}}, {0.5});
  const auto* sd = report.find("s0", "SD", "population");
  REQUIRE(sd != nullptr);
  CHECK(sd->cell.n_effective == 2);
  CHECK(sd->cell.rmse == doctest::Approx(std::sqrt(0.5)));
  const auto* aad = report.find("s0", "AAD", "population");
  REQUIRE(aad != nullptr);
  CHECK(aad->cell.n_effective == 3);
}

}  // TEST_SUITE
