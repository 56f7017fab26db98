#include "dispcast/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "dispcast/errors.hpp"
#include "dispcast/panel.hpp"
#include "dispcast/rng.hpp"

namespace dispcast {

namespace {

constexpr const char* kLocationLevels[] = {"inside_community", "nonapplicable",
                                           "outside_community"};
constexpr double kLocationProbs[] = {0.45, 0.15, 0.40};
constexpr double kLocationEffects[] = {0.0, 0.02, 0.08};

constexpr const char* kTitledLevels[] = {"not_titled", "personal_property",
                                         "real_estate"};
constexpr double kTitledProbs[] = {0.10, 0.55, 0.35};
constexpr double kTitledEffects[] = {0.0, 0.03, 0.09};

constexpr const char* kSecuredLevels[] = {"nonapplicable", "not_secured",
                                          "tie_down"};
constexpr double kSecuredProbs[] = {0.30, 0.25, 0.45};
constexpr double kSecuredEffects[] = {0.0, -0.02, 0.03};

constexpr double kBedroomsTwoOrFewerEffect = -0.04;

constexpr double kHouseholdsBase[] = {1.1, 1.4, 2.3, 1.5, 1.8};
constexpr double kLogOwnerBase[] = {9.8, 10.1, 10.6, 10.3, 10.4};
constexpr double kIncomeBase[] = {62.0, 55.0, 50.0, 68.0, 58.0};

int draw_level(std::mt19937_64& eng, const double* probs, int k) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(eng);
  double cum = 0.0;
  for (int i = 0; i < k; ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return k - 1;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 100) throw ConfigError("synthetic panel needs n >= 100");
  if (spec.n_years < 2) throw ConfigError("synthetic panel needs >= 2 years");
  const long n = spec.n;
  const int m = spec.n_years;

  auto comp_eng = make_engine(spec.seed, Stream::Generator, 1);
  auto sqft_eng = make_engine(spec.seed, Stream::Generator, 2);
  auto bed_eng = make_engine(spec.seed, Stream::Generator, 3);
  auto loc_eng = make_engine(spec.seed, Stream::Generator, 4);
  auto title_eng = make_engine(spec.seed, Stream::Generator, 5);
  auto sec_eng = make_engine(spec.seed, Stream::Generator, 6);
  auto macro_eng = make_engine(spec.seed, Stream::Generator, 7);
  auto grid_eng = make_engine(spec.seed, Stream::Generator, 8);
  auto effect_eng = make_engine(spec.seed, Stream::Generator, 9);
  auto noise_eng = make_engine(spec.seed, Stream::Generator, 10);
  auto weight_eng = make_engine(spec.seed, Stream::Generator, 11);

  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> month(0, 11);

  SyntheticTruth truth;
  truth.sigma2_v = spec.sigma2_v;
  truth.sigma2_e = spec.sigma2_e;
  const double sd_v = std::sqrt(spec.sigma2_v);
  const double sd_e = std::sqrt(spec.sigma2_e);
  for (int d = 0; d < kNumRegions; ++d)
    truth.region_effect[d] = sd_v * std_normal(effect_eng);

  // Region-year macro series. Index t runs 0..m: rows in year-index t+1
  // carry the series at t, so the value at m is the realized next-period
  // level of the lagged covariates.
  std::vector<std::array<double, kNumRegions>> households(m + 1);
  std::vector<std::array<double, kNumRegions>> log_owner(m + 1);
  std::vector<std::array<double, kNumRegions>> income(m + 1);
  for (int d = 0; d < kNumRegions; ++d) {
    for (int t = 0; t <= m; ++t) {
      households[t][d] =
          kHouseholdsBase[d] * (1.0 + 0.015 * t) + 0.02 * std_normal(macro_eng);
      log_owner[t][d] =
          kLogOwnerBase[d] + 0.01 * t + 0.02 * std_normal(macro_eng);
      income[t][d] =
          kIncomeBase[d] * (1.0 + 0.02 * t) + 0.8 * std_normal(macro_eng);
    }
    const int code = d + 1;
    truth.next_period_lagged["HOUSEHOLDS"][code] = households[m][d];
    truth.next_period_lagged["LOG.OWNER"][code] = log_owner[m][d];
    truth.next_period_lagged["INCOME"][code] = income[m][d];
  }

  // Month-resolved macro grids break the collinearity between the annual
  // indicators and the macro covariates.
  std::vector<std::array<double, 12>> ppi(m), fed(m);
  for (int t = 0; t < m; ++t) {
    for (int mo = 0; mo < 12; ++mo) {
      ppi[t][mo] = 100.0 * std::pow(1.028, t + mo / 12.0) +
                   0.4 * std_normal(grid_eng);
      fed[t][mo] = std::max(
          0.25, 1.5 +
                    1.2 * std::sin(2.0 * std::numbers::pi * (t * 12 + mo) /
                                   60.0) +
                    0.05 * std_normal(grid_eng));
    }
  }

  auto year_effect = [&spec](int year_index) {
    const int s = year_index - 1;
    return spec.year_trend * s + spec.year_bump * std::max(0, s - 5);
  };

  Column price{"PRICE", true, {}, {}};
  Column region_col{"REGION", true, {}, {}};
  Column sections_col{"SECTIONS", false, {}, {}};
  Column year_col{"YEAR", true, {}, {}};
  Column weight_col{"WEIGHT", true, {}, {}};
  Column sqft_col{"LOG.SQFT", true, {}, {}};
  Column bed_col{"BEDROOMS", false, {}, {}};
  Column loc_col{"LOCATION", false, {}, {}};
  Column title_col{"TITLED", false, {}, {}};
  Column secured_col{"SECURED", false, {}, {}};
  Column hh_col{"HOUSEHOLDS", true, {}, {}};
  Column owner_col{"LOG.OWNER", true, {}, {}};
  Column income_col{"INCOME", true, {}, {}};
  Column ppi_col{"PPI", true, {}, {}};
  Column fed_col{"FED", true, {}, {}};

  const double two_section_share = 1.0 - spec.three_plus_share;
  for (long i = 0; i < n; ++i) {
    int sections;
    int region;
    const double u_sec = unit(comp_eng);
    if (u_sec < spec.three_plus_share) {
      sections = kSectionsThreePlus;
      region = kRegionNational;
    } else {
      sections = unit(comp_eng) < spec.single_share ? kSectionsSingle
                                                    : kSectionsDouble;
      double cum = 0.0;
      const double u_reg = unit(comp_eng) *
                           (spec.region_shares[0] + spec.region_shares[1] +
                            spec.region_shares[2] + spec.region_shares[3]);
      region = kRegionWest;
      for (int r = 0; r < 4; ++r) {
        cum += spec.region_shares[r];
        if (u_reg < cum) {
          region = r + 1;
          break;
        }
      }
    }
    (void)two_section_share;

    int year_index = m;
    const double u_year = unit(comp_eng);
    if (u_year >= spec.last_year_share) {
      const double rest = (u_year - spec.last_year_share) /
                          (1.0 - spec.last_year_share);
      year_index = 1 + std::min(m - 2, static_cast<int>(rest * (m - 1)));
    }
    const int mo = month(comp_eng);

    const double log_sqft =
        spec.log_sqft_mean[sections] + spec.log_sqft_sd * std_normal(sqft_eng);
    const int bedrooms = unit(bed_eng) < spec.bedrooms_three_plus[sections]
                             ? kBedroomsThreePlus
                             : kBedroomsTwoOrFewer;
    const int loc = draw_level(loc_eng, kLocationProbs, 3);
    const int title = draw_level(title_eng, kTitledProbs, 3);
    const int secured = draw_level(sec_eng, kSecuredProbs, 3);

    const int d = region - 1;
    const double hh = households[year_index - 1][d];
    const double lo = log_owner[year_index - 1][d];
    const double inc = income[year_index - 1][d];
    const double ppi_v = ppi[year_index - 1][mo];
    const double fed_v = fed[year_index - 1][mo];

    double log_price = spec.intercept + spec.beta_log_sqft * log_sqft +
                       spec.beta_households * hh + spec.beta_log_owner * lo +
                       spec.beta_income * inc + spec.beta_ppi * ppi_v +
                       spec.beta_fed * fed_v + kLocationEffects[loc] +
                       kTitledEffects[title] + kSecuredEffects[secured] +
                       year_effect(year_index) + truth.region_effect[d] +
                       sd_e * std_normal(noise_eng);
    if (bedrooms == kBedroomsTwoOrFewer) log_price += kBedroomsTwoOrFewerEffect;

    const double weight =
        std::exp(-0.5 * spec.weight_log_sd * spec.weight_log_sd +
                 spec.weight_log_sd * std_normal(weight_eng));

    price.values.push_back(std::exp(log_price));
    region_col.values.push_back(region);
    sections_col.labels.push_back(sections_name(sections));
    year_col.values.push_back(spec.first_year + year_index - 1);
    weight_col.values.push_back(weight);
    sqft_col.values.push_back(log_sqft);
    bed_col.labels.push_back(bedrooms_name(bedrooms));
    loc_col.labels.push_back(kLocationLevels[loc]);
    title_col.labels.push_back(kTitledLevels[title]);
    secured_col.labels.push_back(kSecuredLevels[secured]);
    hh_col.values.push_back(hh);
    owner_col.values.push_back(lo);
    income_col.values.push_back(inc);
    ppi_col.values.push_back(ppi_v);
    fed_col.values.push_back(fed_v);
  }

  truth.beta["(Intercept)"] = spec.intercept;
  truth.beta["LOG.SQFT"] = spec.beta_log_sqft;
  truth.beta["HOUSEHOLDS"] = spec.beta_households;
  truth.beta["LOG.OWNER"] = spec.beta_log_owner;
  truth.beta["INCOME"] = spec.beta_income;
  truth.beta["PPI"] = spec.beta_ppi;
  truth.beta["FED"] = spec.beta_fed;
  truth.beta["BEDROOMS=two_or_fewer"] = kBedroomsTwoOrFewerEffect;
  truth.beta["LOCATION=nonapplicable"] = kLocationEffects[1];
  truth.beta["LOCATION=outside_community"] = kLocationEffects[2];
  truth.beta["TITLED=personal_property"] = kTitledEffects[1];
  truth.beta["TITLED=real_estate"] = kTitledEffects[2];
  truth.beta["SECURED=not_secured"] = kSecuredEffects[1];
  truth.beta["SECURED=tie_down"] = kSecuredEffects[2];
  for (int t = 2; t <= m; ++t)
    truth.beta["YEAR=" + std::to_string(spec.first_year + t - 1)] =
        year_effect(t);

  SyntheticData out;
  out.truth = std::move(truth);
  out.data.n_rows = n;
  out.data.columns = {price,     region_col, sections_col, year_col,
                      weight_col, sqft_col,  bed_col,      loc_col,
                      title_col, secured_col, hh_col,      owner_col,
                      income_col, ppi_col,   fed_col};
  return out;
}

}  // namespace dispcast
