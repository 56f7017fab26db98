#ifndef DISPCAST_PANEL_HPP_
#define DISPCAST_PANEL_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dispcast {

// Census region codes as used in the REGION column. Code 5 marks records
// that belong to the national domain for three-or-more-section homes.
inline constexpr int kRegionNortheast = 1;
inline constexpr int kRegionMidwest = 2;
inline constexpr int kRegionSouth = 3;
inline constexpr int kRegionWest = 4;
inline constexpr int kRegionNational = 5;
inline constexpr int kNumRegions = 5;

// SECTIONS classes.
inline constexpr int kSectionsSingle = 0;
inline constexpr int kSectionsDouble = 1;
inline constexpr int kSectionsThreePlus = 2;

// BEDROOMS classes.
inline constexpr int kBedroomsTwoOrFewer = 0;
inline constexpr int kBedroomsThreePlus = 1;

inline constexpr int kNumSubpopulations = 9;

const char* region_name(int code);
const char* sections_name(int cls);
const char* bedrooms_name(int cls);

// Subpopulation index 1..9 for a (region code, sections class) pair:
// 1..4 single-section by region, 5..8 double-section by region, 9 the
// national three-or-more market. Throws DataError on combinations that do
// not map (region 5 with fewer than three sections).
int subpopulation_of(int region, int sections_class);

// Per-transaction modelling frame: response, design matrix and the tags
// needed for domain filtering, shocks and the variance model.
struct TransactionPanel {
  Eigen::VectorXd log_price;
  Eigen::MatrixXd design;  // n x p, first column the intercept
  std::vector<std::string> design_columns;
  std::vector<int> region;          // 1..kNumRegions
  std::vector<int> year_index;      // 1..n_years
  std::vector<int> year_label;      // calendar year
  std::vector<double> weight;       // survey weights, > 0
  std::vector<int> subpopulation;   // 1..kNumSubpopulations
  std::vector<int> sections_class;  // kSections*
  std::vector<int> bedrooms_class;  // kBedrooms*
  int n_years = 0;

  long rows() const { return log_price.size(); }
  int params() const { return static_cast<int>(design.cols()); }

  // Throws DataError when the pieces disagree in length or tags are out of
  // range.
  void validate() const;
};

// An estimation/reporting domain: the whole market or one subpopulation.
struct Domain {
  std::string name;
  int subpopulation = 0;  // 0 = population (no filter)

  bool contains(int subpop) const {
    return subpopulation == 0 || subpopulation == subpop;
  }
};

// Population followed by subpop_1 .. subpop_9.
std::vector<Domain> default_domains();
Domain domain_from_string(const std::string& name);

}  // namespace dispcast

#endif  // DISPCAST_PANEL_HPP_
