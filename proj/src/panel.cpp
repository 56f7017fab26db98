#include "dispcast/panel.hpp"

#include <string>

#include "dispcast/errors.hpp"

namespace dispcast {

const char* region_name(int code) {
  switch (code) {
    case kRegionNortheast:
      return "northeast";
    case kRegionMidwest:
      return "midwest";
    case kRegionSouth:
      return "south";
    case kRegionWest:
      return "west";
    case kRegionNational:
      return "national";
  }
  return "?";
}

const char* sections_name(int cls) {
  switch (cls) {
    case kSectionsSingle:
      return "single";
    case kSectionsDouble:
      return "double";
    case kSectionsThreePlus:
      return "three_or_more";
  }
  return "?";
}

const char* bedrooms_name(int cls) {
  return cls == kBedroomsThreePlus ? "three_or_more" : "two_or_fewer";
}

int subpopulation_of(int region, int sections_class) {
  if (sections_class == kSectionsThreePlus) return 9;
  if (region < kRegionNortheast || region > kRegionWest)
    throw DataError("no subpopulation for region " + std::to_string(region) +
                    " with " + sections_name(sections_class) + " sections");
  if (sections_class == kSectionsSingle) return region;
  if (sections_class == kSectionsDouble) return 4 + region;
  throw DataError("unknown sections class " + std::to_string(sections_class));
}

void TransactionPanel::validate() const {
  const auto n = static_cast<std::size_t>(rows());
  if (n == 0) throw DataError("panel has no records");
  if (static_cast<std::size_t>(design.rows()) != n ||
      region.size() != n || year_index.size() != n ||
      year_label.size() != n || weight.size() != n ||
      subpopulation.size() != n || sections_class.size() != n ||
      bedrooms_class.size() != n)
    throw DataError("panel fields disagree in length");
  if (design_columns.size() != static_cast<std::size_t>(design.cols()))
    throw DataError("design column names disagree with design width");
  for (std::size_t i = 0; i < n; ++i) {
    if (region[i] < 1 || region[i] > kNumRegions)
      throw DataError("region code out of range");
    if (year_index[i] < 1 || year_index[i] > n_years)
      throw DataError("year index out of range");
    if (!(weight[i] > 0.0)) throw DataError("weights must be positive");
    if (subpopulation[i] != subpopulation_of(region[i], sections_class[i]))
      throw DataError("subpopulation tag disagrees with region and sections");
  }
}

std::vector<Domain> default_domains() {
  std::vector<Domain> out;
  out.push_back({"population", 0});
  for (int s = 1; s <= kNumSubpopulations; ++s)
    out.push_back({"subpop_" + std::to_string(s), s});
  return out;
}

Domain domain_from_string(const std::string& name) {
  for (const Domain& d : default_domains())
    if (d.name == name) return d;
  throw ConfigError("unknown domain: " + name);
}

}  // namespace dispcast
