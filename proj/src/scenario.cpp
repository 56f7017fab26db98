#include "dispcast/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dispcast/errors.hpp"
#include "dispcast/format.hpp"
#include "dispcast/rng.hpp"

namespace dispcast {

namespace {

using ordered_json = nlohmann::ordered_json;

ShockEffect region_decrease(int region, double fraction, SeverityLaw law,
                            double a, double b) {
  ShockEffect e;
  e.selector.region = region;
  e.affected_fraction = fraction;
  e.law = law;
  e.a = a;
  e.b = b;
  return e;
}

ShockEffect bedrooms_decrease(int bedrooms_class, double fraction, double mean) {
  ShockEffect e;
  e.selector.bedrooms_class = bedrooms_class;
  e.affected_fraction = fraction;
  e.law = SeverityLaw::Normal;
  e.a = mean;
  e.b = mean / 3.0;
  return e;
}

std::vector<ShockEffect> regional_decline_effects() {
  return {
      region_decrease(kRegionNortheast, 0.025, SeverityLaw::Normal, 0.175,
                      0.175 / 3.0),
      region_decrease(kRegionMidwest, 0.008, SeverityLaw::Normal, 0.175,
                      0.175 / 3.0),
      region_decrease(kRegionSouth, 0.006, SeverityLaw::Normal, 0.175,
                      0.175 / 3.0),
      region_decrease(kRegionWest, 0.038, SeverityLaw::Normal, 0.175,
                      0.175 / 3.0),
  };
}

std::vector<ShockEffect> bedrooms_decline_effects() {
  return {
      bedrooms_decrease(kBedroomsTwoOrFewer, 0.046, 0.11934),
      bedrooms_decrease(kBedroomsThreePlus, 0.046, 0.024),
  };
}

std::vector<ShockEffect> market_decline_effects() {
  ShockEffect e;
  e.affected_fraction = 1.0;
  e.law = SeverityLaw::Normal;
  e.a = 0.0688;
  e.b = 0.02293;
  return {e};
}

ShockEffect hurricane_northeast_effect() {
  return region_decrease(kRegionNortheast, 0.30, SeverityLaw::Uniform, 0.06,
                         0.16);
}

ShockEffect hurricane_south_effect() {
  return region_decrease(kRegionSouth, 0.38, SeverityLaw::Uniform, 0.005,
                         0.038);
}

ShockScenario one_branch(const std::string& name, const std::string& branch,
                         double probability, std::vector<ShockEffect> effects) {
  ShockScenario s;
  s.name = name;
  s.allocation = BranchAllocation::Bernoulli;
  s.branches.push_back({branch, probability, std::move(effects)});
  return s;
}

void validate_scenario(const ShockScenario& s) {
  double total = 0.0;
  for (const SubScenario& sub : s.branches) {
    if (!(sub.probability >= 0.0 && sub.probability <= 1.0))
      throw ConfigError("scenario " + s.name + ": branch " + sub.name +
                        " probability outside [0, 1]");
    total += sub.probability;
    for (const ShockEffect& e : sub.effects) {
      if (!(e.affected_fraction >= 0.0 && e.affected_fraction <= 1.0))
        throw ConfigError("scenario " + s.name + ": branch " + sub.name +
                          " affected_fraction outside [0, 1]");
      if (e.law == SeverityLaw::Uniform && !(e.a <= e.b))
        throw ConfigError("scenario " + s.name + ": branch " + sub.name +
                          " uniform bounds inverted");
      if (e.law == SeverityLaw::Normal && !(e.b >= 0.0))
        throw ConfigError("scenario " + s.name + ": branch " + sub.name +
                          " normal spread negative");
    }
  }
  if (total > 1.0 + 1e-12)
    throw ConfigError("scenario " + s.name +
                      ": branch probabilities sum beyond 1");
}

int region_from_json(const ordered_json& v) {
  if (v.is_number_integer()) {
    const int code = v.get<int>();
    if (code < 1 || code > kNumRegions)
      throw ConfigError("scenario selector region out of range");
    return code;
  }
  const std::string name = lower(v.get<std::string>());
  for (int code = 1; code <= kNumRegions; ++code)
    if (name == region_name(code)) return code;
  throw ConfigError("scenario selector region not recognized: " + name);
}

int sections_from_json(const ordered_json& v) {
  const std::string name = lower(v.get<std::string>());
  if (name == "single") return kSectionsSingle;
  if (name == "double") return kSectionsDouble;
  if (name == "three_or_more") return kSectionsThreePlus;
  throw ConfigError("scenario selector sections not recognized: " + name);
}

int bedrooms_from_json(const ordered_json& v) {
  const std::string name = lower(v.get<std::string>());
  if (name == "two_or_fewer") return kBedroomsTwoOrFewer;
  if (name == "three_or_more") return kBedroomsThreePlus;
  throw ConfigError("scenario selector bedrooms not recognized: " + name);
}

void reject_unknown_keys(const ordered_json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  std::string bad;
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok) bad += (bad.empty() ? "" : ", ") + item.key();
  }
  if (!bad.empty())
    throw ConfigError("unrecognized " + where + " field(s): " + bad);
}

ShockEffect effect_from_json(const ordered_json& obj) {
  reject_unknown_keys(
      obj, {"region", "sections", "bedrooms", "affected_fraction", "law", "a",
            "b"},
      "effect");
  ShockEffect e;
  if (obj.contains("region")) e.selector.region = region_from_json(obj["region"]);
  if (obj.contains("sections"))
    e.selector.sections_class = sections_from_json(obj["sections"]);
  if (obj.contains("bedrooms"))
    e.selector.bedrooms_class = bedrooms_from_json(obj["bedrooms"]);
  if (!obj.contains("affected_fraction"))
    throw ConfigError("effect is missing affected_fraction");
  e.affected_fraction = obj["affected_fraction"].get<double>();
  const std::string law =
      obj.contains("law") ? lower(obj["law"].get<std::string>()) : "normal";
  if (law == "normal")
    e.law = SeverityLaw::Normal;
  else if (law == "uniform")
    e.law = SeverityLaw::Uniform;
  else
    throw ConfigError("effect law not recognized: " + law);
  if (!obj.contains("a") || !obj.contains("b"))
    throw ConfigError("effect is missing severity parameters a and b");
  e.a = obj["a"].get<double>();
  e.b = obj["b"].get<double>();
  return e;
}

ordered_json effect_to_json(const ShockEffect& e) {
  ordered_json obj;
  if (e.selector.region) obj["region"] = region_name(*e.selector.region);
  if (e.selector.sections_class)
    obj["sections"] = sections_name(*e.selector.sections_class);
  if (e.selector.bedrooms_class)
    obj["bedrooms"] = bedrooms_name(*e.selector.bedrooms_class);
  obj["affected_fraction"] = e.affected_fraction;
  obj["law"] = e.law == SeverityLaw::Normal ? "normal" : "uniform";
  obj["a"] = e.a;
  obj["b"] = e.b;
  return obj;
}

}  // namespace

ShockScenario builtin_scenario(const std::string& name) {
  if (name == "s0") {
    ShockScenario s;
    s.name = "s0";
    return s;
  }
  if (name == "s1")
    return one_branch("s1", "regional_decline", 0.25,
                      regional_decline_effects());
  if (name == "s11")
    return one_branch("s11", "regional_decline", 1.0,
                      regional_decline_effects());
  if (name == "s2")
    return one_branch("s2", "bedrooms_decline", 0.9,
                      bedrooms_decline_effects());
  if (name == "s21")
    return one_branch("s21", "bedrooms_decline", 1.0,
                      bedrooms_decline_effects());
  if (name == "s3")
    return one_branch("s3", "market_decline", 0.05, market_decline_effects());
  if (name == "s31")
    return one_branch("s31", "market_decline", 1.0, market_decline_effects());
  if (name == "s4") {
    ShockScenario s;
    s.name = "s4";
    s.allocation = BranchAllocation::FixedFractions;
    s.branches.push_back(
        {"hurricane_northeast", 0.02, {hurricane_northeast_effect()}});
    s.branches.push_back({"hurricane_south", 0.69, {hurricane_south_effect()}});
    s.branches.push_back(
        {"hurricane_both",
         0.08,
         {hurricane_northeast_effect(), hurricane_south_effect()}});
    return s;
  }
  if (name == "s41")
    return one_branch(
        "s41", "hurricane_both", 1.0,
        {hurricane_northeast_effect(), hurricane_south_effect()});
  throw ConfigError("unknown scenario: " + name);
}

std::vector<std::string> builtin_scenario_names() {
  return {"s0", "s1", "s11", "s2", "s21", "s3", "s31", "s4", "s41"};
}

ShockScenario scenario_from_json(const std::string& text) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario JSON does not parse: ") + e.what());
  }
  if (!obj.is_object()) throw ConfigError("scenario JSON must be an object");
  reject_unknown_keys(obj, {"name", "allocation", "branches"}, "scenario");
  ShockScenario s;
  if (!obj.contains("name")) throw ConfigError("scenario is missing name");
  s.name = obj["name"].get<std::string>();
  const std::string alloc = obj.contains("allocation")
                                ? lower(obj["allocation"].get<std::string>())
                                : "bernoulli";
  if (alloc == "bernoulli")
    s.allocation = BranchAllocation::Bernoulli;
  else if (alloc == "fixed_fractions")
    s.allocation = BranchAllocation::FixedFractions;
  else
    throw ConfigError("scenario allocation not recognized: " + alloc);
  if (obj.contains("branches")) {
    for (const auto& branch : obj["branches"]) {
      reject_unknown_keys(branch, {"name", "probability", "effects"}, "branch");
      SubScenario sub;
      if (branch.contains("name")) sub.name = branch["name"].get<std::string>();
      if (!branch.contains("probability"))
        throw ConfigError("branch is missing probability");
      sub.probability = branch["probability"].get<double>();
      if (branch.contains("effects"))
        for (const auto& eff : branch["effects"])
          sub.effects.push_back(effect_from_json(eff));
      s.branches.push_back(std::move(sub));
    }
  }
  validate_scenario(s);
  return s;
}

std::string scenario_to_json(const ShockScenario& s) {
  ordered_json obj;
  obj["name"] = s.name;
  obj["allocation"] = s.allocation == BranchAllocation::Bernoulli
                          ? "bernoulli"
                          : "fixed_fractions";
  obj["branches"] = ordered_json::array();
  for (const SubScenario& sub : s.branches) {
    ordered_json branch;
    branch["name"] = sub.name;
    branch["probability"] = sub.probability;
    branch["effects"] = ordered_json::array();
    for (const ShockEffect& e : sub.effects)
      branch["effects"].push_back(effect_to_json(e));
    obj["branches"].push_back(std::move(branch));
  }
  return obj.dump();
}

std::vector<ShockScenario> parse_scenario_list(const std::string& spec) {
  std::vector<ShockScenario> out;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), token) != names.end()) {
      out.push_back(builtin_scenario(token));
      continue;
    }
    std::ifstream in(token);
    if (!in) throw ConfigError("scenario is neither built in nor a file: " +
                               token);
    std::stringstream buf;
    buf << in.rdbuf();
    out.push_back(scenario_from_json(buf.str()));
  }
  if (out.empty()) throw ConfigError("no scenarios requested");
  return out;
}

BranchSchedule::BranchSchedule(const ShockScenario& scenario, long iterations,
                               std::uint64_t seed)
    : scenario_(&scenario) {
  validate_scenario(scenario);
  if (scenario.allocation != BranchAllocation::FixedFractions) return;

  // Largest-remainder counts over the branches plus the shock-free rest.
  const std::size_t k = scenario.branches.size();
  std::vector<double> fractions;
  for (const SubScenario& sub : scenario.branches)
    fractions.push_back(sub.probability);
  fractions.push_back(1.0 - std::accumulate(fractions.begin(), fractions.end(),
                                            0.0));
  if (fractions.back() < -1e-12)
    throw ConfigError("scenario " + scenario.name +
                      ": fixed fractions sum beyond 1");
  if (fractions.back() < 0.0) fractions.back() = 0.0;

  std::vector<long> alloc(fractions.size());
  std::vector<std::pair<double, std::size_t>> rema;
  long assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(iterations);
    alloc[i] = static_cast<long>(std::floor(exact + 1e-9));
    assigned += alloc[i];
    rema.push_back({exact - static_cast<double>(alloc[i]), i});
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (long r = 0; r < iterations - assigned; ++r)
    ++alloc[rema[static_cast<std::size_t>(r) % rema.size()].second];

  counts_.assign(alloc.begin(), alloc.begin() + static_cast<long>(k));
  assignment_.reserve(iterations);
  for (std::size_t i = 0; i < k; ++i)
    assignment_.insert(assignment_.end(), alloc[i], static_cast<int>(i));
  assignment_.insert(assignment_.end(), alloc[k], kNoShockBranch);
  std::mt19937_64 eng = make_engine(seed, Stream::Branch, 0);
  std::shuffle(assignment_.begin(), assignment_.end(), eng);
}

int BranchSchedule::branch(long b, std::mt19937_64& shock_engine) const {
  if (scenario_->is_null()) return kNoShockBranch;
  if (scenario_->allocation == BranchAllocation::FixedFractions)
    return assignment_[b];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(shock_engine);
  double cum = 0.0;
  for (std::size_t i = 0; i < scenario_->branches.size(); ++i) {
    cum += scenario_->branches[i].probability;
    if (u < cum) return static_cast<int>(i);
  }
  return kNoShockBranch;
}

long apply_branch(const ShockScenario& scenario, int branch,
                  std::span<double> log_prices, std::span<const int> region,
                  std::span<const int> sections_class,
                  std::span<const int> bedrooms_class, std::mt19937_64& rng) {
  if (branch == kNoShockBranch) return 0;
  const SubScenario& sub =
      scenario.branches.at(static_cast<std::size_t>(branch));
  long hit = 0;
  std::vector<std::size_t> matching;
  for (const ShockEffect& effect : sub.effects) {
    matching.clear();
    for (std::size_t i = 0; i < log_prices.size(); ++i)
      if (effect.selector.matches(region[i], sections_class[i],
                                  bedrooms_class[i]))
        matching.push_back(i);
    const auto m = static_cast<long>(matching.size());
    const long k = std::llround(effect.affected_fraction *
                                static_cast<double>(m));
    for (long i = 0; i < k; ++i) {
      std::uniform_int_distribution<long> pick(i, m - 1);
      std::swap(matching[i], matching[pick(rng)]);
    }
    if (effect.law == SeverityLaw::Normal) {
      std::normal_distribution<double> law(effect.a, effect.b);
      for (long i = 0; i < k; ++i) {
        const double delta = std::min(law(rng), 0.999);
        log_prices[matching[i]] += std::log1p(-delta);
      }
    } else {
      std::uniform_real_distribution<double> law(effect.a, effect.b);
      for (long i = 0; i < k; ++i) {
        const double delta = std::min(law(rng), 0.999);
        log_prices[matching[i]] += std::log1p(-delta);
      }
    }
    hit += k;
  }
  return hit;
}

}  // namespace dispcast
