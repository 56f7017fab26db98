#ifndef DISPCAST_SCENARIO_HPP_
#define DISPCAST_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dispcast/panel.hpp"

namespace dispcast {

// Row predicate for shock targeting. Empty optionals match everything.
struct RowSelector {
  std::optional<int> region;          // region code
  std::optional<int> sections_class;  // kSections*
  std::optional<int> bedrooms_class;  // kBedrooms*

  bool matches(int reg, int sec, int bed) const {
    return (!region || *region == reg) &&
           (!sections_class || *sections_class == sec) &&
           (!bedrooms_class || *bedrooms_class == bed);
  }
};

enum class SeverityLaw { Normal, Uniform };

// One shock effect: a fraction of the rows matched by the selector receives
// a relative price decrease delta drawn from the severity law. A draw is
// truncated to at most 0.999 so log(1 - delta) stays finite.
struct ShockEffect {
  RowSelector selector;
  double affected_fraction = 0.0;  // share of matching rows hit
  SeverityLaw law = SeverityLaw::Normal;
  double a = 0.0;  // Normal: mean;   Uniform: lower bound
  double b = 0.0;  // Normal: sd;     Uniform: upper bound
};

// A branch of a mixture scenario.
struct SubScenario {
  std::string name;
  double probability = 0.0;  // Bernoulli weight or fixed fraction of B
  std::vector<ShockEffect> effects;
};

enum class BranchAllocation {
  Bernoulli,       // each iteration draws a branch (or none) independently
  FixedFractions,  // deterministic iteration counts, largest remainder
};

// A named shock scenario. The no-shock scenario has no branches.
struct ShockScenario {
  std::string name;
  BranchAllocation allocation = BranchAllocation::Bernoulli;
  std::vector<SubScenario> branches;

  bool is_null() const { return branches.empty(); }
};

inline constexpr int kNoShockBranch = -1;

// Built-in scenarios: s0, s1, s2, s3, s4, s11, s21, s31, s41.
ShockScenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// JSON (de)serialization of the scenario grammar. Parsing rejects unknown
// keys, out-of-range fractions and probabilities, inverted uniform bounds
// and negative severity spreads, naming every offending field.
ShockScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const ShockScenario& scenario);

// Scenario names or paths to JSON files, comma separated.
std::vector<ShockScenario> parse_scenario_list(const std::string& spec);

// Iteration-to-branch assignment for one bootstrap run. Bernoulli
// allocation draws per iteration from the iteration's shock stream;
// FixedFractions pre-computes largest-remainder counts per branch and
// shuffles the assignment once, so any B and seed give a deterministic
// schedule independent of iteration evaluation order.
class BranchSchedule {
 public:
  BranchSchedule(const ShockScenario& scenario, long iterations,
                 std::uint64_t seed);

  // kNoShockBranch or the branch index for iteration b. Bernoulli draws
  // consume the engine; fixed allocation ignores it.
  int branch(long b, std::mt19937_64& shock_engine) const;

  // Deterministic counts per branch under FixedFractions (empty otherwise).
  const std::vector<long>& fixed_counts() const { return counts_; }

 private:
  const ShockScenario* scenario_;
  std::vector<int> assignment_;  // FixedFractions only
  std::vector<long> counts_;
};

// Applies one branch's effects to log prices in place. Row k is described
// by tags[k]; selection is a simple random sample without replacement of
// round(affected_fraction * matching) rows per effect, drawn from `rng`.
// Returns the number of rows hit.
long apply_branch(const ShockScenario& scenario, int branch,
                  std::span<double> log_prices, std::span<const int> region,
                  std::span<const int> sections_class,
                  std::span<const int> bedrooms_class, std::mt19937_64& rng);

}  // namespace dispcast

#endif  // DISPCAST_SCENARIO_HPP_
