#ifndef DISPCAST_RNG_HPP_
#define DISPCAST_RNG_HPP_

#include <cstdint>
#include <random>

namespace dispcast {

// Named random substreams. Every stochastic component draws from its own
// stream keyed by (run seed, stream, index), so replays are bit-identical
// and independent of scheduling or worker count.
enum class Stream : std::uint64_t {
  SampleNoise = 1,  // bootstrap sample-side v* and e*
  FutureNoise = 2,  // bootstrap future-side e*
  Shock = 3,        // shock selection and severity draws
  Branch = 4,       // scenario branch assignment
  Generator = 5,    // synthetic data generation
  Permutation = 6,  // permutation tests in variable selection
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (stream * 0xbf58476d1ce4e5b9ULL);
  h = splitmix64(s);
  s = h ^ (index * 0x94d049bb133111ebULL);
  return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(
      mix_seed(seed, static_cast<std::uint64_t>(stream), index));
}

}  // namespace dispcast

#endif  // DISPCAST_RNG_HPP_
