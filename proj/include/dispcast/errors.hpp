#ifndef DISPCAST_ERRORS_HPP_
#define DISPCAST_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dispcast {

// Invalid configuration: unknown flags, malformed scenario files, bad manifest.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unusable input data: missing mandatory columns, empty panels, bad domains.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Estimation failure: singular designs, non-convergence, degenerate samples.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Too many bootstrap iterations had to be discarded for the run to stand.
class PartialRunError : public std::runtime_error {
 public:
  explicit PartialRunError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dispcast

#endif  // DISPCAST_ERRORS_HPP_
