#ifndef REACHLAB_ERRORS_HPP_
#define REACHLAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace reachlab {

// Invalid argument to a numeric routine (non-finite input, bad shape, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration failed validation. `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// API misuse such as stepping a finished episode.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or insufficient input data (logs, records, CSV rows).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Detection stream ordering violation.
class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Harvest phase machine received an event its current phase does not accept.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite quantity.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(long iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace reachlab

#endif  // REACHLAB_ERRORS_HPP_
