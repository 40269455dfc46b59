#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fwa {

/// Caller passed a value outside an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A slot structure cannot be laid over a service period.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No Basic TDD slot for the sender exists inside the search horizon.
class NoOpportunityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state machine received an event it cannot accept in its current state.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal consistency failure inside the simulator (a bug, or a schedule
/// that makes a node transmit and receive in the same slot).
class EngineAssertion : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Scenario configuration errors. Carries every problem found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += "; ";
      out += item;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace fwa
