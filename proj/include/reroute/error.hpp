#pragma once

#include <stdexcept>
#include <string>

namespace reroute {

// Bad input or configuration, detected before any side effect. The CLI maps
// this to exit code 1; every other std::exception maps to 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure talking to something outside the process (HTTP scorer or backend).
class TransportError : public std::runtime_error {
 public:
  TransportError(std::string endpoint, const std::string& what)
      : std::runtime_error(endpoint + ": " + what), endpoint_(std::move(endpoint)) {}

  [[nodiscard]] const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string endpoint_;
};

}  // namespace reroute
