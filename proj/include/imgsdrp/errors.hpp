#pragma once

#include <stdexcept>
#include <string>

namespace imgsdrp {

// Precondition broken by the caller. The CLI maps it to exit code 3.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnsupportedShape : public ContractViolation {
 public:
  explicit UnsupportedShape(double m)
      : ContractViolation("unsupported Nakagami shape " + std::to_string(m)) {}
};

// Bad scenario input (config file, trace file, empty scenario). Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyScenario : public ConfigError {
 public:
  EmptyScenario() : ConfigError("empty scenario: no vehicles") {}
};

class TraceParseError : public ConfigError {
 public:
  TraceParseError(const std::string& path, std::size_t line, const std::string& what)
      : ConfigError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace imgsdrp
