#pragma once

#include <stdexcept>
#include <string>

namespace fbs {

/// Precondition or invariant violation inside the numerical core.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration or field spec. Carries the JSON path
/// of the offending entry when one is known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace fbs
