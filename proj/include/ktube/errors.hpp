#pragma once

#include <stdexcept>
#include <string>

namespace ktube {

/// Bad input: violated precondition, malformed config, dimension mismatch.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical routine could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

}  // namespace ktube
