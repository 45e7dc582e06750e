#pragma once

#include <stdexcept>
#include <string>

namespace stsep {

// Invalid or inconsistent input data (files, patterns, configuration values).
class data_error : public std::runtime_error {
public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure failed to produce a usable result
// (factorization failure, divergent iteration, degenerate denominator).
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stsep
