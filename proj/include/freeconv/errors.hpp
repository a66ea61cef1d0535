#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace freeconv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ExponentOutOfRange : public Error {
 public:
  using Error::Error;
};

class NonPositiveSmoothFactor : public Error {
 public:
  using Error::Error;
};

/// Real evaluation point lies inside the closed support.
class EvaluationOnSupport : public Error {
 public:
  using Error::Error;
};

/// Evaluation point is closer to the support than the configured floor.
class TooCloseToSupport : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Real-axis iteration left the exterior gap: the energy lies inside the support.
class LeftRealAxis : public Error {
 public:
  using Error::Error;
};

class BracketFailure : public Error {
 public:
  using Error::Error;
};

class NonNegativeSecondDerivative : public Error {
 public:
  using Error::Error;
};

class OutOfSupport : public Error {
 public:
  using Error::Error;
};

class QuantileFailure : public Error {
 public:
  using Error::Error;
};

class SpecParseError : public Error {
 public:
  using Error::Error;
};

/// Failures of a batch solve, one entry per failing input position.
class GridFailure : public Error {
 public:
  struct Entry {
    std::size_t index;
    std::string message;
  };

  explicit GridFailure(std::vector<Entry> entries)
      : Error(summarize(entries)), entries_(std::move(entries)) {}

  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  static std::string summarize(const std::vector<Entry>& entries) {
    std::string out = std::to_string(entries.size()) + " grid point(s) failed";
    for (const auto& e : entries) {
      out += "; [" + std::to_string(e.index) + "] " + e.message;
    }
    return out;
  }

  std::vector<Entry> entries_;
};

}  // namespace freeconv
