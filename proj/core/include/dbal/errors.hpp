#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dbal {

/// Base class for every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A measure, vector or argument failed its construction invariants.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Q(z) > 0 while R(z) = 0 for a divergence or projection that needs Q << R.
class AbsoluteContinuityViolation : public Error {
 public:
  using Error::Error;
};

/// A row (or column) with zero mass must be rescaled to a positive target.
class EmptyMarginalCell : public Error {
 public:
  EmptyMarginalCell(const std::string& axis, std::size_t index)
      : Error("empty marginal cell on axis " + axis + " at index " +
              std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Conditional expectations are undefined on a zero-mass marginal atom.
class ZeroMarginal : public Error {
 public:
  using Error::Error;
};

/// The variance formulas need s_j < 1 for j >= 2.
class SpectralGapViolation : public Error {
 public:
  using Error::Error;
};

class AllZeroCounts : public Error {
 public:
  AllZeroCounts() : Error("truncated target needs at least one positive count") {}
};

class TargetOutsideSupport : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dbal
