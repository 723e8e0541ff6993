#pragma once

#include <stdexcept>
#include <string>

namespace wmkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyVocabulary : public Error {
 public:
  using Error::Error;
};

/// Text too short to carry any scored position.
class TooShort : public Error {
 public:
  using Error::Error;
};

/// Exhaustive permutation enumeration requested for a vocabulary that is too
/// large; callers should fall back to Monte Carlo.
class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace wmkit
