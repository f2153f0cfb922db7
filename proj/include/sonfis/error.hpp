#pragma once

#include <stdexcept>
#include <string>

namespace sonfis {

/// Malformed input or configuration. The CLI maps this to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read or written. The CLI maps this to exit status 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A granulation produced too little structure to continue (no occupied
/// neurons, more rules than distinct granules). Controllers record the
/// iteration as failed instead of aborting.
class GranulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sonfis
