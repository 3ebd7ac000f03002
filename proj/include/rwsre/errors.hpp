#pragma once

#include <stdexcept>
#include <string>

namespace rwsre {

/// Malformed input: a law, a config field or an index outside its domain.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The environment violates one of the standing assumptions of a pipeline.
class RegimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A walk or excursion left the generated window of marked sites.
class WindowExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rwsre
