#pragma once

#include <stdexcept>
#include <string>

namespace repulsion {

/// Input violates a documented precondition (bad point, bad config, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is valid but the requested quantity is undefined there
/// (coincident points, antipodal log map).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Riemannian barycenter iteration of a merged cluster did not converge.
class DegenerateCluster : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Descent could not find an acceptable step before the step size underflowed.
class StallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace repulsion
