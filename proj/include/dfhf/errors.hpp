#pragma once

#include <stdexcept>
#include <string>

namespace dfhf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct NonHermitianError : Error {
  using Error::Error;
};

struct DimensionCapError : Error {
  using Error::Error;
};

// 0 sits (numerically) inside the spectrum of a mean-field Dirac operator.
struct NearKernelError : Error {
  NearKernelError(const std::string& what, double eig) : Error(what), eigenvalue(eig) {}
  double eigenvalue;
};

struct SingularOverlapError : Error {
  using Error::Error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

}  // namespace dfhf
