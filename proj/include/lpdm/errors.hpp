#pragma once

#include <stdexcept>
#include <string>

namespace lpdm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's contract (bad resolution, negative
/// density, p == q, ...). The CLI maps these to exit code 2.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical construction broke down: rank-deficient stencil fit,
/// singular b tensor, non-positive determinant in the log form.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpdm
