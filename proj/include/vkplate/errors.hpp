#pragma once

#include <stdexcept>
#include <string>

namespace vkp {

// Every failure the library reports derives from vkp::Error so callers (the
// CLI in particular) can catch one type and still print a precise diagnostic.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationError : Error { using Error::Error; };   // non-finite sample
struct BracketError : Error { using Error::Error; };      // no sign change
struct StencilError : Error { using Error::Error; };      // FD stencil hits an excluded set
struct ProximityError : Error { using Error::Error; };    // point inside exclusion zone
struct ConvergenceError : Error { using Error::Error; };  // one-sided limit did not settle
struct AccuracyError : Error { using Error::Error; };      // quadrature refinement disagreed
struct GeometryError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct ClosureError : PreconditionError { using PreconditionError::PreconditionError; };
struct ConfigError : Error { using Error::Error; };

}  // namespace vkp
