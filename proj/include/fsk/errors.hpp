#pragma once
// Error types shared by all fsk modules. Every failure mode a routine can
// signal is a distinct type so callers (and the CLI exit-code mapping) can
// dispatch on it.

#include <stdexcept>
#include <string>

namespace fsk {

// Root of the fsk error hierarchy.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A matrix required to be symmetric deviated by more than the tolerance.
struct NotSymmetric : Error {
  using Error::Error;
};

// An eigenvalue fell below -eps where a positive semi-definite matrix was
// required.
struct NotPositiveSemiDefinite : Error {
  using Error::Error;
};

// A matrix to be inverted (or raised to a negative power) is singular at the
// working tolerance.
struct Singular : Error {
  using Error::Error;
};

// A diagonal entry was <= 0 where a positive diagonal was required.
struct NonPositiveDiagonal : Error {
  using Error::Error;
};

// A factor model violated one of its structural invariants. The message
// names the first violated invariant.
struct InvalidModel : Error {
  using Error::Error;
};

// Synthetic model generation exhausted its retry budget.
struct GenerationFailed : Error {
  using Error::Error;
};

// A second-order loading implies a non-positive uniqueness.
struct HeywoodCase : Error {
  using Error::Error;
};

// An iterative fit hit its iteration cap before reaching tolerance.
struct NotConverged : Error {
  using Error::Error;
};

// A computed quantity violated a bound it satisfies in exact arithmetic
// (e.g. a correlation outside [-1, 1]). Indicates an upstream defect, so it
// is an error rather than a clamp.
struct NumericalIntegrity : Error {
  using Error::Error;
};

// Input file could not be read or parsed against the documented schema.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace fsk
