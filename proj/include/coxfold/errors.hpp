#ifndef COXFOLD_ERRORS_HPP
#define COXFOLD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coxfold {

/** Base class for every error this library raises deliberately. */
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Malformed input text (CSV cell that does not parse, short row, ...). */
struct ParseError : Error {
  using Error::Error;
};

/** Structurally valid input whose layout is unusable (missing column, p=0). */
struct SchemaError : Error {
  using Error::Error;
};

/** Values outside the domain contract (negative time, status not in {0,1},
 *  invalid penalty shape parameter, fold count out of range, ...). */
struct ValidationError : Error {
  using Error::Error;
};

/** Floating-point failure: overflow in exp, non-finite intermediate. */
struct NumericError : Error {
  using Error::Error;
};

}  // namespace coxfold

#endif  // COXFOLD_ERRORS_HPP
