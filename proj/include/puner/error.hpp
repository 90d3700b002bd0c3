#pragma once

#include <stdexcept>
#include <string>

namespace puner {

// Base class for all library errors. The CLI maps these to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files (CoNLL tags, dictionaries, model files, embeddings).
struct ParseError : Error {
  using Error::Error;
};

// Non-finite values or numerically invalid states during computation.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace puner
