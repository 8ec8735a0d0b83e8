#pragma once

#include <stdexcept>
#include <string>

namespace janus {

/// Base for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed SMILES / token text / config input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A graph that violates the valence rules of its atoms.
class ValenceError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A molecule that cannot be expressed with the given alphabet or tables.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace janus
