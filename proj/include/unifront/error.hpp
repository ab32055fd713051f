#pragma once

#include <stdexcept>
#include <string>

namespace unifront {

/// Base class of every error the toolkit raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input (locale codes, corpus lines, spec files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A phoneme sequence violating word-boundary structure.
class StructureError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

/// A metric that is undefined for the given input (e.g. empty reference).
class MetricError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class SynthError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line usage or configuration; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace unifront
