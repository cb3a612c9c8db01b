// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace logitbayes {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A model could not be fitted from the supplied data (empty class, too few samples).
class FitError : public Error
{
public:
  using Error::Error;
};

/// An argument is outside its valid domain (non-finite value, bad bandwidth, length mismatch).
class ParameterError : public Error
{
public:
  using Error::Error;
};

/// A text input could not be parsed. The message carries the line number when known.
class ParseError : public Error
{
public:
  using Error::Error;
};

/// A persisted artifact is unreadable, has an unsupported version or violates an invariant.
class FormatError : public Error
{
public:
  using Error::Error;
};

/// File-system level failure (missing file, short read, unwritable output).
class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace logitbayes
