#pragma once

#include <stdexcept>
#include <string>

namespace bdspell {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input: bad JSON, bad UTF-8, missing file, unknown label.
class InputError : public Error {
 public:
  using Error::Error;
};

// Input parsed fine but violates a domain invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public InputError {
 public:
  explicit UnknownLabel(const std::string& label)
      : InputError("unknown label '" + label + "'"), label_(label) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

}  // namespace bdspell
