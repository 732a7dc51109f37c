#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shallowid {

enum class ErrorKind {
  input,         // precondition on arguments violated
  parse,         // malformed file or command line
  admissibility, // network violates an admissibility clause
  hypothesis,    // inputs outside the setting where the answer is defined
  degenerate,    // geometric input is degenerate (e.g. points do not span a hyperplane)
  construction,  // seeded construction exhausted its retry budget
  recovery,      // reconstruction could not explain the data
  invariant,     // stale or inconsistent intermediate object
  size,          // resource guard tripped
  tolerance,     // no candidate passes the configured tolerances
  internal,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace shallowid
