#pragma once

#include <compare>
#include <string>

namespace ews {

/// A machine-readable finding from a validation pass. Validators return
/// issues as data; they never throw for the conditions they report.
struct Issue {
  std::string code;     // e.g. "DuplicateFileName", "UngroundedQuote"
  std::string subject;  // file name, chunk id, pillar ... whatever the code is about
  std::string detail;

  auto operator<=>(const Issue&) const = default;
};

}  // namespace ews
