#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>

namespace hwocr {

enum class Severity { notice, warning, error };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::notice: return "notice";
    case Severity::warning: return "warning";
    case Severity::error: return "error";
  }
  return "?";
}

/// Non-fatal finding reported by a validator.
struct Issue {
  Severity severity = Severity::warning;
  std::string kind;  // stable machine-readable tag, e.g. "out-of-bounds"
  std::string message;
  std::optional<std::size_t> index;  // offending entry, when there is one
};

inline std::ostream& operator<<(std::ostream& os, const Issue& i) {
  os << to_string(i.severity) << ": " << i.kind;
  if (i.index) os << " [" << *i.index << "]";
  return os << ": " << i.message;
}

}  // namespace hwocr
