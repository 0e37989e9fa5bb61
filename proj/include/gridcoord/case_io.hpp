#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gridcoord/model.hpp"

namespace gridcoord::io {

/// Failure to turn a case document into a valid Scenario.
class CaseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Schema, Validation, Io };

  CaseError(Kind kind, std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message),
        kind_(kind),
        location_(std::move(location)) {}

  Kind kind() const { return kind_; }
  /// "line L, column C" for syntax errors, a JSON pointer for schema and
  /// validation errors.
  const std::string& location() const { return location_; }

 private:
  Kind kind_;
  std::string location_;
};

/// Default solver tolerance: GRIDCOORD_TOL when set and positive, else 1e-7.
double default_tolerance();

Scenario parse_case_text(const std::string& text);
Scenario parse_case(const std::filesystem::path& path);

/// Serializes a scenario into the case format; parse_case_text inverts it.
std::string emit_case(const Scenario& scenario);

/// Resolves a case argument: an existing file path, or the name of a
/// bundled fixture (paper_reference, paper_as_printed, voltage_binding).
std::filesystem::path resolve_case(const std::string& name_or_path);

}  // namespace gridcoord::io
