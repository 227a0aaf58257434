#pragma once

#include <string>
#include <vector>

namespace cohbench {

enum class Severity { Error, Warning };

/// One parse/validate finding, pointing at a source location. Graphs built
/// programmatically carry line 0.
struct Diagnostic {
  int line = 0;
  int column = 0;
  Severity severity = Severity::Error;
  std::string message;
};

std::string to_string(const Diagnostic& d);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace cohbench
