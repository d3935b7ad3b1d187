#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/// Line-level classification of C/C++ sources into variable code (inside a
/// conditional-compilation region) and mandatory code.
namespace varexp::variability {

enum class DirectiveKind { If, Ifdef, Ifndef, Elif, Else, Endif, NonDirective };

std::string_view to_string(DirectiveKind kind);

/// Lexer state carried between physical lines.
struct ContinuationState {
  bool in_block_comment = false;
  bool in_line_comment = false;  // a `//` comment continued by a trailing backslash
  bool continues_line = false;   // previous physical line ended with a backslash
  DirectiveKind continued_kind = DirectiveKind::NonDirective;
};

/// Classifies one physical line and advances `state`. Continuation lines of a
/// logical directive report that directive's kind.
DirectiveKind classify_line(std::string_view raw_line, ContinuationState& state);

struct GuardPolicy {
  /// Suppress the `#ifndef G / #define G ... #endif` frame wrapping a header.
  bool exclude_include_guards = true;
  /// Treat `#if 0` / `#if 1` branches as conditional regions.
  bool count_constant_conditions = true;
};

enum class LineClass : std::uint8_t { Mandatory, Variable };

struct PresenceFrame {
  DirectiveKind branch = DirectiveKind::If;  // kind of the currently active branch
  std::string guard_expr;
  std::set<std::string> constants;
  int opened_at = 1;
};

struct Diagnostic {
  int line = 0;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct VariabilityMap {
  std::string path;
  std::vector<LineClass> line_class;  // index 0 is line 1
  std::set<std::string> constants;
  int variable_loc = 0;
  int mandatory_loc = 0;
  std::vector<Diagnostic> diagnostics;

  int total_loc() const { return static_cast<int>(line_class.size()); }
  bool is_variable(int line) const {
    return line_class.at(static_cast<std::size_t>(line - 1)) == LineClass::Variable;
  }
};

VariabilityMap build_variability_map(std::string_view file_text, const GuardPolicy& policy = {},
                                     std::string path = {});

/// Identifiers in a guard expression, minus `defined`, literals and keywords.
/// For Ifdef/Ifndef only the macro name is returned.
std::set<std::string> extract_constants(std::string_view guard_expr,
                                        DirectiveKind kind = DirectiveKind::If,
                                        std::vector<Diagnostic>* diagnostics = nullptr,
                                        int line = 0);

/// Per-line dump: `<line-number> <V|M> <depth> <guard-chain>`.
std::string debug_dump(std::string_view file_text, const GuardPolicy& policy = {});

struct VariabilitySummary {
  std::size_t files = 0;
  std::size_t variable_files = 0;
  long long total_loc = 0;
  long long mandatory_loc = 0;
  long long variable_loc = 0;
  double pct_mandatory = 0.0;
  double pct_variable = 0.0;
  std::set<std::string> constants;

  std::size_t constant_count() const { return constants.size(); }
};

/// Throws EmptyProject when `maps` is empty.
VariabilitySummary project_variability_summary(std::span<const VariabilityMap> maps);

}  // namespace varexp::variability
