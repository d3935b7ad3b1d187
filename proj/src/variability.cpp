#include "varexp/variability.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <unordered_set>

#include "varexp/error.hpp"

namespace varexp::variability {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\f' || c == '\v' || c == '\r'; }

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  return s;
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view first_identifier(std::string_view s) {
  s = ltrim(s);
  std::size_t n = 0;
  if (s.empty() || !is_ident_start(s.front())) return {};
  while (n < s.size() && is_ident_char(s[n])) ++n;
  return s.substr(0, n);
}

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kKeywords = {
      "auto",     "break",    "case",          "char",           "const",    "continue",
      "default",  "do",       "double",        "else",           "enum",     "extern",
      "float",    "for",      "goto",          "if",             "inline",   "int",
      "long",     "register", "restrict",      "return",         "short",    "signed",
      "sizeof",   "static",   "struct",        "switch",         "typedef",  "union",
      "unsigned", "void",     "volatile",      "while",          "_Bool",    "_Complex",
      "_Imaginary", "_Alignas", "_Alignof",    "_Atomic",        "_Generic", "_Noreturn",
      "_Static_assert", "_Thread_local", "alignas", "alignof",   "bool",     "constexpr",
      "false",    "nullptr",  "static_assert", "thread_local",   "true",     "typeof",
      "typeof_unqual"};
  return kKeywords;
}

// Preprocessor operators whose parenthesized operand is not a macro name.
bool is_has_operator(std::string_view ident) {
  return ident == "__has_include" || ident == "__has_include_next" ||
         ident == "__has_attribute" || ident == "__has_cpp_attribute" ||
         ident == "__has_c_attribute" || ident == "__has_builtin" || ident == "__has_feature" ||
         ident == "__has_extension" || ident == "__has_embed";
}

std::string strip_comments(std::string_view s) {
  std::string out;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      out += c;
      if (c == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      out += c;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const auto end = s.find("*/", i + 2);
      out += ' ';
      if (end == std::string_view::npos) break;
      i = end + 1;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      break;
    } else {
      out += c;
    }
  }
  return out;
}

bool is_constant_condition(std::string_view expr) {
  expr = rtrim(ltrim(expr));
  while (expr.size() >= 2 && expr.front() == '(' && expr.back() == ')') {
    expr = rtrim(ltrim(expr.substr(1, expr.size() - 2)));
  }
  if (expr.empty() || !std::isdigit(static_cast<unsigned char>(expr.front()))) return false;
  std::size_t i = 0;
  while (i < expr.size() && std::isdigit(static_cast<unsigned char>(expr[i]))) ++i;
  while (i < expr.size() && (expr[i] == 'u' || expr[i] == 'U' || expr[i] == 'l' || expr[i] == 'L')) ++i;
  return i == expr.size();
}

DirectiveKind keyword_kind(std::string_view keyword) {
  if (keyword == "if") return DirectiveKind::If;
  if (keyword == "ifdef") return DirectiveKind::Ifdef;
  if (keyword == "ifndef") return DirectiveKind::Ifndef;
  if (keyword == "elif" || keyword == "elifdef" || keyword == "elifndef") return DirectiveKind::Elif;
  if (keyword == "else") return DirectiveKind::Else;
  if (keyword == "endif") return DirectiveKind::Endif;
  return DirectiveKind::NonDirective;
}

struct ScannedLine {
  DirectiveKind kind = DirectiveKind::NonDirective;
  bool starts_directive = false;
  bool is_continuation = false;
  std::string keyword;
  std::string code;  // comment-free text; for directive starts, the text after the keyword
};

ScannedLine scan_line(std::string_view line, ContinuationState& state) {
  ScannedLine out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const bool ends_backslash = !line.empty() && line.back() == '\\';
  const bool continuation = state.continues_line;
  const DirectiveKind inherited = state.continued_kind;

  if (state.in_line_comment) {
    state.in_line_comment = ends_backslash;
    state.continues_line = ends_backslash;
    out.is_continuation = continuation;
    out.kind = continuation ? inherited : DirectiveKind::NonDirective;
    if (!ends_backslash) state.continued_kind = DirectiveKind::NonDirective;
    return out;
  }

  std::string code;
  char quote = 0;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    if (state.in_block_comment) {
      const auto end = line.find("*/", i);
      if (end == std::string_view::npos) {
        i = n;
      } else {
        i = end + 2;
        state.in_block_comment = false;
        code += ' ';
      }
      continue;
    }
    const char c = line[i];
    if (quote) {
      code += c;
      if (c == '\\' && i + 1 < n) {
        code += line[i + 1];
        i += 2;
        continue;
      }
      if (c == quote) quote = 0;
      ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      code += c;
      ++i;
    } else if (c == '/' && i + 1 < n && line[i + 1] == '*') {
      state.in_block_comment = true;
      i += 2;
    } else if (c == '/' && i + 1 < n && line[i + 1] == '/') {
      state.in_line_comment = ends_backslash;
      i = n;
    } else {
      code += c;
      ++i;
    }
  }
  if (!code.empty() && code.back() == '\\') code.pop_back();

  if (continuation) {
    out.is_continuation = true;
    out.kind = inherited;
    out.code = std::move(code);
  } else {
    const auto trimmed = ltrim(code);
    if (!trimmed.empty() && trimmed.front() == '#') {
      const auto rest = ltrim(trimmed.substr(1));
      std::size_t k = 0;
      while (k < rest.size() && is_ident_char(rest[k])) ++k;
      out.starts_directive = true;
      out.keyword = std::string(rest.substr(0, k));
      out.kind = keyword_kind(out.keyword);
      out.code = std::string(rest.substr(k));
    }
  }
  state.continues_line = ends_backslash;
  state.continued_kind = ends_backslash ? out.kind : DirectiveKind::NonDirective;
  return out;
}

struct Directive {
  int first_line = 0;
  std::string keyword;
  DirectiveKind kind = DirectiveKind::NonDirective;
  std::string argument;
};

bool is_conditional(DirectiveKind kind) { return kind != DirectiveKind::NonDirective; }

struct Scan {
  std::vector<Directive> directives;
  std::vector<int> directive_of_line;  // -1 when the line belongs to no directive
  std::vector<bool> is_first_line;
};

Scan scan_text(std::string_view text) {
  Scan scan;
  ContinuationState state;
  int open = -1;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    auto scanned = scan_line(line, state);
    if (scanned.starts_directive) {
      scan.directives.push_back(
          {line_no, std::move(scanned.keyword), scanned.kind, std::move(scanned.code)});
      open = static_cast<int>(scan.directives.size()) - 1;
      scan.directive_of_line.push_back(open);
      scan.is_first_line.push_back(true);
    } else if (scanned.is_continuation && open >= 0) {
      auto& arg = scan.directives[static_cast<std::size_t>(open)].argument;
      arg += ' ';
      arg += scanned.code;
      scan.directive_of_line.push_back(open);
      scan.is_first_line.push_back(false);
    } else {
      scan.directive_of_line.push_back(-1);
      scan.is_first_line.push_back(false);
    }
    if (!state.continues_line) open = -1;
  }
  return scan;
}

// Index of the directive opening an include guard, or -1.
int find_include_guard(const std::vector<Directive>& dirs) {
  if (dirs.size() < 3) return -1;
  if (dirs[0].kind != DirectiveKind::Ifndef || dirs[1].keyword != "define") return -1;
  const auto guard = first_identifier(dirs[0].argument);
  if (guard.empty() || guard != first_identifier(dirs[1].argument)) return -1;
  int depth = 0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    switch (dirs[i].kind) {
      case DirectiveKind::If:
      case DirectiveKind::Ifdef:
      case DirectiveKind::Ifndef:
        ++depth;
        break;
      case DirectiveKind::Elif:
      case DirectiveKind::Else:
        if (depth == 1) return -1;
        break;
      case DirectiveKind::Endif:
        if (--depth == 0) return i + 1 == dirs.size() ? 0 : -1;
        break;
      case DirectiveKind::NonDirective:
        break;
    }
  }
  return -1;
}

std::string frame_label(DirectiveKind kind, std::string_view expr) {
  return std::string(to_string(kind)) + "(" + std::string(rtrim(ltrim(expr))) + ")";
}

struct LineResult {
  bool variable = false;
  int depth = 0;
  std::string chain;
};

class Walker {
 public:
  Walker(const GuardPolicy& policy, bool want_chain) : policy_(policy), want_chain_(want_chain) {}

  template <typename Visit>
  void run(std::string_view text, Visit&& visit) {
    const Scan scan = scan_text(text);
    const int guard =
        policy_.exclude_include_guards ? find_include_guard(scan.directives) : -1;
    std::optional<LineResult> directive_result;
    for (std::size_t i = 0; i < scan.directive_of_line.size(); ++i) {
      const int line = static_cast<int>(i) + 1;
      const int d = scan.directive_of_line[i];
      const bool conditional =
          d >= 0 && is_conditional(scan.directives[static_cast<std::size_t>(d)].kind);
      if (conditional && scan.is_first_line[i]) {
        directive_result = apply(scan.directives[static_cast<std::size_t>(d)], d == guard);
      }
      if (conditional && directive_result) {
        visit(line, *directive_result);
      } else {
        visit(line, LineResult{depth_ > 0, depth_, want_chain_ ? chain() : std::string()});
      }
    }
    for (const auto& frame : stack_) {
      diagnostics_.push_back({frame.frame.opened_at, "unterminated #" +
                                                         std::string(to_string(frame.opened_kind)) +
                                                         " extends to end of file"});
    }
    std::stable_sort(diagnostics_.begin(), diagnostics_.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  }

  std::set<std::string> constants;
  std::vector<Diagnostic> diagnostics_;

 private:
  struct Frame {
    PresenceFrame frame;
    DirectiveKind opened_kind = DirectiveKind::If;
    std::string opening_expr;
    std::string label;
    bool counted = true;
    bool suppressed = false;
    bool all_constant = true;  // every branch guard so far was a literal
  };

  std::string chain() const {
    std::string out;
    for (const auto& f : stack_) {
      if (!f.counted) continue;
      if (!out.empty()) out += " > ";
      out += f.label;
    }
    return out.empty() ? "-" : out;
  }

  bool branch_counted(const Frame& f, bool constant_branch) const {
    return !f.suppressed && !(constant_branch && !policy_.count_constant_conditions);
  }

  LineResult apply(const Directive& d, bool suppressed) {
    const int before = depth_;
    const std::string chain_before = want_chain_ ? chain() : std::string();
    switch (d.kind) {
      case DirectiveKind::If:
      case DirectiveKind::Ifdef:
      case DirectiveKind::Ifndef: {
        Frame f;
        f.frame.branch = d.kind;
        f.frame.guard_expr = std::string(rtrim(ltrim(d.argument)));
        f.frame.opened_at = d.first_line;
        f.opened_kind = d.kind;
        f.opening_expr = f.frame.guard_expr;
        f.frame.constants = guard_constants(d);
        f.suppressed = suppressed;
        f.all_constant = d.kind == DirectiveKind::If && is_constant_condition(d.argument);
        f.counted = branch_counted(f, f.all_constant);
        f.label = frame_label(d.kind, f.frame.guard_expr);
        if (!f.suppressed) constants.insert(f.frame.constants.begin(), f.frame.constants.end());
        if (f.counted) ++depth_;
        stack_.push_back(std::move(f));
        break;
      }
      case DirectiveKind::Elif:
      case DirectiveKind::Else: {
        if (stack_.empty()) {
          diagnostics_.push_back(
              {d.first_line, "#" + d.keyword + " without matching #if ignored"});
          break;
        }
        Frame& f = stack_.back();
        if (d.kind == DirectiveKind::Elif) {
          f.all_constant = f.all_constant && is_constant_condition(d.argument);
          f.frame.guard_expr = std::string(rtrim(ltrim(d.argument)));
          auto extra = guard_constants(d);
          f.frame.constants.insert(extra.begin(), extra.end());
          if (!f.suppressed) constants.insert(extra.begin(), extra.end());
          f.label = frame_label(DirectiveKind::Elif, f.frame.guard_expr);
        } else {
          f.label = frame_label(DirectiveKind::Else, f.opening_expr);
        }
        f.frame.branch = d.kind;
        const bool counted = branch_counted(f, f.all_constant);
        if (counted != f.counted) depth_ += counted ? 1 : -1;
        f.counted = counted;
        break;
      }
      case DirectiveKind::Endif:
        if (stack_.empty()) {
          diagnostics_.push_back({d.first_line, "stray #endif ignored"});
          break;
        }
        if (stack_.back().counted) --depth_;
        stack_.pop_back();
        break;
      case DirectiveKind::NonDirective:
        break;
    }
    const int after = depth_;
    LineResult r;
    r.variable = before > 0 || after > 0;
    r.depth = std::max(before, after);
    if (want_chain_) r.chain = after >= before ? chain() : chain_before;
    return r;
  }

  std::set<std::string> guard_constants(const Directive& d) {
    if (d.kind == DirectiveKind::Ifdef || d.kind == DirectiveKind::Ifndef ||
        d.keyword == "elifdef" || d.keyword == "elifndef") {
      return extract_constants(d.argument, DirectiveKind::Ifdef, &diagnostics_, d.first_line);
    }
    return extract_constants(d.argument, DirectiveKind::If, &diagnostics_, d.first_line);
  }

  const GuardPolicy& policy_;
  bool want_chain_;
  std::vector<Frame> stack_;
  int depth_ = 0;
};

}  // namespace

std::string_view to_string(DirectiveKind kind) {
  switch (kind) {
    case DirectiveKind::If: return "if";
    case DirectiveKind::Ifdef: return "ifdef";
    case DirectiveKind::Ifndef: return "ifndef";
    case DirectiveKind::Elif: return "elif";
    case DirectiveKind::Else: return "else";
    case DirectiveKind::Endif: return "endif";
    case DirectiveKind::NonDirective: return "none";
  }
  return "none";
}

DirectiveKind classify_line(std::string_view raw_line, ContinuationState& state) {
  return scan_line(raw_line, state).kind;
}

std::set<std::string> extract_constants(std::string_view guard_expr, DirectiveKind kind,
                                        std::vector<Diagnostic>* diagnostics, int line) {
  const std::string expr = strip_comments(guard_expr);
  std::set<std::string> out;
  if (kind == DirectiveKind::Ifdef || kind == DirectiveKind::Ifndef) {
    const auto name = first_identifier(expr);
    if (name.empty()) {
      if (diagnostics) diagnostics->push_back({line, "missing macro name"});
    } else {
      out.emplace(name);
    }
    return out;
  }
  const std::string_view s(expr);
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c) || c == '\n') {
      ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      const auto ident = s.substr(i, j - i);
      i = j;
      if (is_has_operator(ident)) {
        while (i < s.size() && is_space(s[i])) ++i;
        if (i < s.size() && s[i] == '(') {
          int depth = 0;
          for (; i < s.size(); ++i) {
            if (s[i] == '(') ++depth;
            if (s[i] == ')' && --depth == 0) {
              ++i;
              break;
            }
          }
        }
        continue;
      }
      if (ident == "defined" || keywords().contains(ident)) continue;
      out.emplace(ident);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      // pp-number, including suffixes and exponents
      ++i;
      while (i < s.size()) {
        if ((s[i] == '+' || s[i] == '-') &&
            (s[i - 1] == 'e' || s[i - 1] == 'E' || s[i - 1] == 'p' || s[i - 1] == 'P')) {
          ++i;
        } else if (is_ident_char(s[i]) || s[i] == '.' || s[i] == '\'') {
          ++i;
        } else {
          break;
        }
      }
    } else if (c == '\'' || c == '"') {
      const auto close = s.find(c, i + 1);
      i = close == std::string_view::npos ? s.size() : close + 1;
    } else if (std::string_view("()!&|<>=+-*/%^~?:,#").find(c) != std::string_view::npos) {
      ++i;
    } else {
      if (diagnostics) {
        diagnostics->push_back({line, std::string("skipped unexpected character '") + c + "'"});
      }
      ++i;
    }
  }
  return out;
}

VariabilityMap build_variability_map(std::string_view file_text, const GuardPolicy& policy,
                                     std::string path) {
  VariabilityMap map;
  map.path = std::move(path);
  Walker walker(policy, false);
  walker.run(file_text, [&](int, const LineResult& r) {
    map.line_class.push_back(r.variable ? LineClass::Variable : LineClass::Mandatory);
    if (r.variable) {
      ++map.variable_loc;
    } else {
      ++map.mandatory_loc;
    }
  });
  map.constants = std::move(walker.constants);
  map.diagnostics = std::move(walker.diagnostics_);
  return map;
}

std::string debug_dump(std::string_view file_text, const GuardPolicy& policy) {
  std::string out;
  Walker walker(policy, true);
  walker.run(file_text, [&](int line, const LineResult& r) {
    out += std::to_string(line);
    out += r.variable ? " V " : " M ";
    out += std::to_string(r.depth);
    out += ' ';
    out += r.chain;
    out += '\n';
  });
  return out;
}

VariabilitySummary project_variability_summary(std::span<const VariabilityMap> maps) {
  if (maps.empty()) throw Error(ErrorCode::EmptyProject, "no source files to summarize");
  VariabilitySummary s;
  for (const auto& m : maps) {
    ++s.files;
    if (m.variable_loc > 0) ++s.variable_files;
    s.total_loc += m.total_loc();
    s.variable_loc += m.variable_loc;
    s.mandatory_loc += m.mandatory_loc;
    s.constants.insert(m.constants.begin(), m.constants.end());
  }
  if (s.total_loc > 0) {
    s.pct_variable = 100.0 * static_cast<double>(s.variable_loc) / static_cast<double>(s.total_loc);
    s.pct_mandatory = 100.0 - s.pct_variable;
  } else {
    s.pct_mandatory = 100.0;
  }
  return s;
}

}  // namespace varexp::variability
