#include <doctest.h>

#include <algorithm>

#include "varexp/error.hpp"
#include "varexp/text.hpp"
#include "varexp/variability.hpp"

using namespace varexp;
using namespace varexp::variability;

namespace {

std::string golden(const std::string& name) { return text::read_file(std::string(VAREXP_GOLDEN_DIR) + "/" + name); }

std::string classes(const VariabilityMap& m) {
  std::string s;
  for (auto c : m.line_class) s += c == LineClass::Variable ? 'V' : 'M';
  return s;
}

}  // namespace

TEST_CASE("excerpt from a bison parser is entirely variable") {
  const auto map = build_variability_map(golden("bison_excerpt.c"));
  CHECK(map.constants == std::set<std::string>{"yyoverflow", "YYLSP_NEEDED"});
  CHECK(map.total_loc() == 44);
  CHECK(map.variable_loc == 44);
  CHECK(map.mandatory_loc == 0);
  CHECK(map.diagnostics.empty());
  CHECK(debug_dump(golden("bison_excerpt.c")) == golden("bison_excerpt.dump"));
}

TEST_CASE("four line ifdef: directives count as variable") {
  const auto map = build_variability_map("#ifdef X\nint a;\n#endif\nint b;\n");
  CHECK(classes(map) == "VVVM");
  CHECK(map.variable_loc == 3);
  CHECK(map.mandatory_loc == 1);
  CHECK(map.constants == std::set<std::string>{"X"});
}

TEST_CASE("include guard policy") {
  const std::string header = "#ifndef FOO_H\n#define FOO_H\nint foo(void);\n#ifdef BAR\nint bar;\n#endif\n#endif\n";
  SUBCASE("excluded by default") {
    const auto map = build_variability_map(header);
    CHECK(classes(map) == "MMMVVVM");
    CHECK(map.constants == std::set<std::string>{"BAR"});
  }
  SUBCASE("counted when asked") {
    const auto map = build_variability_map(header, GuardPolicy{false, true});
    CHECK(map.variable_loc == 7);
    CHECK(map.constants == std::set<std::string>{"FOO_H", "BAR"});
  }
  SUBCASE("plain guard header has no variable lines") {
    const auto map = build_variability_map("#ifndef G_H\n#define G_H\nint g;\n#endif\n");
    CHECK(map.variable_loc == 0);
    CHECK(map.constants.empty());
  }
  SUBCASE("an #else at guard level means it is not a guard") {
    const auto map = build_variability_map("#ifndef G_H\n#define G_H\nint g;\n#else\nint h;\n#endif\n");
    CHECK(map.variable_loc == 6);
  }
  SUBCASE("code after the closing #endif means it is not a guard") {
    const auto map = build_variability_map("#ifndef G_H\n#define G_H\nint g;\n#endif\n#ifdef Z\n#endif\n");
    CHECK(classes(map) == "VVVVVV");
  }
}

TEST_CASE("constant conditions") {
  const std::string text = "int a;\n#if 0\nint dead;\n#endif\n";
  CHECK(classes(build_variability_map(text)) == "MVVV");
  CHECK(classes(build_variability_map(text, GuardPolicy{true, false})) == "MMMM");
  // #if 1 ... #else: both branches are constant, so neither counts.
  CHECK(classes(build_variability_map("#if 1\nint a;\n#else\nint b;\n#endif\n", GuardPolicy{true, false})) ==
        "MMMMM");
}

TEST_CASE("comments hide directives and are ignored for constants") {
  CHECK(classes(build_variability_map("/*\n#ifdef X\n*/\nint a;\n")) == "MMMM");
  CHECK(classes(build_variability_map("// #ifdef X\nint a;\n")) == "MM");
  const auto map = build_variability_map("#ifdef A /* B */\nint x;\n#endif // C\n");
  CHECK(map.constants == std::set<std::string>{"A"});
  const auto inline_comment = build_variability_map("#if defined(A) /* || defined(B) */ && C\n#endif\n");
  CHECK(inline_comment.constants == std::set<std::string>{"A", "C"});
}

TEST_CASE("continued directive lines") {
  const auto map = build_variability_map("#if defined(A) && \\\n    B > 2\nint x;\n#endif\nint y;\n");
  CHECK(classes(map) == "VVVVM");
  CHECK(map.constants == std::set<std::string>{"A", "B"});
}

TEST_CASE("elif chains and nesting") {
  const auto map = build_variability_map(
      "int a;\n#if X\n#elif defined Y\n#else\n# ifdef Z\nint z;\n# endif\n#endif\nint b;\n");
  CHECK(classes(map) == "MVVVVVVVM");
  CHECK(map.constants == std::set<std::string>{"X", "Y", "Z"});
}

TEST_CASE("malformed nesting produces diagnostics, never aborts") {
  SUBCASE("stray endif") {
    const auto map = build_variability_map("int a;\n#endif\nint b;\n");
    CHECK(map.variable_loc == 0);
    REQUIRE(map.diagnostics.size() == 1);
    CHECK(map.diagnostics[0].line == 2);
  }
  SUBCASE("unterminated if") {
    const auto map = build_variability_map("#if A\nint x;\n");
    CHECK(map.variable_loc == 2);
    REQUIRE(map.diagnostics.size() == 1);
    CHECK(map.diagnostics[0].line == 1);
  }
  SUBCASE("else without if") {
    const auto map = build_variability_map("#else\nint a;\n");
    CHECK(map.variable_loc == 0);
    CHECK(map.diagnostics.size() == 1);
  }
}

TEST_CASE("constant extraction") {
  CHECK(extract_constants("M", DirectiveKind::Ifdef) == std::set<std::string>{"M"});
  CHECK(extract_constants("defined(A) && B > 2") == std::set<std::string>{"A", "B"});
  CHECK(extract_constants("__GNUC__ >= 4 && !defined __clang__") == std::set<std::string>{"__GNUC__", "__clang__"});
  CHECK(extract_constants("0x10 > 1UL || 'a' == 97").empty());
  CHECK(extract_constants("true || sizeof(int)").empty());
  CHECK(extract_constants("__has_include(<stdio.h>) && HAVE_X") == std::set<std::string>{"HAVE_X"});
  std::vector<Diagnostic> diags;
  CHECK(extract_constants("A @ B", DirectiveKind::If, &diags, 7) == std::set<std::string>{"A", "B"});
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].line == 7);
}

TEST_CASE("maps concatenate for balanced files") {
  const std::string f1 = "int a;\n#ifdef X\nint b;\n#endif\n";
  const std::string f2 = "#if Y\n#else\nint c;\n#endif\nint d;\n";
  const auto joined = build_variability_map(f1 + f2);
  CHECK(classes(joined) == classes(build_variability_map(f1)) + classes(build_variability_map(f2)));
}

TEST_CASE("project summary") {
  std::vector<VariabilityMap> maps{build_variability_map("#ifdef X\nint a;\n#endif\nint b;\n", {}, "a.c"),
                                   build_variability_map("int c;\n", {}, "b.c")};
  const auto s = project_variability_summary(maps);
  CHECK(s.files == 2);
  CHECK(s.variable_files == 1);
  CHECK(s.total_loc == 5);
  CHECK(s.variable_loc == 3);
  CHECK(s.pct_variable == doctest::Approx(60.0));
  CHECK(s.pct_mandatory + s.pct_variable == doctest::Approx(100.0));
  CHECK(s.constant_count() == 1);
  CHECK_THROWS_AS(project_variability_summary({}), Error);
}

TEST_CASE("classification is idempotent and tolerates CRLF") {
  const std::string text = "#ifdef X\r\nint a;\r\n#endif\r\nint b;\r\n";
  CHECK(classes(build_variability_map(text)) == "VVVM");
  CHECK(debug_dump(text) == debug_dump(text));
}
