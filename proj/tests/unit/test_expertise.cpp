#include <doctest.h>

#include <cmath>

#include "varexp/error.hpp"
#include "varexp/expertise.hpp"

using namespace varexp;
using namespace varexp::expertise;

namespace {

/// One file "f.c": the first listed developer creates it, then every
/// developer makes the given number of (further) commits.
attribution::ContributionLedger file_history(const std::vector<std::pair<std::string, int>>& commits) {
  std::vector<miner::CommitRecord> history;
  std::vector<attribution::TouchRecord> touches;
  int n = 0;
  for (const auto& [dev, count] : commits) {
    for (int i = 0; i < count; ++i) {
      miner::CommitRecord r;
      r.commit_hash = "c" + std::to_string(n++);
      r.author = {dev, dev, {}};
      miner::FileChange c;
      c.path = "f.c";
      c.change_kind = history.empty() ? miner::ChangeKind::Added : miner::ChangeKind::Modified;
      c.line_changes.push_back({miner::LineKind::Addition, 1, "x"});
      r.file_changes.push_back(c);
      touches.push_back({r.author, "f.c", r.commit_hash, 0, 1});
      history.push_back(std::move(r));
    }
  }
  return attribution::build_ledger(touches, history);
}

const ExpertiseScore& of(const std::vector<ExpertiseScore>& scores, const std::string& dev) {
  for (const auto& s : scores)
    if (s.developer_key == dev) return s;
  throw std::runtime_error("no score for " + dev);
}

}  // namespace

TEST_CASE("doa closed form") {
  CHECK(doa(1, 0, 0) == 3.293 + 1.098);
  CHECK(doa(0, 0, 0) == 3.293);
  CHECK(doa(1, 10, 50) == doctest::Approx(4.76888).epsilon(1e-6));
  CHECK(doa(0, 1, 100) == doctest::Approx(1.975).epsilon(1e-3));
}

TEST_CASE("doa monotonicity") {
  for (long k = 0; k < 50; ++k) {
    CHECK(doa(0, k + 1, 7) > doa(0, k, 7));
    CHECK(doa(1, 3, k + 1) < doa(1, 3, k));
  }
}

TEST_CASE("author thresholds are checked independently") {
  CHECK(is_author(3.293, 0.76));
  CHECK_FALSE(is_author(3.293, 0.75));
  CHECK_FALSE(is_author(3.2929999, 1.0));
  CHECK(is_author(kDoaIntercept, std::nextafter(0.75, 1.0)));
  CHECK_FALSE(is_major(5.0));
  CHECK(is_major(std::nextafter(5.0, 6.0)));
}

TEST_CASE("sole contributor is the author") {
  const auto ledger = file_history({{"a", 3}});
  const auto scores = doa_scores(ledger, "f.c");
  REQUIRE(scores.size() == 1);
  CHECK(scores[0].fa == 1);
  CHECK(scores[0].dl == 3);
  CHECK(scores[0].ac == 0);
  CHECK(scores[0].doa == doctest::Approx(4.883));
  CHECK(scores[0].doa_n == 1.0);
  CHECK(scores[0].is_author);
}

TEST_CASE("creator versus late contributor") {
  const auto ledger = file_history({{"a", 1}, {"b", 1}});
  const auto scores = doa_scores(ledger, "f.c");
  const auto& a = of(scores, "a");
  const auto& b = of(scores, "b");
  CHECK(a.doa == doa(1, 1, 1));
  CHECK(b.doa == doa(0, 1, 1));
  CHECK(a.doa_n == 1.0);
  CHECK(b.doa_n == doctest::Approx(b.doa / a.doa));
  CHECK(b.is_author == (b.doa / a.doa > 0.75 && b.doa >= 3.293));
}

TEST_CASE("ties at the maximum all get doa_n of one") {
  // Neither b nor c created the file, and both made two commits.
  const auto ledger = file_history({{"a", 1}, {"b", 2}, {"c", 2}});
  const auto scores = doa_scores(ledger, "f.c");
  CHECK(of(scores, "b").doa == of(scores, "c").doa);
  CHECK(of(scores, "b").doa_n == of(scores, "c").doa_n);
}

TEST_CASE("ownership percentages and majors") {
  SUBCASE("75/25") {
    const auto scores = ownership_scores(file_history({{"a", 3}, {"b", 1}}), "f.c");
    CHECK(of(scores, "a").ownership_pct == 75.0);
    CHECK(of(scores, "b").ownership_pct == 25.0);
    CHECK(of(scores, "a").is_major);
    CHECK(of(scores, "b").is_major);
  }
  SUBCASE("25 single commits: nobody above 5%") {
    std::vector<std::pair<std::string, int>> devs;
    for (int i = 0; i < 25; ++i) devs.push_back({"d" + std::to_string(i), 1});
    const auto ledger = file_history(devs);
    const auto scores = ownership_scores(ledger, "f.c");
    double total = 0;
    for (const auto& s : scores) {
      CHECK(s.ownership_pct == 4.0);
      CHECK_FALSE(s.is_major);
      total += s.ownership_pct;
    }
    CHECK(total == doctest::Approx(100.0).epsilon(1e-12));
    std::vector<std::string> paths{"f.c"};
    CHECK(ExpertiseTable(ledger, paths).experts_of("f.c", Metric::Ownership).empty());
  }
  SUBCASE("95/5: exactly five percent is not major") {
    const auto scores = ownership_scores(file_history({{"a", 19}, {"b", 1}}), "f.c");
    CHECK(of(scores, "b").ownership_pct == 5.0);
    CHECK_FALSE(of(scores, "b").is_major);
    CHECK(of(scores, "a").is_major);
  }
}

TEST_CASE("expertise table") {
  const auto ledger = file_history({{"a", 2}, {"b", 1}});
  std::vector<std::string> paths{"f.c"};
  const ExpertiseTable table(ledger, paths);
  CHECK(table.experts_of("f.c", Metric::Doa) == std::set<std::string>{"a"});
  CHECK(table.experts_of("f.c", Metric::Ownership) == std::set<std::string>{"a", "b"});
  CHECK_THROWS_AS(table.experts_of("nope.c", Metric::Doa), Error);
  CHECK_THROWS_AS(doa_scores(ledger, "nope.c"), Error);
  CHECK(table.to_csv() ==
        "path,developer_key,fa,dl,ac,doa,doa_n,ownership_pct,is_author,is_major\n"
        "f.c,a,1,2,1,4.496500,1.000000,66.666667,true,true\n"
        "f.c,b,0,1,2,3.104345,0.690392,33.333333,false,true\n");
}
