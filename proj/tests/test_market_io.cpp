#include <doctest.h>

#include <map>

#include "market_io.hpp"
#include "status.hpp"
#include "test_util.hpp"

using namespace crossrank;
using testutil::TempDir;
using testutil::read_text;
using testutil::write_text;

TEST_SUITE("market_io") {

TEST_CASE("parse_ratings maps fields directly") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv", "u1\ti3\t5\nu2\ti1\t2.5\n");
  const auto triples = parse_ratings(tmp.path / "r.tsv", true);
  REQUIRE(triples.size() == 2);
  CHECK(triples[0].user == "u1");
  CHECK(triples[0].item == "i3");
  CHECK(triples[0].rating == 5.0);
  CHECK(triples[1].rating == 2.5);
}

TEST_CASE("parse_ratings emits 1.0 for preprocessed files") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv", "u1\ti3\nu2\ti1\n");
  const auto triples = parse_ratings(tmp.path / "r.tsv", false);
  REQUIRE(triples.size() == 2);
  CHECK(triples[0].rating == 1.0);
  CHECK(triples[1].rating == 1.0);
}

TEST_CASE("parse_ratings rejects non-finite ratings") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv", "u1\ti3\tNaN\n");
  CHECK_THROWS_AS(parse_ratings(tmp.path / "r.tsv", true), Error);
  write_text(tmp.path / "r2.tsv", "u1\ti3\tinf\n");
  CHECK_THROWS_AS(parse_ratings(tmp.path / "r2.tsv", true), Error);
}

TEST_CASE("parse_ratings reports the offending line number") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv", "u1\ti1\t3\nu2\ti2\tbad\n");
  try {
    parse_ratings(tmp.path / "r.tsv", true);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.status() == Status::Parse);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("parse_ratings tolerates a header line and repeated headers") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv",
             "userId\titemId\trating\nu1\ti1\t3\nuserId\titemId\trating\nu2\ti2\t4\n");
  const auto triples = parse_ratings(tmp.path / "r.tsv", true);
  REQUIRE(triples.size() == 2);
  CHECK(triples[0].user == "u1");
  CHECK(triples[1].user == "u2");
}

TEST_CASE("parse_ratings rejects wrong column counts") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv", "u1\ti1\t3\t9\n");
  CHECK_THROWS_AS(parse_ratings(tmp.path / "r.tsv", true), Error);
  write_text(tmp.path / "r2.tsv", "u1\n");
  CHECK_THROWS_AS(parse_ratings(tmp.path / "r2.tsv", false), Error);
}

static std::string run_line(const std::string& user, int n, int offset = 0) {
  std::string line = user + "\t";
  for (int i = 0; i < n; ++i) {
    if (i) line += ',';
    line += "i" + std::to_string(offset + i);
  }
  return line + "\n";
}

TEST_CASE("parse_run keeps slates and candidate order") {
  TempDir tmp;
  write_text(tmp.path / "run.tsv", run_line("u1", 100) + run_line("u2", 100, 7));
  const auto slates = parse_run(tmp.path / "run.tsv");
  REQUIRE(slates.size() == 2);
  CHECK(slates[0].user == "u1");
  CHECK_FALSE(slates[0].positive.has_value());
  for (int i = 0; i < 100; ++i)
    CHECK(slates[1].candidates[i] == "i" + std::to_string(7 + i));
}

TEST_CASE("parse_run rejects wrong slate sizes naming the user") {
  TempDir tmp;
  write_text(tmp.path / "run.tsv", run_line("u9", 99));
  try {
    parse_run(tmp.path / "run.tsv");
    FAIL("expected error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("u9") != std::string::npos);
    CHECK(what.find("99") != std::string::npos);
  }
}

TEST_CASE("parse_run rejects duplicate users and duplicate candidates") {
  TempDir tmp;
  write_text(tmp.path / "run.tsv", run_line("u1", 100) + run_line("u1", 100));
  CHECK_THROWS_AS(parse_run(tmp.path / "run.tsv"), Error);
  std::string dup = "u1\t";
  for (int i = 0; i < 100; ++i) dup += (i ? "," : "") + std::string("iX");
  write_text(tmp.path / "run2.tsv", dup + "\n");
  CHECK_THROWS_AS(parse_run(tmp.path / "run2.tsv"), Error);
}

TEST_CASE("parse_qrels basics") {
  TempDir tmp;
  write_text(tmp.path / "q.tsv", "u1\ti7\t1\n");
  const auto qrels = parse_qrels(tmp.path / "q.tsv");
  REQUIRE(qrels.size() == 1);
  CHECK(qrels.at("u1") == "i7");

  write_text(tmp.path / "q2.tsv", "u1\ti7\t1\nu1\ti9\t1\n");
  CHECK_THROWS_AS(parse_qrels(tmp.path / "q2.tsv"), Error);

  write_text(tmp.path / "q3.tsv", "");
  CHECK(parse_qrels(tmp.path / "q3.tsv").empty());

  write_text(tmp.path / "q4.tsv", "u1\ti7\t2\n");
  CHECK_THROWS_AS(parse_qrels(tmp.path / "q4.tsv"), Error);
}

TEST_CASE("build_store averages duplicates") {
  const auto store = testutil::store_from({{"u1", "i1", 3.0}, {"u1", "i1", 5.0}});
  CHECK(store.n_users() == 1);
  CHECK(store.n_items() == 1);
  REQUIRE(store.n_entries() == 1);
  CHECK(store.by_user.values[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("build_store handles singletons and the empty input") {
  const auto store = testutil::store_from({{"u1", "i1", 3.0}});
  CHECK(store.n_users() == 1);
  CHECK(store.n_items() == 1);
  const auto empty = build_store({});
  CHECK(empty.n_users() == 0);
  CHECK(empty.n_items() == 0);
  CHECK(empty.n_entries() == 0);
}

TEST_CASE("build_store with fixed maps rejects unknown tokens") {
  IdMap users, items;
  users.add_or_get("u1");
  items.add_or_get("i1");
  std::vector<RatingTriple> triples{{"u2", "i1", 1.0}};
  CHECK_THROWS_AS(build_store(triples, users, items,
                              {.extend_users = false, .extend_items = false}),
                  Error);
}

TEST_CASE("ratings round-trip through build_store as deduplicated means") {
  TempDir tmp;
  write_text(tmp.path / "r.tsv",
             "u1\ti1\t3\nu1\ti1\t5\nu2\ti1\t2\nu1\ti2\t1\n");
  const auto store = build_store(parse_ratings(tmp.path / "r.tsv", true));
  std::map<std::pair<std::string, std::string>, double> got;
  for (int32_t u = 0; u < store.n_users(); ++u) {
    const auto idx = store.by_user.row_indices(u);
    const auto val = store.by_user.row_values(u);
    for (size_t k = 0; k < idx.size(); ++k)
      got[{store.user_map.token(u), store.item_map.token(idx[k])}] = val[k];
  }
  const std::map<std::pair<std::string, std::string>, double> want = {
      {{"u1", "i1"}, 4.0}, {{"u2", "i1"}, 2.0}, {{"u1", "i2"}, 1.0}};
  CHECK(got == want);
}

TEST_CASE("write_submission orders, ranks and stays deterministic") {
  TempDir tmp;
  std::vector<ScoredSlate> slates(1);
  slates[0].user = "u";
  slates[0].items = {"i2", "i1"};
  slates[0].score = {0.1, 0.9};
  write_submission(slates, tmp.path / "sub.tsv");
  CHECK(read_text(tmp.path / "sub.tsv") == "u\ti1\t1\t0.9\nu\ti2\t2\t0.1\n");

  write_submission(slates, tmp.path / "sub2.tsv");
  CHECK(read_text(tmp.path / "sub.tsv") == read_text(tmp.path / "sub2.tsv"));
}

TEST_CASE("write_submission breaks score ties by the secondary key") {
  TempDir tmp;
  std::vector<ScoredSlate> slates(1);
  slates[0].user = "u";
  slates[0].items = {"i1", "i2"};
  slates[0].score = {0.5, 0.5};
  slates[0].tie_score = {0.1, 0.9};
  write_submission(slates, tmp.path / "sub.tsv");
  const auto text = read_text(tmp.path / "sub.tsv");
  CHECK(text.find("u\ti2\t1") != std::string::npos);
  CHECK(text.find("u\ti1\t2") != std::string::npos);
}

TEST_CASE("write_submission rejects non-finite scores before writing") {
  TempDir tmp;
  std::vector<ScoredSlate> slates(1);
  slates[0].user = "u";
  slates[0].items = {"i1"};
  slates[0].score = {std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(write_submission(slates, tmp.path / "sub.tsv"), Error);
  CHECK_FALSE(std::filesystem::exists(tmp.path / "sub.tsv"));
}

}  // TEST_SUITE
