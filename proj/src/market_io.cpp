#include "market_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "common.hpp"
#include "ranking.hpp"
#include "status.hpp"

namespace crossrank {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Status::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view sv = strip_cr(line);
    lines.emplace_back(sv);
  }
  return lines;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, size_t lineno,
                             const std::string& what) {
  fail(Status::Parse,
       path.string() + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

std::vector<RatingTriple> parse_ratings(const std::filesystem::path& path,
                                        bool has_rating_column) {
  const auto lines = read_lines(path);
  std::vector<RatingTriple> triples;
  triples.reserve(lines.size());
  std::string header;
  bool header_known = false;
  for (size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    if (header_known && line == header) continue;  // repeated header
    const auto cols = split(line, '\t');
    if (has_rating_column) {
      if (cols.size() != 3)
        parse_fail(path, n + 1, "expected 3 tab-separated columns, got " +
                                    std::to_string(cols.size()));
      double rating;
      if (!parse_double(cols[2], &rating)) {
        if (n == 0) {  // header line detected by non-numeric rating column
          header = line;
          header_known = true;
          continue;
        }
        parse_fail(path, n + 1, "non-numeric rating '" + std::string(cols[2]) + "'");
      }
      if (!std::isfinite(rating))
        parse_fail(path, n + 1, "non-finite rating");
      if (rating < 0.0 || rating > 5.0)
        parse_fail(path, n + 1, "rating out of [0, 5]: " + format_double(rating));
      if (cols[0].empty() || cols[1].empty())
        parse_fail(path, n + 1, "empty token");
      triples.push_back({std::string(cols[0]), std::string(cols[1]), rating});
    } else {
      if (cols.size() != 2 && cols.size() != 3)
        parse_fail(path, n + 1, "expected 2 or 3 tab-separated columns, got " +
                                    std::to_string(cols.size()));
      if (cols[0].empty() || cols[1].empty())
        parse_fail(path, n + 1, "empty token");
      triples.push_back({std::string(cols[0]), std::string(cols[1]), 1.0});
    }
  }
  return triples;
}

std::vector<CandidateSlate> parse_run(const std::filesystem::path& path,
                                      int slate_size) {
  const auto lines = read_lines(path);
  std::vector<CandidateSlate> slates;
  std::unordered_set<std::string> seen_users;
  for (size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2)
      parse_fail(path, n + 1, "expected 'user<TAB>item,item,...'");
    CandidateSlate slate;
    slate.user = std::string(cols[0]);
    if (slate.user.empty()) parse_fail(path, n + 1, "empty user token");
    if (!seen_users.insert(slate.user).second)
      parse_fail(path, n + 1, "duplicate user " + slate.user);
    const auto items = split(cols[1], ',');
    if (static_cast<int>(items.size()) != slate_size)
      parse_fail(path, n + 1,
                 "user " + slate.user + ": slate size " +
                     std::to_string(items.size()) + " != " +
                     std::to_string(slate_size));
    std::unordered_set<std::string_view> dedup;
    slate.candidates.reserve(items.size());
    for (auto item : items) {
      if (item.empty()) parse_fail(path, n + 1, "empty item token");
      if (!dedup.insert(item).second)
        parse_fail(path, n + 1, "user " + slate.user + ": duplicate candidate " +
                                    std::string(item));
      slate.candidates.emplace_back(item);
    }
    slates.push_back(std::move(slate));
  }
  return slates;
}

std::unordered_map<std::string, std::string> parse_qrels(
    const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::unordered_map<std::string, std::string> qrels;
  for (size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 3)
      parse_fail(path, n + 1, "expected 'user<TAB>item<TAB>relevance'");
    int64_t rel;
    if (!parse_int(cols[2], &rel) || rel != 1)
      parse_fail(path, n + 1, "relevance must be 1, got '" + std::string(cols[2]) + "'");
    const std::string user(cols[0]);
    const std::string item(cols[1]);
    if (user.empty() || item.empty()) parse_fail(path, n + 1, "empty token");
    if (!qrels.emplace(user, item).second)
      parse_fail(path, n + 1, "second positive for user " + user);
  }
  return qrels;
}

void write_submission(std::span<const ScoredSlate> slates,
                      const std::filesystem::path& path) {
  for (const auto& s : slates) {
    if (s.items.size() != s.score.size() ||
        (!s.tie_score.empty() && s.tie_score.size() != s.items.size()))
      fail(Status::InvalidArgument, "write_submission: size mismatch for user " + s.user);
    for (double v : s.score)
      if (!std::isfinite(v))
        fail(Status::Numeric, "write_submission: non-finite score for user " + s.user);
    for (double v : s.tie_score)
      if (!std::isfinite(v))
        fail(Status::Numeric, "write_submission: non-finite tie score for user " + s.user);
  }
  std::string out;
  for (const auto& s : slates) {
    const auto order = rank_order(s.score, s.tie_score, s.items);
    for (size_t r = 0; r < order.size(); ++r) {
      const int32_t c = order[r];
      out += s.user;
      out += '\t';
      out += s.items[c];
      out += '\t';
      out += std::to_string(r + 1);
      out += '\t';
      out += format_double(s.score[c]);
      out += '\n';
    }
  }
  atomic_write_file(path, out);
}

MarketBundle load_market_bundle(const std::filesystem::path& dir,
                                const std::string& market_id,
                                int slate_size) {
  MarketBundle bundle;
  bundle.market_id = market_id;
  const auto train_path = dir / "train.tsv";
  const auto core_path = dir / "train_5core.tsv";
  const auto valid_run_path = dir / "valid_run.tsv";
  const auto valid_qrel_path = dir / "valid_qrel.tsv";
  const auto test_run_path = dir / "test_run.tsv";
  for (const auto& p : {train_path, core_path, valid_run_path, valid_qrel_path,
                        test_run_path}) {
    if (!std::filesystem::exists(p))
      fail(Status::Io, "missing market file " + p.string());
  }

  bundle.train = build_store(parse_ratings(train_path, true));
  bundle.train_5core = build_store(parse_ratings(core_path, false));
  bundle.valid_slates = parse_run(valid_run_path, slate_size);
  bundle.test_slates = parse_run(test_run_path, slate_size);
  bundle.valid_qrels = parse_qrels(valid_qrel_path);

  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : {train_path, core_path, valid_run_path, valid_qrel_path,
                        test_run_path}) {
    const uint64_t fh = hash_file(p.string());
    h = fnv1a64(&fh, sizeof(fh), h);
  }
  bundle.input_hash = h;

  for (auto& slate : bundle.valid_slates) {
    auto it = bundle.valid_qrels.find(slate.user);
    if (it == bundle.valid_qrels.end())
      fail(Status::Parse, market_id + ": no qrel for validation user " + slate.user);
    bool found = false;
    for (const auto& c : slate.candidates)
      if (c == it->second) { found = true; break; }
    if (!found)
      fail(Status::Parse, market_id + ": positive " + it->second +
                              " not among candidates of user " + slate.user);
    slate.positive = it->second;
  }

  auto check_slates = [&](const std::vector<CandidateSlate>& slates,
                          const char* split_name) {
    for (const auto& slate : slates) {
      const auto u = bundle.train.user_map.find(slate.user);
      if (!u)
        fail(Status::Parse, market_id + ": " + split_name + " user " +
                                slate.user + " not in train");
      std::unordered_set<std::string> rated;
      for (int32_t i : bundle.train.by_user.row_indices(*u))
        rated.insert(bundle.train.item_map.token(i));
      if (auto cu = bundle.train_5core.user_map.find(slate.user)) {
        for (int32_t i : bundle.train_5core.by_user.row_indices(*cu))
          rated.insert(bundle.train_5core.item_map.token(i));
      }
      for (const auto& c : slate.candidates) {
        if (rated.count(c))
          fail(Status::Parse, market_id + ": candidate " + c + " of " +
                                  split_name + " user " + slate.user +
                                  " overlaps training items");
      }
    }
  };
  check_slates(bundle.valid_slates, "valid");
  check_slates(bundle.test_slates, "test");
  return bundle;
}

}  // namespace crossrank
