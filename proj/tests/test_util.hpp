#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "interaction_store.hpp"

namespace crossrank::testutil {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<uint64_t> counter(0);
    path = std::filesystem::temp_directory_path() /
           ("crossrank_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline InteractionStore store_from(
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
  std::vector<RatingTriple> triples;
  for (const auto& [u, i, r] : entries) triples.push_back({u, i, r});
  return build_store(triples);
}

// Random store with ~density fraction of cells filled, ratings in {1..5}.
inline InteractionStore random_store(int n_users, int n_items, double density,
                                     uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> rating(1, 5);
  std::vector<RatingTriple> triples;
  for (int u = 0; u < n_users; ++u) {
    bool any = false;
    for (int i = 0; i < n_items; ++i) {
      if (unit(rng) < density) {
        triples.push_back({"u" + std::to_string(u), "i" + std::to_string(i),
                           static_cast<double>(rating(rng))});
        any = true;
      }
    }
    if (!any)
      triples.push_back({"u" + std::to_string(u),
                         "i" + std::to_string(u % n_items), 3.0});
  }
  return build_store(triples);
}

// Dense copy of the rating matrix, indexed [user][item].
inline std::vector<std::vector<double>> dense_from(const InteractionStore& s) {
  std::vector<std::vector<double>> x(s.n_users(),
                                     std::vector<double>(s.n_items(), 0.0));
  for (int32_t u = 0; u < s.n_users(); ++u) {
    const auto idx = s.by_user.row_indices(u);
    const auto val = s.by_user.row_values(u);
    for (size_t k = 0; k < idx.size(); ++k) x[u][idx[k]] = val[k];
  }
  return x;
}

}  // namespace crossrank::testutil
