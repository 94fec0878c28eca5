#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace crossrank {

// 64-bit FNV-1a. Used for cache keys and schema hashes, not for security.
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull);
uint64_t hash_file(const std::string& path);
std::string hash_hex(uint64_t h);

// splitmix64 step; derives independent sub-seeds from one master seed.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// Shortest round-trip decimal representation; deterministic per bit pattern.
std::string format_double(double v);

// Strict parse of a full token. Accepts "nan"/"inf" (caller checks finiteness).
bool parse_double(std::string_view token, double* out);
bool parse_int(std::string_view token, int64_t* out);

std::vector<std::string_view> split(std::string_view s, char delim);
std::string_view strip_cr(std::string_view line);

// Writes to a temp file in the target directory, then renames into place.
// Creates parent directories as needed.
void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Runs fn(i) for i in [begin, end) on up to `jobs` threads. Rethrows the
// first exception after all workers join. jobs <= 1 runs inline.
void parallel_for(int64_t begin, int64_t end, int jobs,
                  const std::function<void(int64_t)>& fn);

int64_t now_ms();

}  // namespace crossrank
