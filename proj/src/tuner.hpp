#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace crossrank {

enum class ParamKind { Real, LogReal, Int, LogInt, Categorical };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Real;
  double lo = 0;
  double hi = 0;
  std::vector<std::string> choices;  // Categorical only
};

struct SearchSpace {
  std::vector<ParamSpec> params;

  SearchSpace& real(const std::string& name, double lo, double hi);
  SearchSpace& log_real(const std::string& name, double lo, double hi);
  SearchSpace& integer(const std::string& name, int64_t lo, int64_t hi);
  SearchSpace& log_integer(const std::string& name, int64_t lo, int64_t hi);
  SearchSpace& categorical(const std::string& name,
                           std::vector<std::string> choices);
};

using ParamValue = std::variant<double, int64_t, std::string>;
using TrialConfig = std::map<std::string, ParamValue>;

double get_real(const TrialConfig& config, const std::string& name);
int64_t get_int(const TrialConfig& config, const std::string& name);
const std::string& get_choice(const TrialConfig& config, const std::string& name);
std::string config_to_string(const TrialConfig& config);

struct Trial {
  TrialConfig config;
  double objective = 0;
  uint64_t seed = 0;
};

// Append-only TSV journal of evaluated trials. When reopened it feeds results
// back to search() so a resumed run skips already-evaluated configurations.
class TrialJournal {
 public:
  explicit TrialJournal(std::filesystem::path path);
  bool lookup(const std::string& config_key, double* objective) const;
  void record(const std::string& config_key, double objective);

 private:
  std::filesystem::path path_;
  std::map<std::string, double> cache_;
};

// Seeded black-box maximization: random exploration for the first
// ceil(budget/3) trials, then Gaussian perturbation of the incumbent.
// Evaluates exactly `budget` configurations and returns the best trial.
// An objective returning NaN is recorded as -inf and the search continues.
Trial search(const SearchSpace& space,
             const std::function<double(const TrialConfig&)>& objective,
             int budget, uint64_t seed, TrialJournal* journal = nullptr);

}  // namespace crossrank
