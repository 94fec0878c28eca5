#include "tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "common.hpp"
#include "status.hpp"

namespace crossrank {

SearchSpace& SearchSpace::real(const std::string& name, double lo, double hi) {
  params.push_back({name, ParamKind::Real, lo, hi, {}});
  return *this;
}
SearchSpace& SearchSpace::log_real(const std::string& name, double lo, double hi) {
  params.push_back({name, ParamKind::LogReal, lo, hi, {}});
  return *this;
}
SearchSpace& SearchSpace::integer(const std::string& name, int64_t lo, int64_t hi) {
  params.push_back({name, ParamKind::Int, static_cast<double>(lo),
                    static_cast<double>(hi), {}});
  return *this;
}
SearchSpace& SearchSpace::log_integer(const std::string& name, int64_t lo,
                                      int64_t hi) {
  params.push_back({name, ParamKind::LogInt, static_cast<double>(lo),
                    static_cast<double>(hi), {}});
  return *this;
}
SearchSpace& SearchSpace::categorical(const std::string& name,
                                      std::vector<std::string> choices) {
  params.push_back({name, ParamKind::Categorical, 0, 0, std::move(choices)});
  return *this;
}

double get_real(const TrialConfig& config, const std::string& name) {
  auto it = config.find(name);
  if (it == config.end()) fail(Status::InvalidArgument, "missing param " + name);
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<int64_t>(&it->second))
    return static_cast<double>(*i);
  fail(Status::InvalidArgument, "param " + name + " is not numeric");
}

int64_t get_int(const TrialConfig& config, const std::string& name) {
  auto it = config.find(name);
  if (it == config.end()) fail(Status::InvalidArgument, "missing param " + name);
  if (const auto* i = std::get_if<int64_t>(&it->second)) return *i;
  fail(Status::InvalidArgument, "param " + name + " is not an integer");
}

const std::string& get_choice(const TrialConfig& config, const std::string& name) {
  auto it = config.find(name);
  if (it == config.end()) fail(Status::InvalidArgument, "missing param " + name);
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  fail(Status::InvalidArgument, "param " + name + " is not categorical");
}

std::string config_to_string(const TrialConfig& config) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, value] : config) {
    if (!first) out += ",";
    first = false;
    out += "\"" + name + "\":";
    if (const auto* d = std::get_if<double>(&value)) out += format_double(*d);
    else if (const auto* i = std::get_if<int64_t>(&value)) out += std::to_string(*i);
    else out += "\"" + std::get<std::string>(value) + "\"";
  }
  out += "}";
  return out;
}

TrialJournal::TrialJournal(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    const auto cols = split(strip_cr(line), '\t');
    if (cols.size() < 2) continue;
    double objective;
    if (parse_double(cols[1], &objective))
      cache_[std::string(cols[0])] = objective;
  }
}

bool TrialJournal::lookup(const std::string& config_key, double* objective) const {
  auto it = cache_.find(config_key);
  if (it == cache_.end()) return false;
  *objective = it->second;
  return true;
}

void TrialJournal::record(const std::string& config_key, double objective) {
  cache_[config_key] = objective;
  std::filesystem::create_directories(path_.parent_path().empty()
                                          ? "."
                                          : path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) fail(Status::Io, "cannot append to journal " + path_.string());
  out << config_key << '\t' << format_double(objective) << '\t' << now_ms()
      << '\n';
}

namespace {

ParamValue sample_uniform(const ParamSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (spec.kind) {
    case ParamKind::Real:
      return spec.lo + (spec.hi - spec.lo) * unit(rng);
    case ParamKind::LogReal: {
      const double l = std::log(spec.lo), h = std::log(spec.hi);
      return std::exp(l + (h - l) * unit(rng));
    }
    case ParamKind::Int: {
      std::uniform_int_distribution<int64_t> d(static_cast<int64_t>(spec.lo),
                                               static_cast<int64_t>(spec.hi));
      return d(rng);
    }
    case ParamKind::LogInt: {
      const double l = std::log(spec.lo), h = std::log(spec.hi);
      const double v = std::exp(l + (h - l) * unit(rng));
      return std::clamp<int64_t>(static_cast<int64_t>(std::llround(v)),
                                 static_cast<int64_t>(spec.lo),
                                 static_cast<int64_t>(spec.hi));
    }
    case ParamKind::Categorical: {
      std::uniform_int_distribution<size_t> d(0, spec.choices.size() - 1);
      return spec.choices[d(rng)];
    }
  }
  fail(Status::Internal, "bad param kind");
}

ParamValue perturb(const ParamSpec& spec, const ParamValue& center,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kRelSigma = 0.15;
  switch (spec.kind) {
    case ParamKind::Real: {
      const double x = std::get<double>(center) +
                       gauss(rng) * kRelSigma * (spec.hi - spec.lo);
      return std::clamp(x, spec.lo, spec.hi);
    }
    case ParamKind::LogReal: {
      const double l = std::log(spec.lo), h = std::log(spec.hi);
      const double x =
          std::log(std::get<double>(center)) + gauss(rng) * kRelSigma * (h - l);
      return std::exp(std::clamp(x, l, h));
    }
    case ParamKind::Int: {
      const double x = static_cast<double>(std::get<int64_t>(center)) +
                       gauss(rng) * std::max(1.0, kRelSigma * (spec.hi - spec.lo));
      return std::clamp<int64_t>(static_cast<int64_t>(std::llround(x)),
                                 static_cast<int64_t>(spec.lo),
                                 static_cast<int64_t>(spec.hi));
    }
    case ParamKind::LogInt: {
      const double l = std::log(spec.lo), h = std::log(spec.hi);
      const double x = std::log(static_cast<double>(std::get<int64_t>(center))) +
                       gauss(rng) * kRelSigma * (h - l);
      const double v = std::exp(std::clamp(x, l, h));
      int64_t iv = static_cast<int64_t>(std::llround(v));
      // make sure small steps can still move an integer
      if (iv == std::get<int64_t>(center) && unit(rng) < 0.5)
        iv += (unit(rng) < 0.5 ? -1 : 1);
      return std::clamp<int64_t>(iv, static_cast<int64_t>(spec.lo),
                                 static_cast<int64_t>(spec.hi));
    }
    case ParamKind::Categorical: {
      if (unit(rng) < 0.3) {
        std::uniform_int_distribution<size_t> d(0, spec.choices.size() - 1);
        return spec.choices[d(rng)];
      }
      return center;
    }
  }
  fail(Status::Internal, "bad param kind");
}

}  // namespace

Trial search(const SearchSpace& space,
             const std::function<double(const TrialConfig&)>& objective,
             int budget, uint64_t seed, TrialJournal* journal) {
  if (budget < 1) fail(Status::InvalidArgument, "search budget must be >= 1");
  for (const auto& spec : space.params) {
    if (spec.kind == ParamKind::Categorical) {
      if (spec.choices.empty())
        fail(Status::InvalidArgument, "empty choices for " + spec.name);
      continue;
    }
    if (!(spec.lo < spec.hi) || !std::isfinite(spec.lo) || !std::isfinite(spec.hi))
      fail(Status::InvalidArgument, "bad bounds for " + spec.name);
    if ((spec.kind == ParamKind::LogReal || spec.kind == ParamKind::LogInt) &&
        spec.lo <= 0)
      fail(Status::InvalidArgument, "log-scale bounds must be positive for " + spec.name);
  }

  std::mt19937_64 rng(seed);
  const int explore = (budget + 2) / 3;
  Trial best;
  best.objective = -std::numeric_limits<double>::infinity();
  best.seed = seed;
  bool have_best = false;

  for (int t = 0; t < budget; ++t) {
    TrialConfig config;
    if (t < explore || !have_best) {
      for (const auto& spec : space.params)
        config[spec.name] = sample_uniform(spec, rng);
    } else {
      for (const auto& spec : space.params)
        config[spec.name] = perturb(spec, best.config.at(spec.name), rng);
    }
    const std::string key = config_to_string(config);
    double value;
    if (!(journal && journal->lookup(key, &value))) {
      value = objective(config);
      if (std::isnan(value)) value = -std::numeric_limits<double>::infinity();
      if (journal) journal->record(key, value);
    }
    if (!have_best || value > best.objective) {
      best.config = std::move(config);
      best.objective = value;
      have_best = true;
    }
  }
  return best;
}

}  // namespace crossrank
