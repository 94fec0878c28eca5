#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "status.hpp"
#include "test_util.hpp"
#include "tuner.hpp"

using namespace crossrank;

TEST_SUITE("tuner") {

TEST_CASE("search evaluates exactly the budget") {
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  int calls = 0;
  search(space, [&](const TrialConfig&) { return 0.5 * ++calls / calls; }, 50, 7);
  CHECK(calls == 50);
}

TEST_CASE("constant objective returns that objective") {
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  const auto best = search(space, [](const TrialConfig&) { return 0.5; }, 10, 3);
  CHECK(best.objective == 0.5);
}

TEST_CASE("quadratic objective is located within 0.05 of the optimum") {
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  auto objective = [](double x) { return -(x - 0.7) * (x - 0.7); };
  // grid-scan oracle over the same space
  double oracle_best = -1e9, oracle_x = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    if (objective(x) > oracle_best) {
      oracle_best = objective(x);
      oracle_x = x;
    }
  }
  CHECK(oracle_x == doctest::Approx(0.7).epsilon(1e-9));
  const auto best = search(
      space,
      [&](const TrialConfig& c) { return objective(get_real(c, "x")); }, 200,
      12345);
  CHECK(std::abs(get_real(best.config, "x") - oracle_x) <= 0.05);
}

TEST_CASE("identical seeds produce identical trial sequences") {
  SearchSpace space;
  space.real("x", -2.0, 2.0)
      .log_real("y", 0.1, 10.0)
      .integer("n", 1, 9)
      .log_integer("m", 2, 512)
      .categorical("c", {"a", "b", "c"});
  auto run = [&](uint64_t seed) {
    std::vector<std::string> sequence;
    search(space,
           [&](const TrialConfig& c) {
             sequence.push_back(config_to_string(c));
             return get_real(c, "x");
           },
           40, seed);
    return sequence;
  };
  CHECK(run(99) == run(99));
  CHECK(run(99) != run(100));
}

TEST_CASE("sampled values respect bounds and kinds") {
  SearchSpace space;
  space.real("x", -1.0, 1.0)
      .log_real("y", 1e-3, 1e3)
      .integer("n", 3, 17)
      .log_integer("m", 4, 400)
      .categorical("c", {"red", "green"});
  search(space,
         [&](const TrialConfig& c) {
           const double x = get_real(c, "x");
           const double y = get_real(c, "y");
           const int64_t n = get_int(c, "n");
           const int64_t m = get_int(c, "m");
           const std::string& cat = get_choice(c, "c");
           CHECK(x >= -1.0);
           CHECK(x <= 1.0);
           CHECK(y >= 1e-3);
           CHECK(y <= 1e3);
           CHECK(n >= 3);
           CHECK(n <= 17);
           CHECK(m >= 4);
           CHECK(m <= 400);
           CHECK((cat == "red" || cat == "green"));
           return x;
         },
         200, 4242);
}

TEST_CASE("NaN objectives are recorded as -inf and search continues") {
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  int calls = 0;
  const auto best = search(space,
                           [&](const TrialConfig& c) {
                             ++calls;
                             const double x = get_real(c, "x");
                             if (x < 0.5)
                               return std::numeric_limits<double>::quiet_NaN();
                             return x;
                           },
                           60, 21);
  CHECK(calls == 60);
  CHECK(best.objective >= 0.5);
}

TEST_CASE("returned objective is the max over recorded trials") {
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  std::vector<double> seen;
  const auto best = search(space,
                           [&](const TrialConfig& c) {
                             seen.push_back(std::sin(37 * get_real(c, "x")));
                             return seen.back();
                           },
                           80, 5);
  CHECK(best.objective == *std::max_element(seen.begin(), seen.end()));
}

TEST_CASE("journal replays known configs without re-evaluating") {
  testutil::TempDir tmp;
  SearchSpace space;
  space.real("x", 0.0, 1.0);
  int calls_first = 0, calls_second = 0;
  {
    TrialJournal journal(tmp.path / "trials.tsv");
    search(space, [&](const TrialConfig&) { return ++calls_first * 0.0 + 0.3; },
           25, 9, &journal);
  }
  {
    TrialJournal journal(tmp.path / "trials.tsv");
    const auto best = search(
        space, [&](const TrialConfig&) { return ++calls_second * 0.0 + 0.3; },
        25, 9, &journal);
    CHECK(best.objective == 0.3);
  }
  CHECK(calls_first == 25);
  CHECK(calls_second == 0);  // identical seeded sequence fully replayed
}

}  // TEST_SUITE
