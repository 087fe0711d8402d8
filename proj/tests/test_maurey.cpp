#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "convagg/maurey.hpp"
#include "convagg/risk.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace convagg;
using namespace convagg::maurey;

namespace {
Dictionary zero_one() { return Dictionary({{0.0}, {1.0}}); }
DiscreteProblem half() { return DiscreteProblem({{0, 0.5, 1.0}}, 1.0); }
}  // namespace

TEST_CASE("choose_m") {
  CHECK(choose_m(10000, 1000) == 56);
  CHECK(choose_m(1, 2) == 1);
  // e M / sqrt(n) = e puts the log term at 1
  CHECK(choose_m(100, 11) == static_cast<std::size_t>(std::ceil(std::sqrt(100.0 / (1.0 + std::log(1.1))))));
  CHECK(choose_m(10000, 101) == 100);
  CHECK_THROWS_AS(choose_m(100, 10), std::domain_error);
  CHECK_THROWS_AS(choose_m(100, 3), std::domain_error);
}

TEST_CASE("enumerate_net examples") {
  const auto net = enumerate_net(3, 2);
  REQUIRE(net.size() == 6);
  const std::vector<std::vector<std::size_t>> want{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (std::size_t i = 0; i < 6; ++i) CHECK(net[i].indices() == want[i]);
  CHECK(enumerate_net(1, 7).size() == 1);
  CHECK(enumerate_net(2, 3).size() == 4);
  CHECK_THROWS_AS(enumerate_net(30, 10, 1000), std::length_error);
}

TEST_CASE("net elements are distinct and counted by stars and bars") {
  for (unsigned M = 1; M <= 7; ++M)
    for (unsigned m = 1; m <= 5; ++m) {
      const auto net = enumerate_net(M, m);
      CHECK(net.size() == oracle::binomial(M + m - 1, m));
      std::set<std::vector<std::size_t>> distinct;
      for (const auto& ms : net) distinct.insert(ms.indices());
      CHECK(distinct.size() == net.size());
    }
}

TEST_CASE("cardinality bound examples") {
  const auto a = net_cardinality_bound(3, 2);
  CHECK(*a.exact == 6);
  CHECK(a.bound == doctest::Approx(9 * M_E * M_E));
  CHECK(a.holds);
  const auto b = net_cardinality_bound(1, 1);
  CHECK(*b.exact == 1);
  CHECK(b.bound == doctest::Approx(2 * M_E));
  const auto c = net_cardinality_bound(50, 10);
  CHECK(*c.exact == 62828356305ULL);
  CHECK(c.bound == doctest::Approx(std::pow(10 * M_E, 10)).epsilon(1e-12));
  CHECK(c.holds);
  CHECK(c.log_exact == doctest::Approx(std::log(62828356305.0)).epsilon(1e-12));
}

TEST_CASE("cardinality bound decided in log space past 64 bits") {
  const auto big = net_cardinality_bound(100000, 40);
  CHECK_FALSE(big.exact.has_value());
  CHECK(big.holds);
  CHECK(big.log_exact <= big.log_bound);
}

TEST_CASE("sparsify_random") {
  const auto v = sparsify_random(SimplexWeights::vertex(4, 2), 5, 1);
  CHECK(v.indices() == std::vector<std::size_t>(5, 2));
  CHECK(sparsify_random(SimplexWeights::uniform(3), 1, 7).m() == 1);
  const auto w = SimplexWeights({0.2, 0.5, 0.3});
  CHECK(sparsify_random(w, 9, 42) == sparsify_random(w, 9, 42));
}

TEST_CASE("sparsified risk identity: reference instance") {
  const auto w = SimplexWeights({0.5, 0.5});
  CHECK(expected_sparsified_risk(w, 4, zero_one(), half()) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(oracle::sparsified_risk({{0.0}, {1.0}}, {0.5, 0.5}, 4, {{0, 0.5, 1.0}}) ==
        doctest::Approx(0.0625).epsilon(1e-14));
}

TEST_CASE("sparsified risk identity against sequence enumeration") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto in = fixtures::random_instance(rng, 4, 3);
    const auto w = fixtures::random_simplex(rng, 3);
    const double got = expected_sparsified_risk(SimplexWeights(w), 3, in.dictionary(), in.problem());
    CHECK(std::abs(got - oracle::sparsified_risk(in.functions, w, 3, in.atoms)) <= 1e-12);
  }
  // a vertex has no variance
  const auto in = fixtures::random_instance(rng, 4, 3);
  const auto p = in.problem();
  const auto d = in.dictionary();
  for (std::size_t m = 1; m <= 4; ++m)
    CHECK(expected_sparsified_risk(SimplexWeights::vertex(3, 1), m, d, p) ==
          doctest::Approx(population_risk(in.functions[1], p)).epsilon(1e-14));
}

TEST_CASE("Monte Carlo sparsification agrees with the identity") {
  std::mt19937_64 rng(32);
  const auto in = fixtures::random_instance(rng, 6, 4);
  const auto p = in.problem();
  const auto d = in.dictionary();
  const SimplexWeights w(fixtures::random_simplex(rng, 4));
  const std::size_t m = 3, reps = 100000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const double v = population_risk(multiset_average(d, sparsify_random(w, m, r)), p);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  CHECK(std::abs(mean - expected_sparsified_risk(w, m, d, p)) <= 3 * se);
}

TEST_CASE("net approximation gap") {
  // Y = 1/2: even m hits 1/2 exactly, odd m misses by 1/(2m)
  for (std::size_t m = 1; m <= 6; ++m) {
    const auto g = net_approximation_gap(zero_one(), half(), m);
    const double want = m % 2 == 0 ? 0.0 : 1.0 / (4.0 * m * m);
    CHECK(g.gap == doctest::Approx(want).epsilon(1e-9));
    CHECK(g.gap <= 0.25 / m + 1e-12);
    CHECK(g.variance_bound == doctest::Approx(0.25 / m).epsilon(1e-6));
  }
  // regression function is a vertex
  Dictionary d({{0.1, 0.9}, {0.7, -0.3}});
  DiscreteProblem p({{0, 0.7, 0.4}, {1, -0.3, 0.6}}, 1.0);
  CHECK(std::abs(net_approximation_gap(d, p, 3).gap) <= 1e-12);

  std::mt19937_64 rng(33);
  for (int t = 0; t < 20; ++t) {
    const auto in = fixtures::random_instance(rng, 5, 3);
    const auto g = net_approximation_gap(in.dictionary(), in.problem(), 1 + t % 4);
    CHECK(g.gap >= -1e-12);
    CHECK(g.gap <= g.variance_bound + 1e-12);
    CHECK(g.variance_bound <= g.crude_bound);
  }
}

TEST_CASE("empirical sparsified identity") {
  const auto w = SimplexWeights({0.5, 0.5});
  SampleSet s({{0, 0.5}, {0, 0.5}, {0, 0.5}});
  const auto id = empirical_sparsified_identity(w, 2, zero_one(), s);
  CHECK(id.lhs == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(id.rhs == doctest::Approx(0.125).epsilon(1e-14));

  std::mt19937_64 rng(34);
  const auto in = fixtures::random_instance(rng, 6, 3);
  const auto d = in.dictionary();
  const auto sample = fixtures::random_sample(rng, in.atoms, 10);
  const auto v = empirical_sparsified_identity(SimplexWeights::vertex(3, 2), 3, d, sample);
  CHECK(v.lhs == doctest::Approx(empirical_risk(in.functions[2], sample)).epsilon(1e-13));
  CHECK(v.rhs == doctest::Approx(v.lhs).epsilon(1e-13));

  const auto wr = fixtures::random_simplex(rng, 3);
  const auto r = empirical_sparsified_identity(SimplexWeights(wr), 3, d, sample);
  CHECK(std::abs(r.lhs - r.rhs) <= 1e-12);
  CHECK(std::abs(r.lhs - oracle::sparsified_empirical_risk(in.functions, wr, 3, sample.pairs())) <= 1e-12);
  CHECK(r.correction <= r.correction_bound);
}
