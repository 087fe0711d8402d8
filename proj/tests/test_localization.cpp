#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "convagg/localization.hpp"
#include "convagg/parallel.hpp"
#include "convagg/risk.hpp"
#include "convagg/solver.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace convagg;
using namespace convagg::localization;

namespace {

// Excess-loss functions of a segment on the atoms, one per theta.
std::vector<FunctionVector> segment_losses(const Segment& seg, const DiscreteProblem& p,
                                           std::size_t points) {
  const auto gstar = erm_segment(seg, p).minimizer;
  std::vector<FunctionVector> out;
  for (std::size_t k = 0; k < points; ++k) {
    const auto g = seg.at(static_cast<double>(k) / static_cast<double>(points - 1));
    FunctionVector h;
    for (const auto& a : p.atoms())
      h.push_back((a.y - g[a.x]) * (a.y - g[a.x]) - (a.y - gstar[a.x]) * (a.y - gstar[a.x]));
    out.push_back(std::move(h));
  }
  return out;
}

fixtures::Instance small_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return fixtures::random_instance(rng, 6, 2);
}

}  // namespace

TEST_CASE("rademacher bounds") {
  CHECK(rademacher_segment_bound(1.0, 1.0, 64) == 1.0);
  CHECK(rademacher_segment_bound(1.0, 0.0, 64) == 0.0);
  CHECK(rademacher_segment_bound(1.0, 0.3, 400) == doctest::Approx(2 * rademacher_segment_bound(1.0, 0.3, 1600)));
  CHECK(rademacher_span_bound(1.0, 1.0, 64, 4) == 2.0);
  CHECK(rademacher_span_bound(0.7, 0.2, 50, 1) == rademacher_segment_bound(0.7, 0.2, 50));
  CHECK_THROWS_AS(rademacher_span_bound(1.0, 1.0, 64, 0), std::invalid_argument);
}

TEST_CASE("span rank") {
  DiscreteProblem p({{0, 0.0, 0.3}, {1, 0.0, 0.3}, {2, 0.0, 0.4}}, 1.0);
  Dictionary d({{1.0, 0.0, 0.5}, {0.0, 1.0, -0.5}, {1.0, 0.0, 0.5}});
  CHECK(span_rank(d, p) == 2);
  Dictionary e({{1.0, 0.0, 0.5}, {0.0, 1.0, -0.5}, {1.0, 1.0, 0.0}});
  CHECK(span_rank(e, p) == 2);
  Dictionary f({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  CHECK(span_rank(f, p) == 3);
  // functions that differ only where P_X vanishes coincide in L2(P_X)
  DiscreteProblem q({{0, 0.0, 0.5}, {1, 0.0, 0.5}, {2, 0.0, 0.0}}, 1.0);
  CHECK(span_rank(f, q) == 2);
}

TEST_CASE("peeling bound") {
  CHECK(peeling_bound([](double) { return 0.0; }, 1.0) == 0.0);
  const double closed = 8.0 * std::sqrt(2.0) / (1.0 - 1.0 / std::sqrt(2.0));
  CHECK(closed == doctest::Approx(38.627417).epsilon(1e-7));
  const double got = peeling_bound([](double mu) { return 8.0 * std::sqrt(mu); }, 1.0);
  CHECK(std::abs(got - closed) <= 1e-9 * closed);
  for (double lambda : {0.01, 0.3, 5.0}) {
    const double n = 100.0, b = 0.5;
    auto level = [&](double mu) { return 8.0 * b * std::sqrt(mu / n); };
    const double v = peeling_bound(level, lambda);
    CHECK(std::abs(v - closed * b * std::sqrt(lambda / n)) <= 1e-9 * v);
    CHECK(v >= level(2 * lambda));
  }
  CHECK_THROWS_AS(peeling_bound([](double mu) { return mu; }, 1.0), std::domain_error);
}

TEST_CASE("fixed point") {
  const double c = 38.627417, n = 100.0;
  auto bound = [&](double l) { return c * std::sqrt(l / n); };
  const double ls = fixed_point(bound);
  const double want = 64.0 * c * c / n;
  CHECK(want == doctest::Approx(954.93).epsilon(1e-4));
  CHECK(std::abs(ls - want) <= 1e-9 * want);
  CHECK(bound(ls) <= ls / 8);
  CHECK(bound(ls * (1 - 1e-8)) > ls * (1 - 1e-8) / 8);

  CHECK(fixed_point([](double) { return 0.0; }) == kFixedPointFloor);

  for (double mp : {1.0, 3.0, 9.0}) {
    const double l = fixed_point([&](double x) { return 2.0 * std::sqrt(mp * x / 64.0); });
    CHECK(l == doctest::Approx(256.0 * mp / 64.0).epsilon(1e-8));
  }
  // below the ceiling the ratio never reaches 1/8
  CHECK_THROWS_AS(fixed_point([](double l) { return l; }), std::domain_error);
  CHECK_THROWS_AS(fixed_point([](double l) { return l * l; }), std::domain_error);
}

TEST_CASE("gamma and rho") {
  CHECK(gamma(1.0, 1.0, 6, 100, 1.0) == doctest::Approx(0.045835).epsilon(1e-5));
  CHECK(gamma(0.0, 2.0, 5, 10, 3.0) == doctest::Approx(2 * 3.0 * 4.0 * std::log(5.0) / 10));
  CHECK(rho_n(1.0, 0.5, 16.0, 1.0, 1000, 1.0) == 0.5);
  CHECK(rho_n(10.0, 0.0, 16.0, 1.0, 100, 1.0) == doctest::Approx(1.7));
  CHECK(rho_n(2.0, 0.01, 3.0, 1.0, 10, 0.5) >= 0.01);
}

TEST_CASE("wilson interval") {
  const auto ci = wilson_interval(10, 100);
  CHECK(ci.low < 0.1);
  CHECK(ci.high > 0.1);
  CHECK(wilson_interval(0, 50).low == 0.0);
  CHECK(wilson_interval(0, 0).high == 1.0);
}

TEST_CASE("localized_sup argument checks") {
  const auto in = small_instance(1);
  LocalizedClass cls{EnumeratedClass{{FunctionVector(in.atoms.size(), 0.1)}}, 1.0};
  CHECK_THROWS_AS(localized_sup(cls, in.problem(), 10, 1, 0), std::invalid_argument);
  cls.level_lambda = 0.0;
  CHECK_THROWS_AS(localized_sup(cls, in.problem(), 10, 5, 0), std::invalid_argument);
}

TEST_CASE("single function: two independent estimators of E|(P - P_n) g|") {
  const auto in = small_instance(2);
  const auto p = in.problem();
  FunctionVector g;
  double pg = 0.0;
  for (const auto& a : in.atoms) {
    g.push_back(a.y * a.y + 0.1);
    pg += a.prob * g.back();
  }
  const std::size_t n = 30, reps = 4000;
  const auto est = localized_sup(LocalizedClass{EnumeratedClass{{g}}, pg + 1.0}, p, n, reps, 5);

  std::mt19937_64 rng(99);
  std::vector<double> probs;
  for (const auto& a : in.atoms) probs.push_back(a.prob);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  double sum = 0.0, sq = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    double emp = 0.0;
    for (std::size_t i = 0; i < n; ++i) emp += g[pick(rng)] / n;
    const double v = std::abs(pg - emp);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  CHECK(std::abs(est.estimate - mean) <= 3 * std::hypot(est.std_error, se));
}

TEST_CASE("star hull shrinks to zero and is monotone in lambda") {
  const auto in = small_instance(3);
  const auto p = in.problem();
  const Segment seg(in.functions[0], in.functions[1]);
  double prev_ratio = INFINITY;
  std::vector<double> est;
  for (double lambda : {1e-8, 1e-4, 1e-2, 1e-1}) {
    const auto e = localized_sup(LocalizedClass{SegmentExcessLoss{seg}, lambda}, p, 40, 200, 7);
    const double ratio = e.estimate / lambda;
    CHECK(ratio <= prev_ratio * (1 + 1e-9));
    prev_ratio = ratio;
    est.push_back(e.estimate);
  }
  // near g* the deviation is linear and P L quadratic, so the sup scales like sqrt(lambda)
  CHECK(est[0] <= 1e-2 * est[1] * 1.01);
  CHECK(est[0] > 0.0);
}

TEST_CASE("segment supremum matches an enumerated theta grid on the same datasets") {
  const auto in = small_instance(4);
  const auto p = in.problem();
  const Segment seg(in.functions[0], in.functions[1]);
  const auto grid = segment_losses(seg, p, 20001);
  for (auto loc : {Localization::star_hull, Localization::level_set})
    for (double lambda : {0.005, 0.05, 10.0}) {
      const auto exact = localized_sup(LocalizedClass{SegmentExcessLoss{seg}, lambda, loc}, p, 25, 50, 11);
      const auto enumerated = localized_sup(LocalizedClass{EnumeratedClass{grid}, lambda, loc}, p, 25, 50, 11);
      CHECK(exact.estimate >= enumerated.estimate - 1e-12);
      CHECK(exact.estimate <= enumerated.estimate + 1e-3 * (enumerated.estimate + 1e-6));
    }
}

TEST_CASE("span ball of one function reduces to a scaled single function") {
  const auto in = small_instance(5);
  const auto p = in.problem();
  const auto& f = in.functions[0];
  double pf2 = 0.0;
  for (const auto& a : in.atoms) pf2 += a.prob * f[a.x] * f[a.x];
  const double lambda = 0.2;
  const double k = std::sqrt(lambda / pf2);
  FunctionVector h;
  for (const auto& a : in.atoms) h.push_back(k * f[a.x]);
  const auto span = localized_sup(LocalizedClass{SpanBall{Dictionary({f})}, lambda}, p, 20, 100, 3);
  const auto single = localized_sup(LocalizedClass{EnumeratedClass{{h}}, 1e9}, p, 20, 100, 3);
  CHECK(span.estimate == doctest::Approx(single.estimate).epsilon(1e-10));
}

TEST_CASE("segment estimate respects the symmetrization bound") {
  const auto in = small_instance(6);
  const auto p = in.problem();
  const Segment seg(in.functions[0], in.functions[1]);
  for (double mu : {0.01, 0.04, 0.16}) {
    const auto e = localized_sup(LocalizedClass{SegmentExcessLoss{seg}, mu, Localization::level_set}, p, 256, 300, 8);
    CHECK(e.estimate <= rademacher_segment_bound(in.b, mu, 256) + 3 * e.std_error);
  }
}

TEST_CASE("required level matches a brute-force scan") {
  const auto in = small_instance(7);
  const auto p = in.problem();
  const Segment seg(in.functions[0], in.functions[1]);
  const std::size_t n = 20, reps = 30;
  const std::uint64_t seed = 17;
  const auto dev = simulate_segment_deviations({seg}, p, n, reps, seed);

  const auto gstar = erm_segment(seg, p).minimizer;
  const AtomSampler sampler(p);
  for (std::size_t r = 0; r < reps; ++r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::vector<std::size_t> idx;
    sampler.draw_into(n, rng, idx);
    std::vector<Sample> pairs;
    for (auto a : idx) pairs.push_back({in.atoms[a].x, in.atoms[a].y});
    double need = 0.0;
    for (std::size_t k = 0; k <= 200000; ++k) {
      const auto g = seg.at(k / 200000.0);
      const double pl = oracle::risk(in.atoms, g) - oracle::risk(in.atoms, gstar);
      const double pnl = oracle::empirical_risk(pairs, g) - oracle::empirical_risk(pairs, gstar);
      const double d = std::abs(pl - pnl);
      if (d > pl / 2) need = std::max(need, 2 * d);
    }
    CHECK(dev.required_level[r] >= need - 1e-12);
    CHECK(dev.required_level[r] <= need + 1e-3 * need + 1e-12);
  }
}

TEST_CASE("isomorphism report") {
  std::mt19937_64 rng(8);
  const auto in = fixtures::random_instance(rng, 12, 6);
  const auto p = in.problem();
  const auto segs = random_segments(in.dictionary(), 5, 1);
  const auto dev = simulate_segment_deviations(segs, p, 64, 400, 2);

  // |P L - P_n L| <= 8 b^2, so gamma >= 16 b^2 is never exceeded
  const auto huge = isomorphism_report(dev, 1e4, 1.0, 6);
  CHECK(huge.gamma_or_rho > 16.0);
  CHECK(huge.violations == 0);
  CHECK(huge.underpowered);
  CHECK(huge.bound == doctest::Approx(4 * std::exp(-1e4)));

  const std::vector<double> xs{1.0, 2.0, 3.0};
  const double c0 = calibrate_c0(dev, xs, 6);
  CHECK(c0 > 0.0);
  for (double x : xs) {
    const auto r = isomorphism_report(dev, x, c0, 6);
    CHECK(r.rate <= std::min(1.0, r.bound));
    CHECK(r.implication_failures == 0);
    CHECK(r.interval.low <= r.rate);
    CHECK(r.interval.high >= r.rate);
    CHECK(r.gamma_or_rho == doctest::Approx(gamma(x, 1.0, 6, 64, c0)));
  }
  // smaller c0 violates more often
  const auto tight = isomorphism_report(dev, 3.0, 0.5 * c0, 6);
  CHECK(tight.violations >= isomorphism_report(dev, 3.0, c0, 6).violations);
}

TEST_CASE("segment at its own minimizer never violates") {
  // both endpoints equal the population minimizer: L = 0 identically
  DiscreteProblem p({{0, 0.2, 0.5}, {1, -0.4, 0.5}}, 1.0);
  const Segment seg({0.2, -0.4}, {0.2, -0.4});
  const auto dev = simulate_segment_deviations({seg}, p, 10, 50, 3);
  for (double v : dev.required_level) CHECK(v == 0.0);
  CHECK(isomorphism_report(dev, 1.0, 1e-9, 2).violations == 0);
}

TEST_CASE("random segments use distinct endpoints") {
  Dictionary pool({{0.0}, {0.5}, {1.0}});
  for (const auto& s : random_segments(pool, 50, 4)) CHECK(s.endpoint_i() != s.endpoint_j());
  CHECK_THROWS_AS(random_segments(Dictionary(std::vector<FunctionVector>{{0.0}}), 1, 0), std::invalid_argument);
}
