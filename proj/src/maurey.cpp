#include "convagg/maurey.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "convagg/parallel.hpp"
#include "convagg/risk.hpp"
#include "convagg/solver.hpp"

namespace convagg::maurey {

namespace {

// Calls visit(indices) for each nondecreasing sequence of length m over
// {0..M-1}, in lexicographic order.
template <typename Visit>
void for_each_multiset(std::size_t M, std::size_t m, Visit&& visit) {
  std::vector<std::size_t> idx(m, 0);
  for (;;) {
    visit(idx);
    std::size_t pos = m;
    while (pos > 0 && idx[pos - 1] == M - 1) --pos;
    if (pos == 0) return;
    const std::size_t next = idx[pos - 1] + 1;
    for (std::size_t k = pos - 1; k < m; ++k) idx[k] = next;
  }
}

void check_cap(std::size_t M, std::size_t m, std::size_t cap, const char* op) {
  const auto count = multiset_count(M, m);
  if (!count || *count > cap)
    throw std::length_error(std::string(op) + ": net of C(" + std::to_string(M + m - 1) + ", " +
                            std::to_string(m) + ") elements exceeds the enumeration cap of " +
                            std::to_string(cap));
}

}  // namespace

std::size_t choose_m(std::size_t n, std::size_t M) {
  if (n < 1) throw std::invalid_argument("choose_m: n must be >= 1");
  const auto mm = static_cast<unsigned __int128>(M);
  if (mm * mm <= n)
    throw std::domain_error("choose_m: requires M > sqrt(n) (got n = " + std::to_string(n) +
                            ", M = " + std::to_string(M) + ")");
  const double dn = static_cast<double>(n);
  const double log_term = 1.0 + std::log(static_cast<double>(M) / std::sqrt(dn));
  const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(dn / log_term)));
  return std::max<std::size_t>(m, 1);
}

std::optional<std::uint64_t> multiset_count(std::size_t M, std::size_t m) {
  if (M < 1) throw std::invalid_argument("multiset_count: M must be >= 1");
  // C(M - 1 + i, i) from C(M - 2 + i, i - 1); every intermediate is an integer.
  unsigned __int128 c = 1;
  for (std::size_t i = 1; i <= m; ++i) {
    c = c * (M - 1 + i);
    c /= i;
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return static_cast<std::uint64_t>(c);
}

NetSpec net_spec(std::size_t M, std::size_t m) {
  const auto count = multiset_count(M, m);
  if (!count) throw std::overflow_error("net_spec: cardinality exceeds 64 bits");
  return {M, m, *count};
}

CardinalityBound net_cardinality_bound(std::size_t M, std::size_t m) {
  if (M < 1 || m < 1) throw std::invalid_argument("net_cardinality_bound: M, m must be >= 1");
  const double dM = static_cast<double>(M), dm = static_cast<double>(m);
  CardinalityBound out;
  out.exact = multiset_count(M, m);
  out.log_exact = std::lgamma(dM + dm) - std::lgamma(dm + 1.0) - std::lgamma(dM);
  out.log_bound = dm * (std::log(2.0) + 1.0 + std::log(dM) - std::log(dm));
  out.bound = std::exp(out.log_bound);
  if (out.exact && std::isfinite(out.bound))
    out.holds = static_cast<double>(*out.exact) <= out.bound;
  else
    out.holds = out.log_exact <= out.log_bound;
  return out;
}

std::vector<Multiset> enumerate_net(std::size_t M, std::size_t m, std::size_t cap) {
  if (M < 1 || m < 1) throw std::invalid_argument("enumerate_net: M, m must be >= 1");
  check_cap(M, m, cap, "enumerate_net");
  std::vector<Multiset> out;
  out.reserve(*multiset_count(M, m));
  for_each_multiset(M, m, [&](const std::vector<std::size_t>& idx) { out.emplace_back(idx, M); });
  return out;
}

std::vector<Multiset> enumerate_net(const Dictionary& dict, std::size_t m, std::size_t cap) {
  return enumerate_net(dict.size(), m, cap);
}

Multiset sparsify_random(const SimplexWeights& w, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sparsify_random: m must be >= 1");
  std::vector<double> cumulative(w.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) cumulative[j] = (acc += w[j]);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, acc);
  std::vector<std::size_t> draws(m);
  for (auto& d : draws) {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), unif(rng));
    d = std::min(static_cast<std::size_t>(it - cumulative.begin()), w.size() - 1);
  }
  return Multiset(std::move(draws), w.size());
}

double expected_sparsified_risk(const SimplexWeights& w, std::size_t m, const Dictionary& dict,
                                const DiscreteProblem& p) {
  if (m < 1) throw std::invalid_argument("expected_sparsified_risk: m must be >= 1");
  return population_risk(combine(dict, w), p) +
         variance_term(w, dict, p) / static_cast<double>(m);
}

NetGap net_approximation_gap(const Dictionary& dict, const DiscreteProblem& p, std::size_t m,
                             int jobs, std::size_t cap) {
  const auto net = enumerate_net(dict, m, cap);
  std::vector<double> risks(net.size());
  parallel_for(net.size(), jobs,
               [&](std::size_t i) { risks[i] = population_risk(multiset_average(dict, net[i]), p); });

  SolverConfig cfg;
  cfg.tolerance = 1e-14;
  cfg.max_iterations = 1'000'000;
  const auto hull = minimize_over_hull(dict, p, cfg);

  NetGap out;
  out.net_size = net.size();
  out.net_min = *std::min_element(risks.begin(), risks.end());
  out.hull_min = hull.risk;
  out.gap = out.net_min - out.hull_min;
  out.variance_bound = variance_term(hull.weights, dict, p) / static_cast<double>(m);
  out.crude_bound = 4.0 * p.bound_b() * p.bound_b() / static_cast<double>(m);
  return out;
}

SparsifiedIdentity empirical_sparsified_identity(const SimplexWeights& w, std::size_t m,
                                                 const Dictionary& dict, const SampleSet& s,
                                                 std::size_t cap) {
  if (m < 1) throw std::invalid_argument("empirical_sparsified_identity: m must be >= 1");
  if (w.size() != dict.size())
    throw std::invalid_argument("empirical_sparsified_identity: dimension mismatch");
  check_cap(dict.size(), m, cap, "empirical_sparsified_identity");

  SparsifiedIdentity out;
  for_each_multiset(dict.size(), m, [&](const std::vector<std::size_t>& idx) {
    // multinomial(m; counts) * prod w_j^{c_j}, accumulated run by run.
    double prob = 1.0;
    std::size_t placed = 0;
    for (std::size_t k = 0; k < m;) {
      std::size_t run = 1;
      while (k + run < m && idx[k + run] == idx[k]) ++run;
      for (std::size_t r = 1; r <= run; ++r)
        prob *= w[idx[k]] * static_cast<double>(placed + r) / static_cast<double>(r);
      placed += run;
      k += run;
    }
    if (prob == 0.0) return;
    out.lhs += prob * empirical_risk(multiset_average(dict, Multiset(idx, dict.size())), s);
  });

  out.correction = empirical_variance_term(w, dict, s) / static_cast<double>(m);
  out.rhs = empirical_risk(combine(dict, w), s) + out.correction;

  double b = 0.0;
  for (const Sample& z : s.pairs()) {
    b = std::max(b, std::abs(z.y));
    for (std::size_t j = 0; j < dict.size(); ++j) b = std::max(b, std::abs(dict.value(j, z.x)));
  }
  out.correction_bound = 4.0 * b * b / static_cast<double>(m);
  return out;
}

}  // namespace convagg::maurey
