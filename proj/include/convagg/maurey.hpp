#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "convagg/model.hpp"

namespace convagg::maurey {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// m = ceil(sqrt(n / log(e M / sqrt(n)))). Only defined for M > sqrt(n).
std::size_t choose_m(std::size_t n, std::size_t M);

struct NetSpec {
  std::size_t M = 0;
  std::size_t m = 0;
  std::uint64_t cardinality_N = 0;
};

/// C(M + m - 1, m) when it fits in 64 bits.
std::optional<std::uint64_t> multiset_count(std::size_t M, std::size_t m);

NetSpec net_spec(std::size_t M, std::size_t m);

struct CardinalityBound {
  std::optional<std::uint64_t> exact;  ///< empty on overflow
  double log_exact = 0.0;              ///< log C(M + m - 1, m)
  double bound = 0.0;                  ///< (2 e M / m)^m, may be +inf
  double log_bound = 0.0;
  bool holds = false;                  ///< exact <= bound, decided in log space
};

CardinalityBound net_cardinality_bound(std::size_t M, std::size_t m);

/// All size-m multisets over {0..M-1} in lexicographic order.
std::vector<Multiset> enumerate_net(std::size_t M, std::size_t m,
                                    std::size_t cap = kDefaultEnumerationCap);
std::vector<Multiset> enumerate_net(const Dictionary& dict, std::size_t m,
                                    std::size_t cap = kDefaultEnumerationCap);

/// m i.i.d. categorical draws with P[j] = w_j.
Multiset sparsify_random(const SimplexWeights& w, std::size_t m, std::uint64_t seed);

/// E_Theta R((1/m) sum Theta_i) = R(combine(w)) + variance_term(w) / m.
double expected_sparsified_risk(const SimplexWeights& w, std::size_t m, const Dictionary& dict,
                                const DiscreteProblem& p);

struct NetGap {
  double net_min = 0.0;         ///< min over the net of the population risk
  double hull_min = 0.0;        ///< population risk of the hull minimizer
  double gap = 0.0;             ///< net_min - hull_min
  double variance_bound = 0.0;  ///< variance_term(w*) / m
  double crude_bound = 0.0;     ///< 4 b^2 / m
  std::size_t net_size = 0;
};

/// Compares the best net element with the population hull minimizer.
/// `jobs` spreads the net scan over threads; the result does not depend on it.
NetGap net_approximation_gap(const Dictionary& dict, const DiscreteProblem& p, std::size_t m,
                             int jobs = 1, std::size_t cap = kDefaultEnumerationCap);

struct SparsifiedIdentity {
  double lhs = 0.0;         ///< E'_Theta R_n(multiset average), by enumeration
  double rhs = 0.0;         ///< R_n(combine(w)) + correction
  double correction = 0.0;  ///< (1/m)(1/n) sum_i Var_Theta(y_i - Theta(x_i))
  double correction_bound = 0.0;  ///< (2b)^2 / m with b = max(|y|, |f|) on the sample
};

/// Empirical counterpart of the sparsification identity. The left side sums
/// over multisets with multinomial probabilities.
SparsifiedIdentity empirical_sparsified_identity(const SimplexWeights& w, std::size_t m,
                                                 const Dictionary& dict, const SampleSet& s,
                                                 std::size_t cap = kDefaultEnumerationCap);

}  // namespace convagg::maurey
