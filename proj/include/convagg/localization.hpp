#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "convagg/model.hpp"

namespace convagg::localization {

/// How the class is localized at level lambda.
enum class Localization {
  /// V(G)_lambda = {alpha g : 0 <= alpha <= 1, P(alpha g) <= lambda}
  star_hull,
  /// G_lambda = {g : P g <= lambda}
  level_set,
};

/// Excess-loss class of a segment, L_g = l_g - l_{g*}, g* the population risk
/// minimizer on the segment.
struct SegmentExcessLoss {
  Segment segment;
};

/// {f in span(F) : P f^2 <= lambda}. Star-shaped already, so both
/// localizations coincide.
struct SpanBall {
  Dictionary dictionary;
};

/// Finite class of functions on the pair space, one value per problem atom.
struct EnumeratedClass {
  std::vector<FunctionVector> functions;
};

struct LocalizedClass {
  std::variant<SegmentExcessLoss, SpanBall, EnumeratedClass> members;
  double level_lambda = 1.0;
  Localization localization = Localization::star_hull;
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
};

/// Monte Carlo estimate of E sup_{h in class} |(P - P_n) h| over `reps`
/// datasets of size n. P-quantities are exact. Replication r draws from the
/// stream derive_seed(seed, r); results do not depend on `jobs`.
MonteCarloEstimate localized_sup(const LocalizedClass& cls, const DiscreteProblem& p,
                                 std::size_t n, std::size_t reps, std::uint64_t seed,
                                 int jobs = 1);

/// Number of theta points in the safeguard grid used for segment suprema.
inline constexpr std::size_t kThetaGrid = 10'000;

/// 8 b sqrt(mu / n)
double rademacher_segment_bound(double b, double mu, std::size_t n);
/// 8 b sqrt(M' mu / n)
double rademacher_span_bound(double b, double mu, std::size_t n, std::size_t m_prime);

/// Dimension of span(F) in L2(P_X).
std::size_t span_rank(const Dictionary& dict, const DiscreteProblem& p);

/// sum_{i >= 0} 2^{-i} per_level(2^{i+1} lambda), truncated once a term falls
/// below 1e-15 of the partial sum. Throws std::domain_error on divergence.
double peeling_bound(const std::function<double(double)>& per_level, double lambda);

/// Smallest lambda with bound(lambda) <= lambda / 8, by geometric bisection to
/// relative precision 1e-9. bound(lambda)/lambda must be non-increasing.
/// Returns the bracket floor when the bound is satisfied everywhere; throws
/// std::domain_error when no crossing exists below the bracket ceiling.
double fixed_point(const std::function<double(double)>& bound);

inline constexpr double kFixedPointFloor = 1e-300;
inline constexpr double kFixedPointCeiling = 1e300;

/// c0 b^2 (x + 2 log N) / n
double gamma(double x, double b, std::size_t N, std::size_t n, double c0);
/// max(lambda*, c0 (B + sup_norm) x / n)
double rho_n(double x, double lambda_star, double B, double sup_norm, std::size_t n, double c0);

struct BinomialInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval at 95%.
BinomialInterval wilson_interval(std::size_t successes, std::size_t trials);

/// Per-dataset outcome of the uniform segment isomorphism experiment.
struct SegmentDeviations {
  std::size_t n = 0;
  double bound_b = 0.0;
  /// Smallest threshold level at which the dataset satisfies
  /// |P L - P_n L| <= max(P L, level)/2 on every tested segment.
  std::vector<double> required_level;
  /// max over segments of P L at the segment's empirical risk minimizer.
  std::vector<double> erm_excess;
};

SegmentDeviations simulate_segment_deviations(const std::vector<Segment>& segments,
                                              const DiscreteProblem& p, std::size_t n,
                                              std::size_t reps, std::uint64_t seed, int jobs = 1);

struct IsomorphismReport {
  double x = 0.0;
  double c0 = 0.0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double bound = 0.0;         ///< 4 exp(-x)
  double gamma_or_rho = 0.0;  ///< the threshold level gamma(x)
  double rate = 0.0;
  double std_error = 0.0;
  BinomialInterval interval;
  /// Non-violating datasets on which the segment ERM has P L > gamma(x).
  std::size_t implication_failures = 0;
  /// Set when trials are too few to resolve 4 exp(-x).
  bool underpowered = false;
};

IsomorphismReport isomorphism_report(const SegmentDeviations& dev, double x, double c0,
                                     std::size_t pool_size);

/// `count` segments between distinct pairs of pool functions drawn uniformly.
std::vector<Segment> random_segments(const Dictionary& pool, std::size_t count,
                                     std::uint64_t seed);

/// Segments are drawn from a pool of `pool_size` functions (N in gamma).
IsomorphismReport isomorphism_check(const std::vector<Segment>& segments,
                                    const DiscreteProblem& p, std::size_t n, double x, double c0,
                                    std::size_t pool_size, std::size_t reps, std::uint64_t seed,
                                    int jobs = 1);

/// Smallest c0 whose violation rate is at most min(1, 4 exp(-x)) for every x.
double calibrate_c0(const SegmentDeviations& dev, const std::vector<double>& x_levels,
                    std::size_t pool_size);

}  // namespace convagg::localization
