#pragma once

#include <cstddef>
#include <string_view>

namespace convagg::rates {

enum class Regime { small_M, large_M };

std::string_view to_string(Regime r);

/// small_M iff M <= sqrt(n), decided in integers (M^2 <= n).
Regime regime(std::size_t n, std::size_t M);

/// Optimal convex-aggregation rate: M/n when M <= sqrt(n), otherwise
/// sqrt(log(e M / sqrt(n)) / n). Natural log.
double psi_c(std::size_t n, std::size_t M);

/// sqrt(log(e M / sqrt(n)) / n) evaluated regardless of regime.
double psi_large_branch(std::size_t n, std::size_t M);

/// min(M/n, sqrt(log M / n)). For M = 1 the log branch degenerates to 0; we
/// return 1/n instead.
double phi_n(std::size_t n, std::size_t M);

/// phi_n / psi_c. At least 1 whenever n >= 8 (n >= e^2).
double gap_ratio(std::size_t n, std::size_t M);

/// c0 * b^2 * max(psi_c(n, M), x / n).
double theorem_a_bound(std::size_t n, std::size_t M, double x, double b, double c0);

struct RatePoint {
  std::size_t n = 0;
  std::size_t M = 0;
  double psi = 0.0;
  double phi = 0.0;
  Regime regime = Regime::small_M;
};

RatePoint rate_point(std::size_t n, std::size_t M);

}  // namespace convagg::rates
