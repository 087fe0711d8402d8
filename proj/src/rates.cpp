#include "convagg/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace convagg::rates {

namespace {

void require_positive(std::size_t n, std::size_t M) {
  if (n < 1 || M < 1) throw std::invalid_argument("rates: n and M must be >= 1");
}

}  // namespace

std::string_view to_string(Regime r) { return r == Regime::small_M ? "small-M" : "large-M"; }

Regime regime(std::size_t n, std::size_t M) {
  require_positive(n, M);
  // M <= sqrt(n)  <=>  M^2 <= n for integers; avoids rounding in sqrt.
  const auto m = static_cast<unsigned __int128>(M);
  return m * m <= n ? Regime::small_M : Regime::large_M;
}

double psi_large_branch(std::size_t n, std::size_t M) {
  require_positive(n, M);
  const double dn = static_cast<double>(n);
  return std::sqrt((1.0 + std::log(static_cast<double>(M) / std::sqrt(dn))) / dn);
}

double psi_c(std::size_t n, std::size_t M) {
  if (regime(n, M) == Regime::small_M) return static_cast<double>(M) / static_cast<double>(n);
  return psi_large_branch(n, M);
}

double phi_n(std::size_t n, std::size_t M) {
  require_positive(n, M);
  const double dn = static_cast<double>(n);
  if (M == 1) return 1.0 / dn;
  return std::min(static_cast<double>(M) / dn, std::sqrt(std::log(static_cast<double>(M)) / dn));
}

double gap_ratio(std::size_t n, std::size_t M) { return phi_n(n, M) / psi_c(n, M); }

double theorem_a_bound(std::size_t n, std::size_t M, double x, double b, double c0) {
  if (x < 0.0 || b < 0.0 || c0 < 0.0)
    throw std::invalid_argument("theorem_a_bound: x, b and c0 must be >= 0");
  return c0 * b * b * std::max(psi_c(n, M), x / static_cast<double>(n));
}

RatePoint rate_point(std::size_t n, std::size_t M) {
  return {n, M, psi_c(n, M), phi_n(n, M), regime(n, M)};
}

}  // namespace convagg::rates
