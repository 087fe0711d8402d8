#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "convagg/model.hpp"

namespace convagg {

/// R(f) = E (Y - f(X))^2 as an exact finite sum over the atoms.
double population_risk(std::span<const double> f, const DiscreteProblem& p);

/// R_n(f) = (1/n) sum_i (y_i - f(x_i))^2.
double empirical_risk(std::span<const double> f, const SampleSet& s);

/// P L_f = R(f) - R(f_star).
double excess_loss_mean(std::span<const double> f, std::span<const double> f_star,
                        const DiscreteProblem& p);

/// P L_f^2 = E ((Y - f)^2 - (Y - f_star)^2)^2.
double excess_loss_second_moment(std::span<const double> f, std::span<const double> f_star,
                                 const DiscreteProblem& p);

/// E (f(X) - g(X))^2 under the design marginal.
double l2_distance_squared(std::span<const double> f, std::span<const double> g,
                           const DiscreteProblem& p);

/// Outcome of testing P L_f^2 <= B * P L_f over a finite sample of a class.
struct BernsteinReport {
  double constant_B = 0.0;
  /// max of P L_f^2 / P L_f over members with P L_f > 0; +inf when some member
  /// has P L_f <= 0 but a nonzero second moment.
  double max_ratio = 0.0;
  std::size_t violations = 0;
  /// Members with P L_f <= 0 and P L_f^2 ~ 0 (the 0/0 case), skipped.
  std::size_t degenerate = 0;
  std::size_t tested = 0;
};

/// f_star must be the exact risk minimizer over the convex class the members are
/// drawn from. `slack` absorbs rounding in both moments.
BernsteinReport bernstein_check(const std::vector<FunctionVector>& class_sample,
                                std::span<const double> f_star, const DiscreteProblem& p, double B,
                                double slack = 1e-12);

/// E_X Var_Theta(Y - Theta(X)) with P[Theta = f_j] = w_j. Y cancels, so this is
/// E_X [sum_j w_j f_j(X)^2 - (sum_j w_j f_j(X))^2].
double variance_term(const SimplexWeights& w, const Dictionary& dict, const DiscreteProblem& p);

/// (1/n) sum_i Var_Theta(y_i - Theta(x_i)).
double empirical_variance_term(const SimplexWeights& w, const Dictionary& dict, const SampleSet& s);

}  // namespace convagg
