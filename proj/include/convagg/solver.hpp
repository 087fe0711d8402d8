#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "convagg/model.hpp"

namespace convagg {

enum class TieBreak { lowest_index };

struct SolverConfig {
  std::size_t max_iterations = 100000;
  /// Threshold on the Frank-Wolfe duality gap, i.e. on the certified risk
  /// suboptimality.
  double tolerance = 1e-8;
  TieBreak tie_break = TieBreak::lowest_index;
  /// Keep the objective value after every iteration in the solution.
  bool record_trace = false;

  void validate() const;
};

/// Minimizer of a risk over conv(F). `risk` is the objective the solver was
/// given: the empirical risk for sample objectives, the population risk for
/// problem objectives. It is recomputed directly from the returned weights.
struct ErmSolution {
  SimplexWeights weights;
  double risk = 0.0;
  double duality_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> risk_trace;
};

/// The squared risk of sum_j w_j f_j as a quadratic in w,
///   w' Q w - 2 c' w + k,
/// built from per-design-point sufficient statistics of a measure on (x, y).
/// Solvers use it; exact risks are always recomputed by the `risk` module.
class QuadraticObjective {
 public:
  static QuadraticObjective empirical(const Dictionary& dict, const SampleSet& s);
  static QuadraticObjective population(const Dictionary& dict, const DiscreteProblem& p);

  std::size_t dimension() const { return static_cast<std::size_t>(linear_.size()); }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& linear() const { return linear_; }
  double constant() const { return constant_; }

  double value(std::span<const double> w) const;
  Eigen::VectorXd gradient(std::span<const double> w) const;
  /// max over the simplex of <grad, w - s>; certifies value(w) - min <= gap.
  double simplex_gap(std::span<const double> w) const;

 private:
  QuadraticObjective(const Dictionary& dict, std::vector<std::size_t> xs,
                     std::vector<double> mass, std::vector<double> first, double second);

  Eigen::MatrixXd gram_;
  Eigen::VectorXd linear_;
  double constant_ = 0.0;
};

/// Pairwise Frank-Wolfe with exact line search over the simplex. Returns raw
/// weights; the wrappers below attach the exact risk.
struct FrankWolfeResult {
  std::vector<double> weights;
  double value = 0.0;
  double duality_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};
FrankWolfeResult frank_wolfe(const QuadraticObjective& objective, const SolverConfig& cfg);

/// ERM over conv(F). Never reads bound_b.
ErmSolution erm_convex_hull(const Dictionary& dict, const SampleSet& s, const SolverConfig& cfg);

/// Population risk minimizer over conv(F).
ErmSolution minimize_over_hull(const Dictionary& dict, const DiscreteProblem& p,
                               const SolverConfig& cfg);

/// Exhaustive search over the simplex grid with spacing 1/grid_resolution.
/// Brute-force reference for tests; M <= 4.
ErmSolution erm_oracle(const Dictionary& dict, const SampleSet& s, std::size_t grid_resolution);

struct SegmentFit {
  double theta = 0.0;
  FunctionVector minimizer;
};

/// Closed-form risk minimizer over a segment; theta = 0 when the endpoints
/// coincide under the measure.
SegmentFit erm_segment(const Segment& seg, const SampleSet& s);
SegmentFit erm_segment(const Segment& seg, const DiscreteProblem& p);

/// A closed convex Lambda in R^M given by its Euclidean projection and,
/// optionally, a linear minimization oracle argmin_{w in Lambda} <g, w>.
struct ConstraintSet {
  std::function<std::vector<double>(std::span<const double>)> project;
  std::function<std::vector<double>(std::span<const double>)> linear_minimizer;
};

ConstraintSet simplex_constraint();
ConstraintSet box_constraint(double lower, double upper);
ConstraintSet point_constraint(std::vector<double> point);

struct ConstrainedSolution {
  std::vector<double> coefficients;
  double risk = 0.0;
  /// Frank-Wolfe gap when the set has a linear minimizer (a certificate),
  /// otherwise the norm of the gradient mapping.
  double gap = 0.0;
  bool gap_certifies = false;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Accelerated projected gradient with adaptive restart over Lambda(F).
ConstrainedSolution minimize_constrained(const QuadraticObjective& objective,
                                         const ConstraintSet& lambda, const SolverConfig& cfg);
ConstrainedSolution erm_constrained(const Dictionary& dict, const SampleSet& s,
                                    const ConstraintSet& lambda, const SolverConfig& cfg);
ConstrainedSolution erm_constrained(const Dictionary& dict, const DiscreteProblem& p,
                                    const ConstraintSet& lambda, const SolverConfig& cfg);

/// Euclidean projection onto the probability simplex.
SimplexWeights project_simplex(std::span<const double> v);

}  // namespace convagg
