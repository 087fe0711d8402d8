#include "convagg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "convagg/risk.hpp"

namespace convagg {

namespace {

constexpr std::size_t kRefreshEvery = 64;
constexpr std::size_t kOracleMaxDictionary = 4;

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

std::size_t argmin_lowest(const Eigen::VectorXd& g) {
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < g.size(); ++j)
    if (g[j] < g[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(j);
  return best;
}

std::vector<double> normalized(std::vector<double> w) {
  for (double& v : w) v = std::max(v, 0.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

// Calls visit(counts) for every composition of `total` into `parts` parts, in
// lexicographic order.
template <typename Visit>
void for_each_composition(std::size_t parts, std::size_t total, Visit&& visit) {
  std::vector<std::size_t> c(parts, 0);
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == parts) {
      c[pos] = left;
      visit(c);
      return;
    }
    for (std::size_t k = 0; k <= left; ++k) {
      c[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  rec(rec, 0, total);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
}

QuadraticObjective::QuadraticObjective(const Dictionary& dict, std::vector<std::size_t> xs,
                                       std::vector<double> mass, std::vector<double> first,
                                       double second) {
  const auto used = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(dict.size());
  Eigen::MatrixXd scaled(used, m);
  Eigen::MatrixXd plain(used, m);
  for (Eigen::Index k = 0; k < used; ++k) {
    const double root = std::sqrt(mass[static_cast<std::size_t>(k)]);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = dict.value(static_cast<std::size_t>(j), xs[static_cast<std::size_t>(k)]);
      plain(k, j) = v;
      scaled(k, j) = root * v;
    }
  }
  gram_ = scaled.transpose() * scaled;
  linear_ = plain.transpose() * Eigen::Map<const Eigen::VectorXd>(first.data(), used);
  constant_ = second;
}

QuadraticObjective QuadraticObjective::empirical(const Dictionary& dict, const SampleSet& s) {
  if (s.max_x() >= dict.design_size())
    throw std::invalid_argument("QuadraticObjective: sample refers to x outside the dictionary");
  const double inv_n = 1.0 / static_cast<double>(s.size());
  std::vector<double> count(dict.design_size(), 0.0), sum_y(dict.design_size(), 0.0);
  double second = 0.0;
  for (const Sample& z : s.pairs()) {
    count[z.x] += 1.0;
    sum_y[z.x] += z.y;
    second += z.y * z.y;
  }
  std::vector<std::size_t> xs;
  std::vector<double> mass, first;
  for (std::size_t x = 0; x < count.size(); ++x) {
    if (count[x] == 0.0) continue;
    xs.push_back(x);
    mass.push_back(count[x] * inv_n);
    first.push_back(sum_y[x] * inv_n);
  }
  return QuadraticObjective(dict, std::move(xs), std::move(mass), std::move(first), second * inv_n);
}

QuadraticObjective QuadraticObjective::population(const Dictionary& dict, const DiscreteProblem& p) {
  if (p.design_size() != dict.design_size())
    throw std::invalid_argument("QuadraticObjective: dictionary and problem designs differ");
  std::vector<double> first(p.design_size(), 0.0);
  double second = 0.0;
  for (const Atom& a : p.atoms()) {
    first[a.x] += a.prob * a.y;
    second += a.prob * a.y * a.y;
  }
  std::vector<std::size_t> xs;
  std::vector<double> mass, firsts;
  for (std::size_t x = 0; x < p.design_size(); ++x) {
    if (p.marginal()[x] == 0.0) continue;
    xs.push_back(x);
    mass.push_back(p.marginal()[x]);
    firsts.push_back(first[x]);
  }
  return QuadraticObjective(dict, std::move(xs), std::move(mass), std::move(firsts), second);
}

double QuadraticObjective::value(std::span<const double> w) const {
  const auto v = as_eigen(w);
  return v.dot(gram_ * v) - 2.0 * linear_.dot(v) + constant_;
}

Eigen::VectorXd QuadraticObjective::gradient(std::span<const double> w) const {
  const auto v = as_eigen(w);
  return 2.0 * (gram_ * v - linear_);
}

double QuadraticObjective::simplex_gap(std::span<const double> w) const {
  const Eigen::VectorXd g = gradient(w);
  return std::max(0.0, g.dot(as_eigen(w)) - g.minCoeff());
}

FrankWolfeResult frank_wolfe(const QuadraticObjective& objective, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t m = objective.dimension();
  const Eigen::MatrixXd& q = objective.gram();
  const Eigen::VectorXd& c = objective.linear();

  FrankWolfeResult out;
  out.weights.assign(m, 0.0);

  // Start from the best vertex.
  Eigen::VectorXd vertex_values = q.diagonal() - 2.0 * c;
  const std::size_t start = argmin_lowest(vertex_values);
  out.weights[start] = 1.0;
  Eigen::VectorXd qw = q.col(static_cast<Eigen::Index>(start));

  auto& w = out.weights;
  auto value_of = [&] { return as_eigen(w).dot(qw) - 2.0 * c.dot(as_eigen(w)) + objective.constant(); };
  if (cfg.record_trace) out.trace.push_back(value_of());

  std::size_t since_refresh = 0;
  for (;;) {
    if (since_refresh >= kRefreshEvery) {
      qw = q * as_eigen(w);
      since_refresh = 0;
    }
    Eigen::VectorXd g = 2.0 * (qw - c);
    const std::size_t s = argmin_lowest(g);
    double gap = g.dot(as_eigen(w)) - g[static_cast<Eigen::Index>(s)];
    if (gap <= cfg.tolerance && since_refresh != 0) {
      // Confirm on a freshly computed gradient before stopping.
      qw = q * as_eigen(w);
      since_refresh = 0;
      continue;
    }
    if (gap <= cfg.tolerance) {
      out.duality_gap = std::max(gap, 0.0);
      out.converged = true;
      break;
    }
    if (out.iterations >= cfg.max_iterations) {
      out.duality_gap = gap;
      break;
    }

    // Away vertex: largest gradient among the active set.
    std::size_t v = m;
    for (std::size_t j = 0; j < m; ++j)
      if (w[j] > 0.0 && (v == m || g[static_cast<Eigen::Index>(j)] > g[static_cast<Eigen::Index>(v)]))
        v = j;

    const auto si = static_cast<Eigen::Index>(s);
    const auto vi = static_cast<Eigen::Index>(v);
    const double slope = g[si] - g[vi];
    const double curvature = q(si, si) + q(vi, vi) - 2.0 * q(si, vi);
    const double step_max = w[v];
    double step = step_max;
    if (curvature > 0.0) step = std::min(step_max, -slope / (2.0 * curvature));

    w[s] += step;
    if (step == step_max)
      w[v] = 0.0;
    else
      w[v] -= step;
    qw += step * (q.col(si) - q.col(vi));
    ++since_refresh;
    ++out.iterations;
    if (cfg.record_trace) out.trace.push_back(value_of());
  }
  out.value = objective.value(w);
  return out;
}

namespace {

ErmSolution finish(const Dictionary& dict, const QuadraticObjective& objective,
                   FrankWolfeResult fw, const SolverConfig& cfg,
                   const std::function<double(const FunctionVector&)>& exact_risk) {
  SimplexWeights weights(normalized(std::move(fw.weights)));
  const double gap = objective.simplex_gap(weights.values());
  ErmSolution sol{weights, exact_risk(combine(dict, weights)), gap, fw.iterations,
                  fw.converged && gap <= cfg.tolerance, std::move(fw.trace)};
  return sol;
}

}  // namespace

ErmSolution erm_convex_hull(const Dictionary& dict, const SampleSet& s, const SolverConfig& cfg) {
  const auto objective = QuadraticObjective::empirical(dict, s);
  return finish(dict, objective, frank_wolfe(objective, cfg), cfg,
                [&](const FunctionVector& f) { return empirical_risk(f, s); });
}

ErmSolution minimize_over_hull(const Dictionary& dict, const DiscreteProblem& p,
                               const SolverConfig& cfg) {
  const auto objective = QuadraticObjective::population(dict, p);
  return finish(dict, objective, frank_wolfe(objective, cfg), cfg,
                [&](const FunctionVector& f) { return population_risk(f, p); });
}

ErmSolution erm_oracle(const Dictionary& dict, const SampleSet& s, std::size_t grid_resolution) {
  if (dict.size() > kOracleMaxDictionary)
    throw std::invalid_argument("erm_oracle: dictionary of size " + std::to_string(dict.size()) +
                                " exceeds the enumeration limit of " +
                                std::to_string(kOracleMaxDictionary));
  if (grid_resolution < 1) throw std::invalid_argument("erm_oracle: grid_resolution must be >= 1");

  const double r = static_cast<double>(grid_resolution);
  std::vector<double> best_w;
  double best = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;
  for_each_composition(dict.size(), grid_resolution, [&](const std::vector<std::size_t>& counts) {
    ++visited;
    std::vector<double> w(counts.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = static_cast<double>(counts[j]) / r;
    const double risk = empirical_risk(linear_combination(dict, w), s);
    if (risk < best) {
      best = risk;
      best_w = std::move(w);
    }
  });
  SimplexWeights weights(normalized(std::move(best_w)));
  const auto objective = QuadraticObjective::empirical(dict, s);
  return {weights, best, objective.simplex_gap(weights.values()), visited, true, {}};
}

namespace {

SegmentFit segment_fit(const Segment& seg, double cross, double norm_sq) {
  double theta = 0.0;
  if (norm_sq > 0.0) theta = std::clamp(cross / norm_sq, 0.0, 1.0);
  return {theta, seg.at(theta)};
}

}  // namespace

SegmentFit erm_segment(const Segment& seg, const SampleSet& s) {
  if (s.max_x() >= seg.design_size())
    throw std::invalid_argument("erm_segment: sample refers to x outside the segment");
  const auto& gi = seg.endpoint_i();
  const auto& gj = seg.endpoint_j();
  double cross = 0.0, norm_sq = 0.0;
  for (const Sample& z : s.pairs()) {
    const double d = gi[z.x] - gj[z.x];
    cross += (z.y - gj[z.x]) * d;
    norm_sq += d * d;
  }
  return segment_fit(seg, cross, norm_sq);
}

SegmentFit erm_segment(const Segment& seg, const DiscreteProblem& p) {
  if (p.design_size() != seg.design_size())
    throw std::invalid_argument("erm_segment: segment and problem designs differ");
  const auto& gi = seg.endpoint_i();
  const auto& gj = seg.endpoint_j();
  double cross = 0.0, norm_sq = 0.0;
  for (const Atom& a : p.atoms()) {
    const double d = gi[a.x] - gj[a.x];
    cross += a.prob * (a.y - gj[a.x]) * d;
    norm_sq += a.prob * d * d;
  }
  return segment_fit(seg, cross, norm_sq);
}

SimplexWeights project_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("project_simplex: empty vector");
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  std::vector<double> w(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) w[j] = std::max(v[j] - tau, 0.0);
  return SimplexWeights(std::move(w));
}

ConstraintSet simplex_constraint() {
  return {[](std::span<const double> v) { return project_simplex(v).values(); },
          [](std::span<const double> g) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < g.size(); ++j)
              if (g[j] < g[best]) best = j;
            std::vector<double> s(g.size(), 0.0);
            s[best] = 1.0;
            return s;
          }};
}

ConstraintSet box_constraint(double lower, double upper) {
  if (!(lower <= upper)) throw std::invalid_argument("box_constraint: lower > upper");
  return {[=](std::span<const double> v) {
            std::vector<double> out(v.begin(), v.end());
            for (double& x : out) x = std::clamp(x, lower, upper);
            return out;
          },
          [=](std::span<const double> g) {
            std::vector<double> s(g.size());
            for (std::size_t j = 0; j < g.size(); ++j) s[j] = g[j] < 0.0 ? upper : lower;
            return s;
          }};
}

ConstraintSet point_constraint(std::vector<double> point) {
  return {[point](std::span<const double>) { return point; },
          [point](std::span<const double>) { return point; }};
}

ConstrainedSolution minimize_constrained(const QuadraticObjective& objective,
                                         const ConstraintSet& lambda, const SolverConfig& cfg) {
  cfg.validate();
  if (!lambda.project) throw std::invalid_argument("minimize_constrained: missing projection");
  const std::size_t m = objective.dimension();
  const Eigen::MatrixXd& q = objective.gram();

  const double lipschitz =
      2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .maxCoeff();

  std::vector<double> start(m, 1.0 / static_cast<double>(m));
  Eigen::VectorXd x = as_eigen(lambda.project(start));
  ConstrainedSolution out;

  auto stationarity = [&](const Eigen::VectorXd& point, const Eigen::VectorXd& next) {
    if (lambda.linear_minimizer) {
      const Eigen::VectorXd g = objective.gradient({point.data(), m});
      const auto s = lambda.linear_minimizer({g.data(), m});
      return std::max(0.0, g.dot(point - as_eigen(s)));
    }
    return lipschitz * (next - point).norm();
  };

  if (!(lipschitz > 0.0)) {
    // Constant objective: every feasible point is optimal.
    out.coefficients.assign(x.data(), x.data() + m);
    out.converged = true;
    out.gap_certifies = static_cast<bool>(lambda.linear_minimizer);
  } else {
    const double step = 1.0 / lipschitz;
    Eigen::VectorXd y = x;
    double t = 1.0;
    for (;;) {
      const Eigen::VectorXd g = objective.gradient({y.data(), m});
      const Eigen::VectorXd moved = y - step * g;
      const Eigen::VectorXd next = as_eigen(lambda.project({moved.data(), m}));
      ++out.iterations;

      // Gradient-based adaptive restart.
      if ((y - next).dot(next - x) > 0.0) {
        t = 1.0;
        y = next;
      } else {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - x);
        t = t_next;
      }
      const Eigen::VectorXd previous = x;
      x = next;

      const double gap = lambda.linear_minimizer ? stationarity(x, x)
                                                 : lipschitz * (x - previous).norm();
      out.gap = gap;
      if (gap <= cfg.tolerance) {
        out.converged = true;
        break;
      }
      if (out.iterations >= cfg.max_iterations) break;
    }
    out.coefficients.assign(x.data(), x.data() + m);
    out.gap_certifies = static_cast<bool>(lambda.linear_minimizer);
  }
  if (out.gap_certifies) out.gap = stationarity(x, x);
  return out;
}

ConstrainedSolution erm_constrained(const Dictionary& dict, const SampleSet& s,
                                    const ConstraintSet& lambda, const SolverConfig& cfg) {
  auto sol = minimize_constrained(QuadraticObjective::empirical(dict, s), lambda, cfg);
  sol.risk = empirical_risk(linear_combination(dict, sol.coefficients), s);
  return sol;
}

ConstrainedSolution erm_constrained(const Dictionary& dict, const DiscreteProblem& p,
                                    const ConstraintSet& lambda, const SolverConfig& cfg) {
  auto sol = minimize_constrained(QuadraticObjective::population(dict, p), lambda, cfg);
  sol.risk = population_risk(linear_combination(dict, sol.coefficients), p);
  return sol;
}

}  // namespace convagg
