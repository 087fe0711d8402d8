#include "convagg/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace convagg {

namespace {

void require_design(std::span<const double> f, std::size_t design, const char* op) {
  if (f.size() != design)
    throw std::invalid_argument(std::string(op) + ": function has " + std::to_string(f.size()) +
                                " values, design has " + std::to_string(design));
}

// Var_Theta(Theta(x)) for every design index.
std::vector<double> pointwise_variance(const SimplexWeights& w, const Dictionary& dict) {
  if (w.size() != dict.size()) throw std::invalid_argument("variance_term: dimension mismatch");
  std::vector<double> mean(dict.design_size(), 0.0), second(dict.design_size(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    if (w[j] == 0.0) continue;
    const auto f = dict.function(j);
    for (std::size_t x = 0; x < f.size(); ++x) {
      mean[x] += w[j] * f[x];
      second[x] += w[j] * f[x] * f[x];
    }
  }
  std::vector<double> var(dict.design_size());
  for (std::size_t x = 0; x < var.size(); ++x)
    var[x] = std::max(0.0, second[x] - mean[x] * mean[x]);
  return var;
}

}  // namespace

double population_risk(std::span<const double> f, const DiscreteProblem& p) {
  require_design(f, p.design_size(), "population_risk");
  double r = 0.0;
  for (const Atom& a : p.atoms()) {
    const double e = a.y - f[a.x];
    r += a.prob * e * e;
  }
  return r;
}

double empirical_risk(std::span<const double> f, const SampleSet& s) {
  if (s.size() == 0) throw std::invalid_argument("empirical_risk: empty sample");
  if (s.max_x() >= f.size())
    throw std::invalid_argument("empirical_risk: sample refers to an x outside the function");
  double r = 0.0;
  for (const Sample& z : s.pairs()) {
    const double e = z.y - f[z.x];
    r += e * e;
  }
  return r / static_cast<double>(s.size());
}

double excess_loss_mean(std::span<const double> f, std::span<const double> f_star,
                        const DiscreteProblem& p) {
  require_design(f, p.design_size(), "excess_loss_mean");
  require_design(f_star, p.design_size(), "excess_loss_mean");
  // Summing the pointwise excess loss avoids cancellation between two risks.
  double r = 0.0;
  for (const Atom& a : p.atoms()) {
    const double d = f_star[a.x] - f[a.x];
    r += a.prob * d * (2.0 * a.y - f[a.x] - f_star[a.x]);
  }
  return r;
}

double excess_loss_second_moment(std::span<const double> f, std::span<const double> f_star,
                                 const DiscreteProblem& p) {
  require_design(f, p.design_size(), "excess_loss_second_moment");
  require_design(f_star, p.design_size(), "excess_loss_second_moment");
  double r = 0.0;
  for (const Atom& a : p.atoms()) {
    const double loss = (f_star[a.x] - f[a.x]) * (2.0 * a.y - f[a.x] - f_star[a.x]);
    r += a.prob * loss * loss;
  }
  return r;
}

double l2_distance_squared(std::span<const double> f, std::span<const double> g,
                           const DiscreteProblem& p) {
  require_design(f, p.design_size(), "l2_distance_squared");
  require_design(g, p.design_size(), "l2_distance_squared");
  double r = 0.0;
  const auto& px = p.marginal();
  for (std::size_t x = 0; x < px.size(); ++x) {
    const double d = f[x] - g[x];
    r += px[x] * d * d;
  }
  return r;
}

BernsteinReport bernstein_check(const std::vector<FunctionVector>& class_sample,
                                std::span<const double> f_star, const DiscreteProblem& p, double B,
                                double slack) {
  BernsteinReport rep;
  rep.constant_B = B;
  for (const auto& f : class_sample) {
    ++rep.tested;
    const double first = excess_loss_mean(f, f_star, p);
    const double second = excess_loss_second_moment(f, f_star, p);
    if (first <= 0.0) {
      if (second <= slack) {
        ++rep.degenerate;
        continue;
      }
      rep.max_ratio = std::numeric_limits<double>::infinity();
      ++rep.violations;
      continue;
    }
    rep.max_ratio = std::max(rep.max_ratio, second / first);
    if (second > B * first + slack) ++rep.violations;
  }
  return rep;
}

double variance_term(const SimplexWeights& w, const Dictionary& dict, const DiscreteProblem& p) {
  if (dict.design_size() != p.design_size())
    throw std::invalid_argument("variance_term: dictionary and problem designs differ");
  const auto var = pointwise_variance(w, dict);
  const auto& px = p.marginal();
  double r = 0.0;
  for (std::size_t x = 0; x < px.size(); ++x) r += px[x] * var[x];
  return r;
}

double empirical_variance_term(const SimplexWeights& w, const Dictionary& dict,
                               const SampleSet& s) {
  if (s.max_x() >= dict.design_size())
    throw std::invalid_argument("empirical_variance_term: sample outside the design");
  const auto var = pointwise_variance(w, dict);
  double r = 0.0;
  for (const Sample& z : s.pairs()) r += var[z.x];
  return r / static_cast<double>(s.size());
}

}  // namespace convagg
