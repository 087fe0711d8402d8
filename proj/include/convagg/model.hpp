#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace convagg {

/// A real function tabulated on the design atoms, indexed by x.
using FunctionVector = std::vector<double>;

/// One support point of the joint law of (X, Y).
struct Atom {
  std::size_t x = 0;
  double y = 0.0;
  double prob = 0.0;
};

/// Joint law of (X, Y) on finitely many atoms with |Y| <= b. Design indices
/// are 0..design_size()-1; an index may carry zero marginal mass.
class DiscreteProblem {
 public:
  DiscreteProblem(std::vector<Atom> atoms, double bound_b);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double bound_b() const { return bound_b_; }
  std::size_t design_size() const { return marginal_.size(); }

  /// P(X = x).
  const std::vector<double>& marginal() const { return marginal_; }
  /// E[Y | X = x]; zero where the marginal vanishes.
  const std::vector<double>& regression_values() const { return regression_; }

 private:
  std::vector<Atom> atoms_;
  double bound_b_;
  std::vector<double> marginal_;
  std::vector<double> regression_;
};

/// M functions tabulated on a common design. Row-major storage.
class Dictionary {
 public:
  explicit Dictionary(const std::vector<FunctionVector>& functions);

  std::size_t size() const { return size_; }
  std::size_t design_size() const { return design_size_; }
  std::span<const double> function(std::size_t j) const {
    return {values_.data() + j * design_size_, design_size_};
  }
  double value(std::size_t j, std::size_t x) const { return values_[j * design_size_ + x]; }
  double sup_norm() const;

  /// Throws unless every tabulated value satisfies |f(x)| <= b and the design
  /// matches the problem.
  void check_compatible(const DiscreteProblem& p) const;

 private:
  std::size_t size_;
  std::size_t design_size_;
  std::vector<double> values_;
};

struct Sample {
  std::size_t x = 0;
  double y = 0.0;
};

/// n observed pairs. The seed records provenance only.
class SampleSet {
 public:
  explicit SampleSet(std::vector<Sample> pairs, std::uint64_t seed = 0);

  const std::vector<Sample>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t max_x() const;

  void check_compatible(const DiscreteProblem& p) const;

 private:
  std::vector<Sample> pairs_;
  std::uint64_t seed_;
};

/// A point of the probability simplex; represents an element of conv(F).
class SimplexWeights {
 public:
  explicit SimplexWeights(std::vector<double> weights);

  static SimplexWeights vertex(std::size_t size, std::size_t j);
  static SimplexWeights uniform(std::size_t size);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t j) const { return weights_[j]; }
  const std::vector<double>& values() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// m dictionary indices with repetition, kept sorted. Element (1/m) sum h_i of
/// the Maurey net.
class Multiset {
 public:
  Multiset(std::vector<std::size_t> indices, std::size_t dictionary_size);

  std::size_t m() const { return indices_.size(); }
  std::size_t dictionary_size() const { return dictionary_size_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  std::vector<std::size_t> counts() const;
  /// weights count_j / m
  SimplexWeights induced_weights() const;

  friend bool operator==(const Multiset&, const Multiset&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t dictionary_size_;
};

/// The one-parameter model {theta * endpoint_i + (1 - theta) * endpoint_j}.
class Segment {
 public:
  Segment(FunctionVector endpoint_i, FunctionVector endpoint_j);

  const FunctionVector& endpoint_i() const { return endpoint_i_; }
  const FunctionVector& endpoint_j() const { return endpoint_j_; }
  std::size_t design_size() const { return endpoint_i_.size(); }
  FunctionVector at(double theta) const;
  bool bounded_by(double b) const;

 private:
  FunctionVector endpoint_i_;
  FunctionVector endpoint_j_;
};

/// sum_j w_j f_j on the design.
FunctionVector combine(const Dictionary& dict, const SimplexWeights& w);

/// sum_j c_j f_j for arbitrary coefficients (points of Lambda(F)).
FunctionVector linear_combination(const Dictionary& dict, std::span<const double> coefficients);

/// (1/m) sum of the selected dictionary rows.
FunctionVector multiset_average(const Dictionary& dict, const Multiset& ms);

/// Inverse-CDF sampler over the atoms of a problem.
class AtomSampler {
 public:
  explicit AtomSampler(const DiscreteProblem& p);

  std::size_t draw_atom(std::mt19937_64& rng) const;
  SampleSet draw(std::size_t n, std::uint64_t seed) const;
  /// Draws into caller-owned storage; returns the atom index of each pair.
  void draw_into(std::size_t n, std::mt19937_64& rng, std::vector<std::size_t>& atom_indices) const;

 private:
  std::vector<Sample> support_;
  std::vector<double> cumulative_;
};

}  // namespace convagg
