#include "convagg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace convagg {

namespace {

constexpr double kProbabilitySumTolerance = 1e-12;
constexpr double kSimplexSumTolerance = 1e-10;

}  // namespace

DiscreteProblem::DiscreteProblem(std::vector<Atom> atoms, double bound_b)
    : atoms_(std::move(atoms)), bound_b_(bound_b) {
  if (atoms_.empty()) throw std::invalid_argument("DiscreteProblem: at least one atom required");
  if (!(bound_b_ >= 0.0) || !std::isfinite(bound_b_))
    throw std::invalid_argument("DiscreteProblem: bound_b must be finite and >= 0");

  std::size_t design = 0;
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.prob >= 0.0)) throw std::invalid_argument("DiscreteProblem: negative probability");
    if (!(std::abs(a.y) <= bound_b_))
      throw std::invalid_argument("DiscreteProblem: |y| = " + std::to_string(std::abs(a.y)) +
                                  " exceeds bound_b");
    design = std::max(design, a.x + 1);
    total += a.prob;
  }
  if (std::abs(total - 1.0) > kProbabilitySumTolerance)
    throw std::invalid_argument("DiscreteProblem: probabilities sum to " + std::to_string(total));

  marginal_.assign(design, 0.0);
  regression_.assign(design, 0.0);
  for (const Atom& a : atoms_) {
    marginal_[a.x] += a.prob;
    regression_[a.x] += a.prob * a.y;
  }
  for (std::size_t x = 0; x < design; ++x)
    regression_[x] = marginal_[x] > 0.0 ? regression_[x] / marginal_[x] : 0.0;
}

Dictionary::Dictionary(const std::vector<FunctionVector>& functions) : size_(functions.size()) {
  if (functions.empty()) throw std::invalid_argument("Dictionary: at least one function required");
  design_size_ = functions.front().size();
  if (design_size_ == 0) throw std::invalid_argument("Dictionary: empty design");
  values_.reserve(size_ * design_size_);
  for (const auto& f : functions) {
    if (f.size() != design_size_)
      throw std::invalid_argument("Dictionary: rows have different lengths");
    for (double v : f) {
      if (!std::isfinite(v)) throw std::invalid_argument("Dictionary: non-finite value");
      values_.push_back(v);
    }
  }
}

double Dictionary::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

void Dictionary::check_compatible(const DiscreteProblem& p) const {
  if (design_size_ != p.design_size())
    throw std::invalid_argument("Dictionary: design size " + std::to_string(design_size_) +
                                " does not match problem design size " +
                                std::to_string(p.design_size()));
  if (sup_norm() > p.bound_b())
    throw std::invalid_argument("Dictionary: sup norm exceeds bound_b of the problem");
}

SampleSet::SampleSet(std::vector<Sample> pairs, std::uint64_t seed)
    : pairs_(std::move(pairs)), seed_(seed) {
  if (pairs_.empty()) throw std::invalid_argument("SampleSet: empty sample");
  for (const Sample& s : pairs_)
    if (!std::isfinite(s.y)) throw std::invalid_argument("SampleSet: non-finite y");
}

std::size_t SampleSet::max_x() const {
  std::size_t m = 0;
  for (const Sample& s : pairs_) m = std::max(m, s.x);
  return m;
}

void SampleSet::check_compatible(const DiscreteProblem& p) const {
  for (const Sample& s : pairs_) {
    if (s.x >= p.design_size()) throw std::out_of_range("SampleSet: x-index outside the design");
    if (std::abs(s.y) > p.bound_b()) throw std::invalid_argument("SampleSet: |y| exceeds bound_b");
  }
}

SimplexWeights::SimplexWeights(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("SimplexWeights: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("SimplexWeights: negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexSumTolerance)
    throw std::invalid_argument("SimplexWeights: weights sum to " + std::to_string(total));
}

SimplexWeights SimplexWeights::vertex(std::size_t size, std::size_t j) {
  if (j >= size) throw std::out_of_range("SimplexWeights::vertex: index out of range");
  std::vector<double> w(size, 0.0);
  w[j] = 1.0;
  return SimplexWeights(std::move(w));
}

SimplexWeights SimplexWeights::uniform(std::size_t size) {
  return SimplexWeights(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Multiset::Multiset(std::vector<std::size_t> indices, std::size_t dictionary_size)
    : indices_(std::move(indices)), dictionary_size_(dictionary_size) {
  if (indices_.empty()) throw std::invalid_argument("Multiset: m must be >= 1");
  std::sort(indices_.begin(), indices_.end());
  if (indices_.back() >= dictionary_size_)
    throw std::out_of_range("Multiset: index " + std::to_string(indices_.back()) +
                            " out of range for dictionary of size " +
                            std::to_string(dictionary_size_));
}

std::vector<std::size_t> Multiset::counts() const {
  std::vector<std::size_t> c(dictionary_size_, 0);
  for (std::size_t i : indices_) ++c[i];
  return c;
}

SimplexWeights Multiset::induced_weights() const {
  const auto c = counts();
  const double m = static_cast<double>(indices_.size());
  std::vector<double> w(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) w[j] = static_cast<double>(c[j]) / m;
  // Rounding of count/m can leave the sum a few ulps from 1; the constructor
  // tolerance absorbs it.
  return SimplexWeights(std::move(w));
}

Segment::Segment(FunctionVector endpoint_i, FunctionVector endpoint_j)
    : endpoint_i_(std::move(endpoint_i)), endpoint_j_(std::move(endpoint_j)) {
  if (endpoint_i_.size() != endpoint_j_.size())
    throw std::invalid_argument("Segment: endpoints have different lengths");
  if (endpoint_i_.empty()) throw std::invalid_argument("Segment: empty endpoints");
}

FunctionVector Segment::at(double theta) const {
  FunctionVector g(endpoint_i_.size());
  for (std::size_t x = 0; x < g.size(); ++x)
    g[x] = theta * endpoint_i_[x] + (1.0 - theta) * endpoint_j_[x];
  return g;
}

bool Segment::bounded_by(double b) const {
  auto ok = [b](double v) { return std::abs(v) <= b; };
  return std::all_of(endpoint_i_.begin(), endpoint_i_.end(), ok) &&
         std::all_of(endpoint_j_.begin(), endpoint_j_.end(), ok);
}

FunctionVector combine(const Dictionary& dict, const SimplexWeights& w) {
  if (w.size() != dict.size())
    throw std::invalid_argument("combine: " + std::to_string(w.size()) + " weights for " +
                                std::to_string(dict.size()) + " dictionary functions");
  return linear_combination(dict, w.values());
}

FunctionVector linear_combination(const Dictionary& dict, std::span<const double> coefficients) {
  if (coefficients.size() != dict.size())
    throw std::invalid_argument("linear_combination: dimension mismatch");
  FunctionVector out(dict.design_size(), 0.0);
  for (std::size_t j = 0; j < dict.size(); ++j) {
    const double wj = coefficients[j];
    if (wj == 0.0) continue;
    const auto f = dict.function(j);
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += wj * f[x];
  }
  return out;
}

FunctionVector multiset_average(const Dictionary& dict, const Multiset& ms) {
  if (ms.dictionary_size() != dict.size())
    throw std::out_of_range("multiset_average: multiset built for a different dictionary size");
  return combine(dict, ms.induced_weights());
}

AtomSampler::AtomSampler(const DiscreteProblem& p) {
  support_.reserve(p.atoms().size());
  cumulative_.reserve(p.atoms().size());
  double acc = 0.0;
  for (const Atom& a : p.atoms()) {
    support_.push_back({a.x, a.y});
    acc += a.prob;
    cumulative_.push_back(acc);
  }
}

std::size_t AtomSampler::draw_atom(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
  const double u = unif(rng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto k = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(k, cumulative_.size() - 1);
}

void AtomSampler::draw_into(std::size_t n, std::mt19937_64& rng,
                            std::vector<std::size_t>& atom_indices) const {
  atom_indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) atom_indices[i] = draw_atom(rng);
}

SampleSet AtomSampler::draw(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<Sample> pairs(n);
  for (auto& s : pairs) s = support_[draw_atom(rng)];
  return SampleSet(std::move(pairs), seed);
}

}  // namespace convagg
