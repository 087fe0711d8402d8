#pragma once

#include <random>
#include <vector>

#include "convagg/model.hpp"

namespace fixtures {

using convagg::Atom;
using convagg::FunctionVector;

struct Instance {
  std::vector<Atom> atoms;
  std::vector<FunctionVector> functions;
  double b = 1.0;

  convagg::DiscreteProblem problem() const { return convagg::DiscreteProblem(atoms, b); }
  convagg::Dictionary dictionary() const { return convagg::Dictionary(functions); }
};

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t m) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(m);
  double t = 0.0;
  for (auto& v : w) t += (v = e(rng));
  for (auto& v : w) v /= t;
  return w;
}

// K design points, up to two y-values each, M functions uniform on [-b, b].
inline Instance random_instance(std::mt19937_64& rng, std::size_t K, std::size_t M,
                                double b = 1.0) {
  std::uniform_real_distribution<double> u(-b, b);
  std::bernoulli_distribution coin(0.5);
  Instance in;
  in.b = b;
  const auto px = random_simplex(rng, K);
  for (std::size_t x = 0; x < K; ++x) {
    if (coin(rng)) {
      in.atoms.push_back({x, u(rng), px[x]});
    } else {
      const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      in.atoms.push_back({x, u(rng), px[x] * s});
      in.atoms.push_back({x, u(rng), px[x] * (1.0 - s)});
    }
  }
  in.functions.assign(M, FunctionVector(K));
  for (auto& f : in.functions)
    for (auto& v : f) v = u(rng);
  return in;
}

inline convagg::SampleSet random_sample(std::mt19937_64& rng, const std::vector<Atom>& atoms,
                                        std::size_t n) {
  std::vector<double> probs;
  for (const auto& a : atoms) probs.push_back(a.prob);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  std::vector<convagg::Sample> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = atoms[pick(rng)];
    pairs.push_back({a.x, a.y});
  }
  return convagg::SampleSet(std::move(pairs));
}

inline FunctionVector constant(std::size_t K, double c) { return FunctionVector(K, c); }

}  // namespace fixtures
