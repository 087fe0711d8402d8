#include "convagg/localization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "convagg/parallel.hpp"
#include "convagg/solver.hpp"

namespace convagg::localization {

namespace {

// a t^2 + b t + c
struct Quadratic {
  double a = 0.0, b = 0.0, c = 0.0;
  double operator()(double t) const { return (a * t + b) * t + c; }
};

// Real roots of q inside [0, 1].
void push_unit_roots(const Quadratic& q, std::vector<double>& out) {
  auto keep = [&](double t) {
    if (std::isfinite(t) && t >= 0.0 && t <= 1.0) out.push_back(t);
  };
  const double scale = std::abs(q.a) + std::abs(q.b) + std::abs(q.c);
  if (scale == 0.0) return;
  if (std::abs(q.a) <= 1e-14 * scale) {
    if (q.b != 0.0) keep(-q.c / q.b);
    return;
  }
  const double disc = q.b * q.b - 4.0 * q.a * q.c;
  if (disc < 0.0) return;
  // Stable form avoids cancellation when b^2 >> 4ac.
  const double s = -0.5 * (q.b + std::copysign(std::sqrt(disc), q.b));
  if (s != 0.0) {
    keep(s / q.a);
    keep(q.c / s);
  } else {
    keep(0.0);
  }
}

void push_vertex(const Quadratic& q, std::vector<double>& out) {
  if (q.a != 0.0) {
    const double t = -q.b / (2.0 * q.a);
    if (t >= 0.0 && t <= 1.0) out.push_back(t);
  }
}

void push_grid(std::vector<double>& out) {
  for (std::size_t k = 0; k < kThetaGrid; ++k)
    out.push_back(static_cast<double>(k) / static_cast<double>(kThetaGrid - 1));
}

// Population side of a segment excess-loss class. With d = g_i - g_j and
// u = y - g_j, R(theta) = E u^2 - 2 theta E[u d] + theta^2 E d^2, so both P L
// and (P - P_n) L are quadratics in theta.
struct SegmentModel {
  std::vector<double> dd;  // d(x_a)^2 per atom
  std::vector<double> ud;  // u_a d(x_a) per atom
  double A = 0.0, B = 0.0;
  double theta_star = 0.0;
  Quadratic excess;  // P L(theta)

  SegmentModel(const Segment& seg, const DiscreteProblem& p) {
    if (seg.design_size() != p.design_size())
      throw std::invalid_argument("segment: design size does not match the problem");
    if (!seg.bounded_by(p.bound_b()))
      throw std::invalid_argument("segment: endpoints exceed the bound b");
    const auto& gi = seg.endpoint_i();
    const auto& gj = seg.endpoint_j();
    for (const Atom& a : p.atoms()) {
      const double d = gi[a.x] - gj[a.x];
      dd.push_back(d * d);
      ud.push_back((a.y - gj[a.x]) * d);
      A += a.prob * dd.back();
      B += a.prob * ud.back();
    }
    theta_star = erm_segment(seg, p).theta;
    excess = shifted(A, B);
  }

  // q(theta) = a_ theta^2 - 2 b_ theta, minus its value at theta*.
  Quadratic shifted(double a_, double b_) const {
    return {a_, -2.0 * b_, -(a_ * theta_star * theta_star - 2.0 * b_ * theta_star)};
  }

  // (P - P_n) L(theta) for empirical atom frequencies.
  Quadratic deviation(const std::vector<double>& freq) const {
    double An = 0.0, Bn = 0.0;
    for (std::size_t k = 0; k < freq.size(); ++k) {
      if (freq[k] == 0.0) continue;
      An += freq[k] * dd[k];
      Bn += freq[k] * ud[k];
    }
    return shifted(A - An, B - Bn);
  }
};

std::vector<double> atom_frequencies(const std::vector<std::size_t>& atom_idx,
                                     std::size_t atom_count) {
  std::vector<double> freq(atom_count, 0.0);
  const double inv = 1.0 / static_cast<double>(atom_idx.size());
  for (std::size_t a : atom_idx) freq[a] += inv;
  return freq;
}

// sup over {alpha L_theta} or {L_theta : P L_theta <= lambda} of |D|.
double segment_sup(const SegmentModel& model, const Quadratic& dev, double lambda,
                   Localization loc) {
  const Quadratic& pl = model.excess;
  std::vector<double> cand{0.0, 1.0, model.theta_star};
  push_grid(cand);
  push_vertex(dev, cand);
  push_unit_roots({pl.a, pl.b, pl.c - lambda}, cand);

  auto value = [&](double t) {
    const double e = std::max(pl(t), 0.0);
    const double d = std::abs(dev(t));
    if (e <= lambda * (1.0 + 1e-12)) return d;  // roots of P L = lambda may round up
    return loc == Localization::star_hull ? d * lambda / e : -1.0;
  };

  if (loc == Localization::star_hull) {
    // Stationary points of D / P L solve D' P L - D P L' = 0; the cubic terms
    // cancel, leaving a quadratic.
    push_unit_roots({dev.a * pl.b - dev.b * pl.a, 2.0 * (dev.a * pl.c - dev.c * pl.a),
                     dev.b * pl.c - dev.c * pl.b},
                    cand);
  }
  double best = 0.0;
  for (double t : cand) best = std::max(best, value(t));
  return best;
}

// Orthonormal basis of span(F) in L2(P_X), as functions on the design.
Eigen::MatrixXd span_basis(const Dictionary& dict, const DiscreteProblem& p) {
  dict.check_compatible(p);
  const auto& px = p.marginal();
  const auto X = static_cast<Eigen::Index>(dict.design_size());
  const auto M = static_cast<Eigen::Index>(dict.size());
  Eigen::MatrixXd F(X, M);
  for (Eigen::Index j = 0; j < M; ++j)
    for (Eigen::Index x = 0; x < X; ++x)
      F(x, j) = dict.value(static_cast<std::size_t>(j), static_cast<std::size_t>(x));
  Eigen::VectorXd sw(X);
  for (Eigen::Index x = 0; x < X; ++x) sw(x) = std::sqrt(px[static_cast<std::size_t>(x)]);
  const Eigen::MatrixXd W = sw.asDiagonal() * F;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W.transpose() * W);
  const double top = M > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  const double tol = std::max(top, 1e-300) * 1e-12 * static_cast<double>(M);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < M; ++k)
    if (eig.eigenvalues()(k) > tol) keep.push_back(k);
  Eigen::MatrixXd basis(X, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const Eigen::Index k = keep[c];
    basis.col(static_cast<Eigen::Index>(c)) =
        F * eig.eigenvectors().col(k) / std::sqrt(eig.eigenvalues()(k));
  }
  return basis;
}

// 2 max |D| over the closure of {theta : |D(theta)| > P L(theta) / 2}.
double required_level(const SegmentModel& model, const Quadratic& dev) {
  const Quadratic& pl = model.excess;
  std::vector<double> cand{0.0, 1.0, model.theta_star};
  push_grid(cand);
  push_vertex(dev, cand);
  push_unit_roots({dev.a - 0.5 * pl.a, dev.b - 0.5 * pl.b, dev.c - 0.5 * pl.c}, cand);
  push_unit_roots({-dev.a - 0.5 * pl.a, -dev.b - 0.5 * pl.b, -dev.c - 0.5 * pl.c}, cand);
  double best = 0.0;
  for (double t : cand) {
    const double d = std::abs(dev(t));
    const double half = 0.5 * std::max(pl(t), 0.0);
    if (d >= half - 1e-12 * (d + half)) best = std::max(best, d);
  }
  return 2.0 * best;
}

struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

MonteCarloEstimate localized_sup(const LocalizedClass& cls, const DiscreteProblem& p,
                                 std::size_t n, std::size_t reps, std::uint64_t seed, int jobs) {
  if (reps < 2) throw std::invalid_argument("localized_sup: reps must be >= 2");
  if (n < 1) throw std::invalid_argument("localized_sup: n must be >= 1");
  if (!(cls.level_lambda > 0.0))
    throw std::invalid_argument("localized_sup: level_lambda must be > 0");
  const double lambda = cls.level_lambda;
  const std::size_t atoms = p.atoms().size();

  // Each alternative maps empirical atom frequencies to the supremum.
  std::function<double(const std::vector<double>&)> sup;
  if (const auto* s = std::get_if<SegmentExcessLoss>(&cls.members)) {
    auto model = std::make_shared<SegmentModel>(s->segment, p);
    sup = [model, lambda, loc = cls.localization](const std::vector<double>& freq) {
      return segment_sup(*model, model->deviation(freq), lambda, loc);
    };
  } else if (const auto* s = std::get_if<SpanBall>(&cls.members)) {
    // sup over {f in span : P f^2 <= lambda} of |(P - P_n) f| = sqrt(lambda) |v|
    // with v_k = (P - P_n) e_k over an orthonormal basis e.
    auto basis = std::make_shared<Eigen::MatrixXd>(span_basis(s->dictionary, p));
    sup = [basis, lambda, &p](const std::vector<double>& freq) {
      Eigen::VectorXd diff = Eigen::VectorXd::Zero(basis->rows());
      for (std::size_t x = 0; x < p.marginal().size(); ++x)
        diff(static_cast<Eigen::Index>(x)) = p.marginal()[x];
      for (std::size_t a = 0; a < freq.size(); ++a)
        diff(static_cast<Eigen::Index>(p.atoms()[a].x)) -= freq[a];
      return std::sqrt(lambda) * (basis->transpose() * diff).norm();
    };
  } else {
    const auto& fns = std::get<EnumeratedClass>(cls.members).functions;
    if (fns.empty()) throw std::invalid_argument("localized_sup: empty class");
    std::vector<double> mean(fns.size(), 0.0);
    for (std::size_t h = 0; h < fns.size(); ++h) {
      if (fns[h].size() != atoms)
        throw std::invalid_argument("localized_sup: class functions need one value per atom");
      for (std::size_t a = 0; a < atoms; ++a) mean[h] += p.atoms()[a].prob * fns[h][a];
    }
    sup = [&fns, mean, lambda, loc = cls.localization](const std::vector<double>& freq) {
      double best = 0.0;
      for (std::size_t h = 0; h < fns.size(); ++h) {
        double emp = 0.0;
        for (std::size_t a = 0; a < freq.size(); ++a) emp += freq[a] * fns[h][a];
        double scale = 1.0;
        if (mean[h] > lambda) {
          if (loc == Localization::level_set) continue;
          scale = lambda / mean[h];
        }
        best = std::max(best, scale * std::abs(mean[h] - emp));
      }
      return best;
    };
  }

  const AtomSampler sampler(p);
  std::vector<double> values(reps);
  parallel_for(reps, jobs, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::vector<std::size_t> idx;
    sampler.draw_into(n, rng, idx);
    values[r] = sup(atom_frequencies(idx, atoms));
  });
  const Summary s = summarize(values);
  return {s.mean, s.std_error, reps};
}

double rademacher_segment_bound(double b, double mu, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rademacher_segment_bound: n must be >= 1");
  return 8.0 * b * std::sqrt(mu / static_cast<double>(n));
}

double rademacher_span_bound(double b, double mu, std::size_t n, std::size_t m_prime) {
  if (m_prime < 1) throw std::invalid_argument("rademacher_span_bound: M' must be >= 1");
  return rademacher_segment_bound(b, mu * static_cast<double>(m_prime), n);
}

std::size_t span_rank(const Dictionary& dict, const DiscreteProblem& p) {
  return static_cast<std::size_t>(span_basis(dict, p).cols());
}

double peeling_bound(const std::function<double(double)>& per_level, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("peeling_bound: lambda must be > 0");
  constexpr int kMaxTerms = 4096;
  constexpr int kStall = 32;
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int i = 0; i < kMaxTerms; ++i) {
    const double term = std::ldexp(per_level(std::ldexp(lambda, i + 1)), -i);
    if (!std::isfinite(term)) throw std::domain_error("peeling_bound: non-finite term");
    sum += term;
    if (std::abs(term) <= 1e-15 * std::abs(sum)) return sum;
    stalled = std::abs(term) >= std::abs(prev) ? stalled + 1 : 0;
    if (stalled >= kStall) throw std::domain_error("peeling_bound: series does not converge");
    prev = term;
  }
  throw std::domain_error("peeling_bound: series does not converge");
}

double fixed_point(const std::function<double(double)>& bound) {
  auto ok = [&](double l) { return bound(l) <= l / 8.0; };
  double last_ratio = std::numeric_limits<double>::quiet_NaN();
  // Walks monotonically in lambda; the ratio must not increase with lambda.
  auto probe = [&](double l, bool ascending) {
    const double ratio = bound(l) / l;
    if (!std::isnan(last_ratio)) {
      const bool increased = ascending ? ratio > last_ratio * (1 + 1e-9) + 1e-300
                                       : last_ratio > ratio * (1 + 1e-9) + 1e-300;
      if (increased) throw std::domain_error("fixed_point: bound(lambda)/lambda increases");
    }
    last_ratio = ratio;
    return ratio <= 1.0 / 8.0;
  };

  double lo, hi;
  if (probe(1.0, false)) {
    hi = 1.0;
    lo = 0.5;
    while (probe(lo, false)) {
      hi = lo;
      lo *= 0.5;
      if (lo < kFixedPointFloor) return kFixedPointFloor;
    }
  } else {
    lo = 1.0;
    hi = 2.0;
    while (!probe(hi, true)) {
      lo = hi;
      hi *= 2.0;
      if (hi > kFixedPointCeiling)
        throw std::domain_error("fixed_point: no crossing below the search ceiling");
    }
  }
  while (hi / lo - 1.0 > 1e-10) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double gamma(double x, double b, std::size_t N, std::size_t n, double c0) {
  if (N < 1 || n < 1) throw std::invalid_argument("gamma: N and n must be >= 1");
  if (x < 0.0 || c0 < 0.0) throw std::invalid_argument("gamma: x and c0 must be >= 0");
  return c0 * b * b * (x + 2.0 * std::log(static_cast<double>(N))) / static_cast<double>(n);
}

double rho_n(double x, double lambda_star, double B, double sup_norm, std::size_t n, double c0) {
  if (n < 1) throw std::invalid_argument("rho_n: n must be >= 1");
  return std::max(lambda_star, c0 * (B + sup_norm) * x / static_cast<double>(n));
}

BinomialInterval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double t = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / t;
  const double denom = 1.0 + z * z / t;
  const double center = (ph + z * z / (2.0 * t)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / t + z * z / (4.0 * t * t)) / denom;
  // The closed form lands a rounding error away from 0 or 1 at the extremes.
  return {successes == 0 ? 0.0 : std::max(0.0, center - half),
          successes == trials ? 1.0 : std::min(1.0, center + half)};
}

SegmentDeviations simulate_segment_deviations(const std::vector<Segment>& segments,
                                              const DiscreteProblem& p, std::size_t n,
                                              std::size_t reps, std::uint64_t seed, int jobs) {
  if (segments.empty()) throw std::invalid_argument("isomorphism: no segments");
  if (n < 1 || reps < 1) throw std::invalid_argument("isomorphism: n and reps must be >= 1");
  std::vector<SegmentModel> models;
  models.reserve(segments.size());
  for (const Segment& s : segments) models.emplace_back(s, p);

  SegmentDeviations out;
  out.n = n;
  out.bound_b = p.bound_b();
  out.required_level.assign(reps, 0.0);
  out.erm_excess.assign(reps, 0.0);
  const AtomSampler sampler(p);
  parallel_for(reps, jobs, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::vector<std::size_t> idx;
    sampler.draw_into(n, rng, idx);
    const auto freq = atom_frequencies(idx, p.atoms().size());
    std::vector<Sample> pairs;
    pairs.reserve(n);
    for (std::size_t a : idx) pairs.push_back({p.atoms()[a].x, p.atoms()[a].y});
    const SampleSet sample(std::move(pairs), derive_seed(seed, r));
    for (std::size_t k = 0; k < models.size(); ++k) {
      const auto& m = models[k];
      out.required_level[r] = std::max(out.required_level[r], required_level(m, m.deviation(freq)));
      const double theta_hat = erm_segment(segments[k], sample).theta;
      out.erm_excess[r] = std::max(out.erm_excess[r], m.excess(theta_hat));
    }
  });
  return out;
}

IsomorphismReport isomorphism_report(const SegmentDeviations& dev, double x, double c0,
                                     std::size_t pool_size) {
  IsomorphismReport rep;
  rep.x = x;
  rep.c0 = c0;
  rep.trials = dev.required_level.size();
  rep.bound = 4.0 * std::exp(-x);
  rep.gamma_or_rho = gamma(x, dev.bound_b, pool_size, dev.n, c0);
  for (std::size_t r = 0; r < rep.trials; ++r) {
    if (dev.required_level[r] > rep.gamma_or_rho) {
      ++rep.violations;
    } else if (dev.erm_excess[r] > rep.gamma_or_rho * (1.0 + 1e-12) + 1e-15) {
      ++rep.implication_failures;
    }
  }
  const double t = static_cast<double>(rep.trials);
  rep.rate = rep.trials ? static_cast<double>(rep.violations) / t : 0.0;
  rep.std_error = rep.trials ? std::sqrt(rep.rate * (1.0 - rep.rate) / t) : 0.0;
  rep.interval = wilson_interval(rep.violations, rep.trials);
  rep.underpowered = t * std::min(1.0, rep.bound) < 5.0;
  return rep;
}

std::vector<Segment> random_segments(const Dictionary& pool, std::size_t count,
                                     std::uint64_t seed) {
  if (pool.size() < 2) throw std::invalid_argument("random_segments: pool needs two functions");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, pool.size() - 1), second(0, pool.size() - 2);
  auto row = [&](std::size_t j) {
    const auto f = pool.function(j);
    return FunctionVector(f.begin(), f.end());
  };
  std::vector<Segment> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = first(rng);
    std::size_t j = second(rng);
    if (j >= i) ++j;
    out.emplace_back(row(i), row(j));
  }
  return out;
}

IsomorphismReport isomorphism_check(const std::vector<Segment>& segments,
                                    const DiscreteProblem& p, std::size_t n, double x, double c0,
                                    std::size_t pool_size, std::size_t reps, std::uint64_t seed,
                                    int jobs) {
  return isomorphism_report(simulate_segment_deviations(segments, p, n, reps, seed, jobs), x, c0,
                            pool_size);
}

double calibrate_c0(const SegmentDeviations& dev, const std::vector<double>& x_levels,
                    std::size_t pool_size) {
  const std::size_t T = dev.required_level.size();
  if (T == 0) throw std::invalid_argument("calibrate_c0: no datasets");
  std::vector<double> sorted = dev.required_level;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double c0 = 0.0;
  for (double x : x_levels) {
    // gamma is linear in c0, so violation at level gamma(x, c0) means
    // required > c0 * per_unit. Allow floor(T * target) violations.
    const double per_unit = gamma(x, dev.bound_b, pool_size, dev.n, 1.0);
    const double target = std::min(1.0, 4.0 * std::exp(-x));
    const auto allowed = static_cast<std::size_t>(std::floor(target * static_cast<double>(T)));
    if (allowed >= T || per_unit <= 0.0) continue;
    c0 = std::max(c0, sorted[allowed] / per_unit);
  }
  return c0;
}

}  // namespace convagg::localization
