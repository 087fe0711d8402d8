#include "convagg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "convagg/csv_io.hpp"
#include "convagg/parallel.hpp"
#include "convagg/risk.hpp"

namespace convagg::experiments {

namespace {

constexpr std::uint64_t kProblemTag = 0x70726f626c656dULL;

std::vector<double> dirichlet_ones(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& v : w) total += (v = e(rng));
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::inside_hull: return "inside-hull";
    case ProblemKind::outside_hull: return "outside-hull";
    case ProblemKind::pure_noise: return "pure-noise";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "inside-hull") return ProblemKind::inside_hull;
  if (text == "outside-hull") return ProblemKind::outside_hull;
  if (text == "pure-noise") return ProblemKind::pure_noise;
  throw std::invalid_argument("unknown problem kind '" + std::string(text) + "'");
}

std::vector<GridPoint> default_grid() {
  std::vector<GridPoint> g;
  for (std::size_t n : {64, 256, 1024, 4096})
    for (std::size_t M : {2, 4, 16, 64, 256}) g.push_back({n, M});
  return g;
}

void ExperimentConfig::validate() const {
  if (grid.empty()) throw std::invalid_argument("config: grid is empty");
  for (const auto& g : grid)
    if (g.n < 1 || g.M < 1) throw std::invalid_argument("config: grid entries need n, M >= 1");
  if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
  if (atoms_K < 1) throw std::invalid_argument("config: atoms_K must be >= 1");
  if (!(bound_b > 0.0)) throw std::invalid_argument("config: bound_b must be > 0");
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("config: noise must be in [0, 1]");
  solver.validate();
}

GeneratedProblem make_problem(ProblemKind kind, std::size_t K, std::size_t M, double b,
                              std::uint64_t seed, double noise) {
  if (K < 1 || M < 1) throw std::invalid_argument("make_problem: K and M must be >= 1");
  if (!(b > 0.0)) throw std::invalid_argument("make_problem: b must be > 0");
  std::mt19937_64 rng(seed);
  const auto px = dirichlet_ones(K, rng);

  std::uniform_real_distribution<double> unif(-b, b);
  std::vector<FunctionVector> fns(M, FunctionVector(K));
  for (auto& f : fns)
    for (auto& v : f) v = unif(rng);
  Dictionary dict(fns);

  std::optional<SimplexWeights> hidden;
  FunctionVector r(K, 0.0);
  if (kind == ProblemKind::inside_hull) {
    hidden.emplace(dirichlet_ones(M, rng));
    r = combine(dict, *hidden);
  } else if (kind == ProblemKind::outside_hull) {
    for (auto& v : r) v = unif(rng);
  }

  std::vector<Atom> atoms;
  for (std::size_t x = 0; x < K; ++x) {
    const double rx = std::clamp(r[x], -b, b);
    const double delta = std::min(noise * b, b - std::abs(rx));
    if (delta > 0.0) {
      atoms.push_back({x, rx + delta, 0.5 * px[x]});
      atoms.push_back({x, rx - delta, 0.5 * px[x]});
    } else {
      atoms.push_back({x, rx, px[x]});
    }
  }
  return {DiscreteProblem(std::move(atoms), b), std::move(dict), std::move(hidden)};
}

TrialContext::TrialContext(GeneratedProblem g)
    : generated(std::move(g)), sampler(generated.problem) {
  SolverConfig cfg;
  cfg.tolerance = 1e-10;
  cfg.max_iterations = 1'000'000;
  const auto sol =
      erm_constrained(generated.dictionary, generated.problem, simplex_constraint(), cfg);
  population_minimizer = sol.coefficients;
  oracle_risk = sol.risk;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t M,
                         std::size_t replication) {
  return derive_seed(master, n, M, replication);
}

std::uint64_t problem_seed(std::uint64_t master, std::size_t M) {
  return derive_seed(master, kProblemTag, M);
}

TrialResult run_trial(const TrialContext& ctx, std::size_t n, const SolverConfig& cfg,
                      std::uint64_t seed) {
  const auto& dict = ctx.generated.dictionary;
  const auto& p = ctx.generated.problem;
  const SampleSet sample = ctx.sampler.draw(n, seed);
  auto sol = erm_convex_hull(dict, sample, cfg);
  TrialRecord rec;
  rec.n = n;
  rec.M = dict.size();
  rec.oracle_risk = ctx.oracle_risk;
  rec.excess_risk = population_risk(combine(dict, sol.weights), p) - ctx.oracle_risk;
  rec.seed = seed;
  rec.converged = sol.converged;
  return {rec, std::move(sol.weights)};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<DeviationRow> deviation_table(const std::vector<TrialRecord>& records, double c_hat,
                                          double b, const std::vector<double>& x_levels) {
  std::vector<DeviationRow> rows;
  for (double x : x_levels) {
    DeviationRow row;
    row.x = x;
    row.bound = 4.0 * std::exp(-x);
    for (const auto& r : records) {
      if (!std::isfinite(r.excess_risk)) continue;
      ++row.trials;
      const double level = c_hat * b * b *
                           std::max(rates::psi_c(r.n, r.M), x / static_cast<double>(r.n));
      if (r.excess_risk > level) ++row.exceedances;
    }
    if (row.trials > 0) {
      const double t = static_cast<double>(row.trials);
      row.frequency = static_cast<double>(row.exceedances) / t;
      row.std_error = std::sqrt(row.frequency * (1.0 - row.frequency) / t);
    }
    row.within_bound = row.frequency <= row.bound + 2.0 * row.std_error;
    rows.push_back(row);
  }
  return rows;
}

RateReport build_report(const ExperimentConfig& cfg, const std::vector<TrialRecord>& records) {
  RateReport rep;
  const double b2 = cfg.bound_b * cfg.bound_b;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const TrialRecord*>> by_cell;
  for (const auto& r : records) by_cell[{r.n, r.M}].push_back(&r);

  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const auto [n, M] = cfg.grid[i];
    CellSummary c;
    c.n = n;
    c.M = M;
    c.psi = rates::psi_c(n, M);
    c.phi = rates::phi_n(n, M);
    c.regime = rates::regime(n, M);
    c.fit_point = i % 2 == 0;
    std::vector<double> ex;
    for (const TrialRecord* r : by_cell[{n, M}]) {
      if (std::isfinite(r->excess_risk))
        ex.push_back(r->excess_risk);
      else
        ++c.failures;
      if (!r->converged) rep.complete = false;
    }
    c.trials = ex.size();
    rep.failures += c.failures;
    if (!ex.empty()) {
      double sum = 0.0;
      for (double e : ex) sum += e;
      c.mean = sum / static_cast<double>(ex.size());
      c.median = quantile(ex, 0.5);
      c.q10 = quantile(ex, 0.10);
      c.q25 = quantile(ex, 0.25);
      c.q75 = quantile(ex, 0.75);
      c.q90 = quantile(ex, 0.90);
      c.max = *std::max_element(ex.begin(), ex.end());
    }
    if (c.fit_point && c.trials > 0) {
      rep.c_hat = std::max(rep.c_hat, c.mean / (b2 * c.psi));
      rep.c_hat_phi = std::max(rep.c_hat_phi, c.mean / (b2 * c.phi));
    }
    rep.cells.push_back(c);
  }
  if (rep.failures > 0) rep.complete = false;

  for (auto& c : rep.cells) {
    if (c.fit_point || c.trials == 0) continue;
    c.within_envelope = c.mean <= 2.0 * rep.c_hat * b2 * c.psi;
    rep.expectation_holds = rep.expectation_holds && c.within_envelope;
  }
  rep.deviation = deviation_table(records, rep.c_hat, cfg.bound_b, cfg.x_levels);
  return rep;
}

GridRun run_grid(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();

  // One problem per distinct M, shared by every n.
  std::vector<std::size_t> Ms;
  for (const auto& g : cfg.grid)
    if (std::find(Ms.begin(), Ms.end(), g.M) == Ms.end()) Ms.push_back(g.M);
  std::vector<std::optional<TrialContext>> contexts(Ms.size());
  parallel_for(Ms.size(), jobs, [&](std::size_t i) {
    contexts[i].emplace(make_problem(cfg.problem_kind, cfg.atoms_K, Ms[i], cfg.bound_b,
                                     problem_seed(cfg.master_seed, Ms[i]), cfg.noise));
  });
  auto context_for = [&](std::size_t M) -> const TrialContext& {
    return *contexts[static_cast<std::size_t>(std::find(Ms.begin(), Ms.end(), M) - Ms.begin())];
  };

  const std::size_t reps = cfg.replications;
  GridRun run;
  run.records.resize(cfg.grid.size() * reps);
  parallel_for(run.records.size(), jobs, [&](std::size_t t) {
    const auto [n, M] = cfg.grid[t / reps];
    const std::size_t rep = t % reps;
    const std::uint64_t seed = trial_seed(cfg.master_seed, n, M, rep);
    TrialRecord rec;
    try {
      rec = run_trial(context_for(M), n, cfg.solver, seed).record;
    } catch (const std::exception&) {
      rec.n = n;
      rec.M = M;
      rec.oracle_risk = context_for(M).oracle_risk;
      rec.excess_risk = std::nan("");
      rec.seed = seed;
      rec.converged = false;
    }
    rec.replication = rep;
    run.records[t] = rec;
  });
  run.report = build_report(cfg, run.records);
  return run;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "n,M,replication,excess_risk,oracle_risk,seed,converged\n";
  for (const auto& r : records)
    out << r.n << ',' << r.M << ',' << r.replication << ',' << io::format_double(r.excess_risk)
        << ',' << io::format_double(r.oracle_risk) << ',' << r.seed << ','
        << (r.converged ? 1 : 0) << '\n';
}

void write_report_json(std::ostream& out, const ExperimentConfig& cfg, const RateReport& report) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"n", c.n},
                     {"M", c.M},
                     {"regime", rates::to_string(c.regime)},
                     {"psi", num(c.psi)},
                     {"phi", num(c.phi)},
                     {"trials", c.trials},
                     {"failures", c.failures},
                     {"mean", num(c.mean)},
                     {"median", num(c.median)},
                     {"q10", num(c.q10)},
                     {"q25", num(c.q25)},
                     {"q75", num(c.q75)},
                     {"q90", num(c.q90)},
                     {"max", num(c.max)},
                     {"fit_point", c.fit_point},
                     {"within_envelope", c.within_envelope}});
  json dev = json::array();
  for (const auto& d : report.deviation)
    dev.push_back({{"x", d.x},
                   {"trials", d.trials},
                   {"exceedances", d.exceedances},
                   {"frequency", num(d.frequency)},
                   {"std_error", num(d.std_error)},
                   {"bound", num(d.bound)},
                   {"within_bound", d.within_bound}});
  json grid = json::array();
  for (const auto& g : cfg.grid) grid.push_back({g.n, g.M});
  const json doc = {{"config",
                     {{"grid", grid},
                      {"problem_kind", to_string(cfg.problem_kind)},
                      {"atoms_K", cfg.atoms_K},
                      {"replications", cfg.replications},
                      {"master_seed", cfg.master_seed},
                      {"bound_b", cfg.bound_b},
                      {"noise", cfg.noise},
                      {"x_levels", cfg.x_levels},
                      {"solver",
                       {{"max_iterations", cfg.solver.max_iterations},
                        {"tolerance", cfg.solver.tolerance}}}}},
                    {"c_hat", num(report.c_hat)},
                    {"c_hat_phi", num(report.c_hat_phi)},
                    {"expectation_holds", report.expectation_holds},
                    {"complete", report.complete},
                    {"failures", report.failures},
                    {"cells", cells},
                    {"deviation", dev}};
  out << doc.dump(2) << '\n';
}

}  // namespace convagg::experiments
