// convagg: command-line front end.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "convagg/config.hpp"
#include "convagg/csv_io.hpp"
#include "convagg/experiments.hpp"
#include "convagg/localization.hpp"
#include "convagg/maurey.hpp"
#include "convagg/parallel.hpp"
#include "convagg/rates.hpp"
#include "convagg/risk.hpp"
#include "convagg/solver.hpp"

namespace fs = std::filesystem;
using namespace convagg;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;

void print_row(std::ostream& out, const std::string& metric, const std::string& value) {
  out << metric << ',' << value << '\n';
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw CLI::ValidationError("list", "bad integer '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

// ---- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string dict, samples, weights_out;
  double tol = 1e-8;
  std::size_t max_iter = 100000;
};

int run_solve(const SolveArgs& a) {
  const Dictionary dict = io::load_dictionary(a.dict);
  const SampleSet s = io::load_samples(a.samples);
  SolverConfig cfg;
  cfg.tolerance = a.tol;
  cfg.max_iterations = a.max_iter;
  const ErmSolution sol = erm_convex_hull(dict, s, cfg);

  const nlohmann::json doc = {{"M", dict.size()},
                              {"n", s.size()},
                              {"weights", sol.weights.values()},
                              {"empirical_risk", sol.risk},
                              {"duality_gap", sol.duality_gap},
                              {"iterations", sol.iterations},
                              {"converged", sol.converged}};
  std::cout << doc.dump(2) << '\n';
  if (!a.weights_out.empty()) io::save(a.weights_out, sol.weights.values());
  return sol.converged ? kOk : kNumerical;
}

// ---- sparsify --------------------------------------------------------------

struct SparsifyArgs {
  std::string dict, weights, problem, samples;
  std::size_t m = 1;
  std::uint64_t seed = 0;
};

int run_sparsify(const SparsifyArgs& a) {
  const Dictionary dict = io::load_dictionary(a.dict);
  const SimplexWeights w(io::load_weights(a.weights));
  if (w.size() != dict.size())
    throw std::runtime_error("weights have " + std::to_string(w.size()) + " entries, dictionary " +
                             std::to_string(dict.size()));
  const Multiset ms = maurey::sparsify_random(w, a.m, a.seed);
  const FunctionVector avg = multiset_average(dict, ms);
  const FunctionVector full = combine(dict, w);

  std::string indices;
  for (std::size_t j : ms.indices()) indices += (indices.empty() ? "" : " ") + std::to_string(j);

  auto& out = std::cout;
  out << "metric,value\n";
  print_row(out, "m", std::to_string(a.m));
  print_row(out, "seed", std::to_string(a.seed));
  print_row(out, "multiset", indices);
  if (!a.problem.empty()) {
    const DiscreteProblem p = io::load_problem(a.problem);
    dict.check_compatible(p);
    print_row(out, "population_risk_combination", io::format_double(population_risk(full, p)));
    print_row(out, "population_risk_sparsified", io::format_double(population_risk(avg, p)));
    print_row(out, "variance_term", io::format_double(variance_term(w, dict, p)));
    print_row(out, "expected_sparsified_risk",
              io::format_double(maurey::expected_sparsified_risk(w, a.m, dict, p)));
  }
  if (!a.samples.empty()) {
    const SampleSet s = io::load_samples(a.samples);
    print_row(out, "empirical_risk_combination", io::format_double(empirical_risk(full, s)));
    print_row(out, "empirical_risk_sparsified", io::format_double(empirical_risk(avg, s)));
    print_row(out, "empirical_variance_term",
              io::format_double(empirical_variance_term(w, dict, s)));
  }
  return kOk;
}

// ---- rates -----------------------------------------------------------------

struct RatesArgs {
  std::string n_grid = "64,256,1024,4096";
  std::string m_grid = "2,4,16,64,256";
};

int run_rates(const RatesArgs& a) {
  const auto ns = parse_size_list(a.n_grid);
  const auto ms = parse_size_list(a.m_grid);
  std::cout << "n,M,psi,phi,regime,gap_ratio\n";
  for (std::size_t n : ns)
    for (std::size_t M : ms) {
      const auto r = rates::rate_point(n, M);
      std::cout << n << ',' << M << ',' << io::format_double(r.psi) << ','
                << io::format_double(r.phi) << ',' << rates::to_string(r.regime) << ','
                << io::format_double(rates::gap_ratio(n, M)) << '\n';
    }
  return kOk;
}

// ---- isomorphism -----------------------------------------------------------

struct IsomorphismArgs {
  std::string problem, dict;
  std::size_t n = 256, segments = 10, reps = 2000;
  std::vector<double> x{1.0, 2.0, 3.0};
  std::optional<double> c0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

int run_isomorphism(const IsomorphismArgs& a) {
  namespace loc = localization;
  const DiscreteProblem p = io::load_problem(a.problem);
  const Dictionary pool = io::load_dictionary(a.dict);
  pool.check_compatible(p);
  const auto segs = loc::random_segments(pool, a.segments, derive_seed(a.seed, 0));

  double c0 = 0.0;
  if (a.c0) {
    c0 = *a.c0;
  } else {
    // Calibrate on an independent batch so the reported rate is out of sample.
    const auto cal = loc::simulate_segment_deviations(segs, p, a.n, a.reps, derive_seed(a.seed, 1),
                                                      a.jobs);
    c0 = loc::calibrate_c0(cal, a.x, pool.size());
  }
  const auto dev =
      loc::simulate_segment_deviations(segs, p, a.n, a.reps, derive_seed(a.seed, 2), a.jobs);

  std::cout << "x,c0,gamma,violations,trials,rate,bound,ci_low,ci_high,implication_failures\n";
  for (double x : a.x) {
    const auto r = loc::isomorphism_report(dev, x, c0, pool.size());
    std::cout << io::format_double(x) << ',' << io::format_double(c0) << ','
              << io::format_double(r.gamma_or_rho) << ',' << r.violations << ',' << r.trials
              << ',' << io::format_double(r.rate) << ',' << io::format_double(r.bound) << ','
              << io::format_double(r.interval.low) << ',' << io::format_double(r.interval.high)
              << ',' << r.implication_failures << '\n';
    if (r.underpowered)
      std::cerr << "note: " << r.trials << " datasets cannot resolve 4exp(-" << x << ")\n";
  }
  return kOk;
}

// ---- experiment ------------------------------------------------------------

struct ExperimentArgs {
  std::string config, out = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

int run_experiment(const ExperimentArgs& a) {
  auto cfg = config::load_config(a.config);
  if (a.seed) cfg.master_seed = *a.seed;
  const auto run = experiments::run_grid(cfg, a.jobs);

  fs::create_directories(a.out);
  {
    std::ofstream f(fs::path(a.out) / "trials.csv");
    if (!f) throw std::runtime_error("cannot write trials.csv in '" + a.out + "'");
    experiments::write_trials_csv(f, run.records);
  }
  {
    std::ofstream f(fs::path(a.out) / "report.json");
    if (!f) throw std::runtime_error("cannot write report.json in '" + a.out + "'");
    experiments::write_report_json(f, cfg, run.report);
  }
  std::cerr << run.records.size() << " trials, c_hat = " << run.report.c_hat
            << (run.report.complete ? "" : " (incomplete)") << '\n';
  return run.report.complete ? kOk : kNumerical;
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "inside-hull", out = ".";
  std::size_t K = 32, M = 8, n = 100;
  double b = 1.0, noise = 0.5;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  const auto g = experiments::make_problem(experiments::parse_problem_kind(a.kind), a.K, a.M, a.b,
                                           a.seed, a.noise);
  const SampleSet s = AtomSampler(g.problem).draw(a.n, derive_seed(a.seed, 1));
  fs::create_directories(a.out);
  io::save((fs::path(a.out) / "problem.csv").string(), g.problem);
  io::save((fs::path(a.out) / "dictionary.csv").string(), g.dictionary);
  io::save((fs::path(a.out) / "samples.csv").string(), s);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex aggregation by empirical risk minimization"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* c_solve = app.add_subcommand("solve", "ERM over the convex hull of a dictionary");
  c_solve->add_option("--dict", solve.dict, "dictionary CSV")->required()->check(CLI::ExistingFile);
  c_solve->add_option("--samples", solve.samples, "samples CSV")->required()->check(CLI::ExistingFile);
  c_solve->add_option("--tol", solve.tol, "duality gap tolerance")->check(CLI::PositiveNumber);
  c_solve->add_option("--max-iter", solve.max_iter, "iteration cap")->check(CLI::PositiveNumber);
  c_solve->add_option("--weights-out", solve.weights_out, "also write weights CSV here");

  SparsifyArgs sparsify;
  auto* c_sparsify = app.add_subcommand("sparsify", "Maurey sparsification of a weight vector");
  c_sparsify->add_option("--dict", sparsify.dict, "dictionary CSV")->required()->check(CLI::ExistingFile);
  c_sparsify->add_option("--weights", sparsify.weights, "weights CSV")->required()->check(CLI::ExistingFile);
  c_sparsify->add_option("--m", sparsify.m, "number of draws")->required()->check(CLI::PositiveNumber);
  c_sparsify->add_option("--problem", sparsify.problem, "problem CSV for population risks")->check(CLI::ExistingFile);
  c_sparsify->add_option("--samples", sparsify.samples, "samples CSV for empirical risks")->check(CLI::ExistingFile);
  c_sparsify->add_option("--seed", sparsify.seed, "random seed");

  RatesArgs rts;
  auto* c_rates = app.add_subcommand("rates", "tabulate psi_n(M) and phi_n(M)");
  c_rates->add_option("--n-grid", rts.n_grid, "comma-separated sample sizes");
  c_rates->add_option("--m-grid", rts.m_grid, "comma-separated dictionary sizes");

  IsomorphismArgs iso;
  auto* c_iso = app.add_subcommand("isomorphism", "Monte Carlo check of the segment isomorphism");
  c_iso->add_option("--problem", iso.problem, "problem CSV")->required()->check(CLI::ExistingFile);
  c_iso->add_option("--dict", iso.dict, "function pool CSV")->required()->check(CLI::ExistingFile);
  c_iso->add_option("--n", iso.n, "sample size")->check(CLI::PositiveNumber);
  c_iso->add_option("--segments", iso.segments, "number of random segments")->check(CLI::PositiveNumber);
  c_iso->add_option("--reps", iso.reps, "simulated datasets")->check(CLI::PositiveNumber);
  c_iso->add_option("--x", iso.x, "confidence levels")->delimiter(',');
  c_iso->add_option("--c0", iso.c0, "threshold constant; calibrated when omitted");
  c_iso->add_option("--seed", iso.seed, "random seed");
  c_iso->add_option("--jobs", iso.jobs, "worker threads (0 = all)");

  ExperimentArgs exp;
  auto* c_exp = app.add_subcommand("experiment", "run a Monte Carlo grid of ERM trials");
  c_exp->add_option("--config", exp.config, "configuration file")->required()->check(CLI::ExistingFile);
  c_exp->add_option("--out", exp.out, "output directory");
  c_exp->add_option("--seed", exp.seed, "overrides master_seed");
  c_exp->add_option("--jobs", exp.jobs, "worker threads (0 = all)");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "write a random problem, dictionary and sample");
  c_gen->add_option("--kind", gen.kind, "inside-hull | outside-hull | pure-noise")
      ->check(CLI::IsMember({"inside-hull", "outside-hull", "pure-noise"}));
  c_gen->add_option("--K", gen.K, "design points")->check(CLI::PositiveNumber);
  c_gen->add_option("--M", gen.M, "dictionary size")->check(CLI::PositiveNumber);
  c_gen->add_option("--n", gen.n, "sample size")->check(CLI::PositiveNumber);
  c_gen->add_option("--b", gen.b, "bound on |Y| and |f|")->check(CLI::PositiveNumber);
  c_gen->add_option("--noise", gen.noise, "noise half-width as a fraction of b")->check(CLI::Range(0.0, 1.0));
  c_gen->add_option("--seed", gen.seed, "random seed");
  c_gen->add_option("--out", gen.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*c_solve) return run_solve(solve);
    if (*c_sparsify) return run_sparsify(sparsify);
    if (*c_rates) return run_rates(rts);
    if (*c_iso) return run_isomorphism(iso);
    if (*c_exp) return run_experiment(exp);
    if (*c_gen) return run_generate(gen);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
