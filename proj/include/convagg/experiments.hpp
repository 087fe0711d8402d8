#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convagg/model.hpp"
#include "convagg/rates.hpp"
#include "convagg/solver.hpp"

namespace convagg::experiments {

enum class ProblemKind { inside_hull, outside_hull, pure_noise };

std::string_view to_string(ProblemKind kind);
/// Accepts "inside-hull", "outside-hull", "pure-noise".
ProblemKind parse_problem_kind(std::string_view text);

struct GridPoint {
  std::size_t n = 0;
  std::size_t M = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// n in {64, 256, 1024, 4096} x M in {2, 4, 16, 64, 256}, n-major.
std::vector<GridPoint> default_grid();

struct ExperimentConfig {
  std::vector<GridPoint> grid = default_grid();
  ProblemKind problem_kind = ProblemKind::inside_hull;
  /// Number of design points. At least the largest M so the population
  /// objective is strictly convex for generic draws.
  std::size_t atoms_K = 512;
  std::size_t replications = 200;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  std::vector<double> x_levels{1.0, 2.0, 3.0};
  double bound_b = 1.0;
  /// Half-width of the symmetric noise, as a fraction of b.
  double noise = 0.5;

  void validate() const;
};

struct GeneratedProblem {
  DiscreteProblem problem;
  Dictionary dictionary;
  /// Mixing weights of the regression function for inside-hull problems.
  std::optional<SimplexWeights> hidden_weights;
};

/// K design points with P_X ~ Dirichlet(1, ..., 1) and dictionary values
/// uniform on [-b, b]. The regression function r is a hidden Dirichlet mix of
/// the dictionary (inside-hull), uniform on [-b, b] per point (outside-hull),
/// or 0 (pure-noise). Y = r(x) +- delta with equal odds, where
/// delta = min(noise * b, b - |r(x)|).
GeneratedProblem make_problem(ProblemKind kind, std::size_t K, std::size_t M, double b,
                              std::uint64_t seed, double noise = 0.5);

/// Everything a trial needs that depends only on the problem.
struct TrialContext {
  GeneratedProblem generated;
  /// Population risk minimizer over conv(F) at tolerance 1e-10.
  std::vector<double> population_minimizer;
  double oracle_risk = 0.0;
  AtomSampler sampler;

  explicit TrialContext(GeneratedProblem g);
};

struct TrialRecord {
  std::size_t n = 0;
  std::size_t M = 0;
  std::size_t replication = 0;
  /// R(ERM-C) - min over conv(F) of R, both exact population risks.
  double excess_risk = 0.0;
  double oracle_risk = 0.0;
  std::uint64_t seed = 0;
  bool converged = true;
};

struct TrialResult {
  TrialRecord record;
  SimplexWeights weights;
};

/// Draws n pairs from stream `seed`, runs ERM over the hull, and scores it.
/// `record.replication` is left at 0 for the caller to fill.
TrialResult run_trial(const TrialContext& ctx, std::size_t n, const SolverConfig& cfg,
                      std::uint64_t seed);

/// derive_seed(master, n, M, replication)
std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t M,
                         std::size_t replication);
/// Seed of the problem shared by every grid point with this M.
std::uint64_t problem_seed(std::uint64_t master, std::size_t M);

struct CellSummary {
  std::size_t n = 0;
  std::size_t M = 0;
  double psi = 0.0;
  double phi = 0.0;
  rates::Regime regime = rates::Regime::small_M;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0, q25 = 0.0, q75 = 0.0, q90 = 0.0;
  double max = 0.0;
  /// Even grid index: used to fit c_hat. Odd: held out.
  bool fit_point = false;
  /// Held-out points only: mean <= 2 c_hat b^2 psi.
  bool within_envelope = true;
};

struct DeviationRow {
  double x = 0.0;
  std::size_t trials = 0;
  std::size_t exceedances = 0;
  double frequency = 0.0;
  double std_error = 0.0;  ///< sqrt(f (1 - f) / trials)
  double bound = 0.0;      ///< 4 exp(-x)
  /// frequency <= bound + 2 std_error
  bool within_bound = false;
};

struct RateReport {
  std::vector<CellSummary> cells;
  double c_hat = 0.0;      ///< max over fit points of mean / (b^2 psi)
  double c_hat_phi = 0.0;  ///< same fit against phi_n
  bool expectation_holds = true;
  std::vector<DeviationRow> deviation;
  std::size_t failures = 0;
  bool complete = true;
};

struct GridRun {
  std::vector<TrialRecord> records;
  RateReport report;
};

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Frequency of {excess > c_hat b^2 max(psi, x / n)} pooled over records.
std::vector<DeviationRow> deviation_table(const std::vector<TrialRecord>& records, double c_hat,
                                          double b, const std::vector<double>& x_levels);

/// Folds records (in grid order) into a report.
RateReport build_report(const ExperimentConfig& cfg, const std::vector<TrialRecord>& records);

/// Runs every (grid point, replication). Records come back n-major, then M,
/// then replication, whatever `jobs` is.
GridRun run_grid(const ExperimentConfig& cfg, int jobs = 1);

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_report_json(std::ostream& out, const ExperimentConfig& cfg, const RateReport& report);

}  // namespace convagg::experiments
