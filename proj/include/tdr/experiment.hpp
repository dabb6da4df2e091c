#pragma once

// Experiment driver: error surfaces, robustness studies and grid
// optimization, with deterministic CSV output.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tdr/readout.hpp"

namespace tdr {

struct ExperimentConfig {
  // Input.
  Matrix sigma_z = Matrix::Constant(1, 1, 1e-4);

  // Kernel family and fixed parameters. eta / gamma / d are the values used
  // by `capacity` and the defaults of axes that are not swept.
  std::string kernel = "mackey-glass";
  double eta = 2.0;
  double gamma = 1.0;
  double p = 2.0;
  double phi = 0.0;
  double d = 0.2;

  EquilibriumSearch search;
  EquilibriumChoice choice = EquilibriumChoice::kLargestStable;

  // Reservoirs. For surfaces and `capacity`: `reservoirs` members with
  // `neurons` each.
  int neurons = 20;
  int reservoirs = 1;
  std::optional<Matrix> mask;              // explicit N x n mask
  double mask_lo = -1.0, mask_hi = 1.0;    // otherwise U[lo, hi]

  TaskSpec task = diag_quadratic_task(3, 1, {1, 1, 1, 1});
  double lambda = 1e-8;
  int taylor_order = 3;

  std::vector<double> d_grid{0.2};
  std::vector<double> eta_grid{2.0};
  std::vector<double> gamma_grid{1.0};

  // Monte Carlo.
  bool mc = true;
  bool continuous = false;
  int oversample = 32;
  long t_train = 10000;
  long t_test = 10000;
  long washout = 200;
  int replicates = 1;

  // Robustness studies.
  std::vector<int> pools{1, 2, 5, 10, 20};
  std::vector<int> neuron_totals{20, 40, 60, 80, 100};
  int draws = 1000;
  double draw_eta_lo = 1.0, draw_eta_hi = 3.0;
  double draw_gamma_lo = -3.0, draw_gamma_hi = 3.0;
  double draw_d_lo = 0.0, draw_d_hi = 1.0;
  int eval_lags = 9;
  int tasks = 1000;
  double task_weight_lo = -10.0, task_weight_hi = 10.0;
  /// (d, eta, gamma) shared by every configuration of robust-task; when
  /// absent each configuration is optimized on `task` first.
  std::optional<std::vector<double>> fixed_params;

  std::uint64_t seed = 1;
  int workers = 1;

  /// Throws Error(kInvalidArgument) on inconsistent settings.
  void validate() const;
};

/// Random-stream identifiers for split_rng.
enum class Stream : std::uint64_t {
  kMask = 1,
  kInput = 2,
  kDraw = 3,
  kTaskDraw = 4,
};

KernelSpec make_kernel(const ExperimentConfig& cfg, double eta, double gamma);

/// Mask of pool member `member`: the explicit mask when given, otherwise
/// U[mask_lo, mask_hi] from (seed, kMask, member).
Matrix make_mask(const ExperimentConfig& cfg, int neurons, int member);

/// Per-point outcome flags.
namespace flag {
inline constexpr const char* kOk = "ok";
inline constexpr const char* kNoStable = "no_stable_equilibrium";
inline constexpr const char* kRejected = "rejected_unstable";
inline constexpr const char* kDegenerate = "degenerate";
inline constexpr const char* kNumeric = "numeric_failure";
inline constexpr const char* kDiverged = "mc_diverged";
}  // namespace flag

/// True for flags that count against the numerical-failure budget.
bool is_numeric_failure(const std::string& f);

// ---------------------------------------------------------------------------
// Single point.

struct PointResult {
  double x0 = 0.0;
  CapacityReport model;
  double nmse_discrete_mc = 0.0;
  double nmse_continuous_mc = 0.0;
  std::string flag = flag::kOk;
};

/// Model NMSE and, when enabled, held-out Monte Carlo NMSE at (d, eta,
/// gamma). `stream_key` selects the input draws.
PointResult evaluate_point(const ExperimentConfig& cfg, double d, double eta, double gamma,
                           std::uint64_t stream_key);

/// Stable hash of a parameter tuple, used as a stream key so that draws do
/// not depend on grid position.
std::uint64_t param_key(const std::vector<double>& values);

/// Model NMSE of a Monte Carlo fit: ridge on the first t_train columns,
/// MSE on the rest divided by the trace of the test-target covariance.
double mc_nmse(const Matrix& states, const Matrix& targets, long t_train, double lambda);

// ---------------------------------------------------------------------------
// Commands. Each returns the rows; write_csv renders them.

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int failed = 0;  // rows flagged as numerical failures
  int points = 0;  // rows counted for the failure budget
};

Table cmd_surface(const ExperimentConfig& cfg);
Table cmd_robust_params(const ExperimentConfig& cfg);
Table cmd_robust_task(const ExperimentConfig& cfg);
Table cmd_capacity(const ExperimentConfig& cfg);

struct OptimizeResult {
  bool feasible = false;
  double d = 0.0, eta = 0.0, gamma = 0.0;
  double capacity = 0.0;
  int evaluated = 0;
  int infeasible = 0;
};

/// Exhaustive grid search over d_grid x eta_grid x gamma_grid maximizing
/// model capacity of a pool with the given member sizes (shared d, eta,
/// gamma; masks from make_mask). Ties go to the smaller d, then eta, then
/// gamma.
OptimizeResult optimize_grid(const ExperimentConfig& cfg, const std::vector<int>& sizes);

/// Pool with shared (d, eta, gamma) and masks from make_mask.
ParallelConfig make_pool(const ExperimentConfig& cfg, const std::vector<int>& sizes, double d,
                         double eta, double gamma);

/// Model of `pool` at the chosen equilibrium of each member. Throws
/// Error(kInstability) when a member has no stable equilibrium.
ModelMoments pool_model(const ExperimentConfig& cfg, const ParallelConfig& pool,
                        const MomentProvider& provider);

/// NMSE of diagonal quadratic tasks y = sum_i w_i s_i^2 over the (h+1)n
/// lagged slots s_i, for a fixed model. Cross moments are computed once;
/// each task costs O(((h+1)n)^2).
class DiagonalTaskEvaluator {
 public:
  DiagonalTaskEvaluator(const ModelMoments& model, const MomentProvider& provider, int lags,
                        double lambda);
  int slots() const { return static_cast<int>(cov_.rows()); }
  /// NaN when Cov(y, y) vanishes.
  double nmse(const Vector& w) const;

 private:
  Matrix cov_;      // Cov(s_i^2, s_j^2)
  Matrix explained_;  // B^T (G + l I)^{-1} (G + 2 l I) (G + l I)^{-1} B
};

Table cmd_optimize(const ExperimentConfig& cfg);

/// "nan" for NaN, shortest round-trip decimal otherwise.
std::string format_double(double v);

void write_csv(std::ostream& os, const Table& t);

/// Runs body(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all threads finish.
void parallel_for(int count, int workers, const std::function<void(int)>& body);

/// Splits `total` neurons over `members` reservoirs as evenly as possible,
/// larger shares first.
std::vector<int> split_neurons(int total, int members);

}  // namespace tdr
