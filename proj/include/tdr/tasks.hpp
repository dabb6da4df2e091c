#pragma once

// Linear and quadratic h-lag memory tasks over the stacked lagged input
// z^h(t) = vec(z(t), z(t-1), ..., z(t-h)), and the task moments needed by
// the capacity formula.

#include <variant>
#include <vector>

#include "tdr/var_model.hpp"

namespace tdr {

/// y(t) = L^T z^h(t), L of shape (h+1)n x q.
struct LinearTask {
  Matrix weights;
  int lags = 0;
};

/// y(t) = Q vech(z^h(t) z^h(t)^T), Q of shape q x q* with
/// q* = (h+1)n((h+1)n+1)/2.
struct QuadraticTask {
  Matrix weights;
  int lags = 0;
};

using TaskSpec = std::variant<LinearTask, QuadraticTask>;

int task_lags(const TaskSpec& task);
int task_outputs(const TaskSpec& task);
/// Polynomial degree of the task in the input (1 or 2).
int task_degree(const TaskSpec& task);
/// Throws kInvalidArgument if the task shape is inconsistent with n.
void validate_task(const TaskSpec& task, int input_dim);

/// Target series aligned with run_discrete(.., washout): column c is y at
/// time washout + c. Requires washout >= h and T > h + washout.
Matrix target_series(const TaskSpec& task, const Matrix& z, long washout);

/// Quadratic task with Q* block-diagonal, lag block l equal to w_l 1 1^T.
TaskSpec diag_quadratic_task(int lags, int input_dim, const std::vector<double>& weights);

/// Quadratic task with Q* = diag(entries) over the (h+1)n lagged slots.
TaskSpec diagonal_quadratic_task(int lags, int input_dim, const std::vector<double>& diag);

struct TaskCovariance {
  Matrix cov;   // q x q
  Vector mean;  // q
  double trace() const { return cov.trace(); }
};

/// Cov(y, y) and E[y] under IID zero-mean inputs.
TaskCovariance task_output_covariance(const TaskSpec& task, const MomentProvider& provider);

/// A product of input coordinates at given lags: each factor is
/// z_{var}(t - lag).
struct LaggedFactor {
  int var = 0;
  int lag = 0;
};
using LaggedMonomial = std::vector<LaggedFactor>;

/// E[prod of factors] with independence across distinct lags.
double lagged_expectation(const LaggedMonomial& mono, const MomentProvider& provider);

/// E[eps(t - k) * prod factors] where eps is the innovation polynomial of
/// one neuron: factors at lag k join the polynomial, the rest factor out.
double eps_cross_moment(const Polynomial& innovation, int k, const LaggedMonomial& mono,
                        const MomentProvider& provider);

/// Same, building the innovation of neuron u (1-based) of `cfg` at x0.
double eps_cross_moment(const ReservoirConfig& cfg, double x0, int order, int u, int k,
                        const LaggedMonomial& mono, const MomentProvider& provider);

/// Cov(X(t), y(t)), N* x q, from the MA representation of the model.
Matrix task_cross_covariance(const TaskSpec& task, const ModelMoments& model,
                             const MomentProvider& provider);

}  // namespace tdr
