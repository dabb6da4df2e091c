#pragma once

// Ridge readouts: population solution, characteristic error and capacity,
// finite-sample estimation and its error theory.

#include "tdr/tasks.hpp"

namespace tdr {

struct Readout {
  Matrix weights;   // W, N x q
  Vector intercept; // a, q
  double lambda = 0.0;
};

/// W = (Gamma(0) + lambda I)^{-1} Cov(x, y), a = mu_y - W^T mu_x.
/// Symmetric positive-definite factorization; on failure the diagonal gets
/// one jitter of 1e-12 trace / N, then kSingular is thrown.
Readout ridge_solve(const Matrix& gamma0, const Matrix& cov_xy, const Vector& mu_x,
                    const Vector& mu_y, double lambda);

struct CapacityReport {
  double mse_char = 0.0;
  double capacity = 0.0;
  double trace_cov_yy = 0.0;
  double nmse = 0.0;
  /// The same error through the expanded
  /// trace(Cyy - C^T (G + l I)^{-1} (G + 2 l I) (G + l I)^{-1} C) form.
  double mse_char_expanded = 0.0;
};

/// Characteristic error and capacity from population moments. Both forms
/// are evaluated in long double.
CapacityReport characteristic_error(const Matrix& gamma0, const Matrix& cov_xy,
                                    const Matrix& cov_yy, double lambda);

/// Same, computing every moment from the model and the task.
CapacityReport characteristic_error(const ModelMoments& model, const TaskSpec& task,
                                    const MomentProvider& provider, double lambda);

struct SamplePair {
  Matrix x;  // N x T
  Matrix y;  // q x T
};

struct EmpiricalMoments {
  Vector mu_x;
  Vector mu_y;
  Matrix gamma0;  // (1/T) X A X^T
  Matrix cov_yy;  // (1/T) Y A Y^T
  Matrix cov_xy;  // (1/T) X A Y^T
};

/// Population-style (1/T) estimators.
EmpiricalMoments empirical_moments(const SamplePair& s);

/// W = (X A X^T + lambda T I)^{-1} X A Y^T, a = (1/T)(Y - W^T X) 1.
Readout ridge_fit_samples(const SamplePair& s, double lambda);

/// Applies a readout to states: W^T X + a 1^T.
Matrix predict(const Readout& r, const Matrix& x);

/// Mean squared error trace summed over outputs, averaged over columns.
double mean_squared_error(const Matrix& predicted, const Matrix& target);

/// Conditional sampling moments of the ridge estimator at fixed X for data
/// y = a + W^T x + e, e ~ N(0, Sigma_eps^q).
struct RidgeSamplingMoments {
  Matrix bias_w;        // -lambda T R W
  Matrix sigma_w_row;   // (I - lambda T R) R, N x N
  Matrix sigma_w_col;   // Sigma_eps^q, q x q
  Vector bias_a;        // lambda W^T R X 1
  Matrix sigma_a;       // q x q
  /// Cross covariance of vec(W_hat) and a_hat including the mean-product
  /// term vec(S W) 1^T X^T S W / T with S = I - lambda T R, Nq x q.
  Matrix sigma_wa;
  /// -Sigma_eps^q (x) (Sigma_W^r X 1 / T): the covariance term alone.
  Matrix sigma_wa_central;
};

RidgeSamplingMoments ridge_sampling_moments(const Matrix& x, double lambda,
                                            const Matrix& w_lambda,
                                            const Matrix& sigma_eps_q);

/// Inputs of the conditional total-error formula.
struct TotalErrorInputs {
  Matrix gamma0;
  Vector mu_x;
  Matrix w_lambda;
  Matrix sigma_eps_q;
  double mse_char = 0.0;
};

/// Total error of a readout estimated on the states X (N x T), given the
/// population quantities.
double total_error(const TotalErrorInputs& in, const Matrix& x, double lambda);

/// Population inputs from the model and task: W_lambda, MSE_char and the
/// residual covariance Cov(y - W_lambda^T x) as Sigma_eps^q.
TotalErrorInputs total_error_inputs(const ModelMoments& model, const TaskSpec& task,
                                    const MomentProvider& provider, double lambda);

double total_error(const ModelMoments& model, const TaskSpec& task,
                   const MomentProvider& provider, const Matrix& x, double lambda);

struct TotalErrorApprox {
  double mse_char_approx = 0.0;
  /// After substituting the population moments by sample ones.
  double mse_total_given_noise = 0.0;
  /// Fully empirical: also W_hat for W_lambda and MSE_char^approx for
  /// trace(Sigma_eps^q).
  double mse_total_approx = 0.0;
};

/// Sample-moment approximation. `trace_sigma_eps` and `w_lambda` feed the
/// intermediate value; when omitted it equals the fully empirical one.
TotalErrorApprox total_error_approx(const SamplePair& s, double lambda);
TotalErrorApprox total_error_approx(const SamplePair& s, double lambda,
                                    double trace_sigma_eps, const Matrix& w_lambda);

}  // namespace tdr
