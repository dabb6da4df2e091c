#pragma once

// Synthetic linear-Gaussian regression used by the ridge checks:
// x ~ N(mu, G), y = a + W^T x + e, e ~ N(0, s2), q = 1.

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tdr/readout.hpp"

namespace synthetic {

using tdr::Matrix;
using tdr::Vector;

struct Regression {
  Matrix gamma0;
  Vector mu;
  Vector w;
  double a = 0.0;
  double noise_var = 0.0;

  Matrix cov_xy() const { return gamma0 * w; }
  Matrix cov_yy() const { return Matrix::Constant(1, 1, w.dot(gamma0 * w) + noise_var); }
};

inline Regression make_regression(int n, double noise_var, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Regression r;
  r.gamma0 = oracle::random_spd(n, rng) / static_cast<double>(n);
  r.mu = Vector::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
  r.w = Vector::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
  r.a = u(rng);
  r.noise_var = noise_var;
  return r;
}

inline Matrix draw_states(const Regression& r, long t, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const Matrix l = r.gamma0.llt().matrixL();
  Matrix x(r.gamma0.rows(), t);
  for (long c = 0; c < t; ++c) {
    const Vector e = Vector::NullaryExpr(r.gamma0.rows(), [&](Eigen::Index) { return nd(rng); });
    x.col(c) = r.mu + l * e;
  }
  return x;
}

inline Matrix draw_targets(const Matrix& x, const Vector& w, double a, double noise_var,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(noise_var));
  Matrix y = (w.transpose() * x).array() + a;
  for (Eigen::Index c = 0; c < y.cols(); ++c) y(0, c) += nd(rng);
  return y;
}

/// Population squared error of the readout (w_hat, a_hat) on a fresh pair.
inline double population_mse(const Regression& r, const Vector& w_hat, double a_hat) {
  const Vector dw = r.w - w_hat;
  const double da = r.a - a_hat;
  return r.noise_var + dw.dot((r.gamma0 + r.mu * r.mu.transpose()) * dw) + 2 * da * dw.dot(r.mu) +
         da * da;
}

struct TotalErrorRun {
  double mc_mse = 0.0;       // average out-of-sample error of the fitted readouts
  double mc_se = 0.0;
  double formula = 0.0;      // conditional total error at the fixed X
  double approx_mean = 0.0;  // fully empirical approximation, averaged over draws
  double mse_char = 0.0;
};

/// Fixed X, repeated training on fresh noise.
inline TotalErrorRun total_error_run(const Regression& r, const Matrix& x, double lambda,
                                     long draws, std::mt19937_64& rng) {
  const Matrix cxy = r.cov_xy();
  const Matrix cyy = r.cov_yy();
  const tdr::Readout pop = tdr::ridge_solve(r.gamma0, cxy, r.mu, Vector::Constant(1, r.a + r.w.dot(r.mu)), lambda);
  tdr::TotalErrorInputs in;
  in.gamma0 = r.gamma0;
  in.mu_x = r.mu;
  in.w_lambda = pop.weights;
  in.sigma_eps_q = cyy - cxy.transpose() * pop.weights - pop.weights.transpose() * cxy +
                   pop.weights.transpose() * r.gamma0 * pop.weights;
  in.mse_char = tdr::characteristic_error(r.gamma0, cxy, cyy, lambda).mse_char;

  TotalErrorRun out;
  out.formula = tdr::total_error(in, x, lambda);
  out.mse_char = in.mse_char;
  double sum = 0.0, sum2 = 0.0, approx = 0.0;
  for (long k = 0; k < draws; ++k) {
    const tdr::SamplePair s{x, draw_targets(x, r.w, r.a, r.noise_var, rng)};
    const tdr::Readout fit = tdr::ridge_fit_samples(s, lambda);
    const double e = population_mse(r, fit.weights.col(0), fit.intercept(0));
    sum += e;
    sum2 += e * e;
    approx += tdr::total_error_approx(s, lambda).mse_total_approx;
  }
  const double n = static_cast<double>(draws);
  out.mc_mse = sum / n;
  out.mc_se = std::sqrt((sum2 / n - out.mc_mse * out.mc_mse) / n);
  out.approx_mean = approx / n;
  return out;
}

struct SamplingCheck {
  int outside = 0;  // statistics further than 3 standard errors from the theory
  int checked = 0;
};

/// Resamples y = a + W_lambda^T x + e at fixed X and compares the mean and
/// covariance of (W_hat, a_hat) with the ridge sampling moments.
inline SamplingCheck sampling_moments_run(const Matrix& x, const Vector& w_lambda, double a,
                                          double noise_var, double lambda, long draws,
                                          std::mt19937_64& rng) {
  const int n = static_cast<int>(x.rows());
  const tdr::RidgeSamplingMoments th =
      tdr::ridge_sampling_moments(x, lambda, w_lambda, Matrix::Constant(1, 1, noise_var));
  const int m = n + 1;  // (W_hat, a_hat)
  Vector mean_th(m);
  mean_th << w_lambda + th.bias_w.col(0), a + th.bias_a(0);
  Matrix cov_th(m, m);
  cov_th.topLeftCorner(n, n) = noise_var * th.sigma_w_row;
  cov_th.topRightCorner(n, 1) = th.sigma_wa_central;
  cov_th.bottomLeftCorner(1, n) = th.sigma_wa_central.transpose();
  cov_th(n, n) = th.sigma_a(0, 0);

  Matrix samples(m, draws);
  for (long k = 0; k < draws; ++k) {
    const tdr::Readout fit =
        tdr::ridge_fit_samples({x, draw_targets(x, w_lambda, a, noise_var, rng)}, lambda);
    samples.col(k) << fit.weights.col(0), fit.intercept(0);
  }
  const double dn = static_cast<double>(draws);
  const Vector mean = samples.rowwise().mean();
  const Matrix c = samples.colwise() - mean;
  SamplingCheck out;
  for (int i = 0; i < m; ++i) {
    const double se = std::sqrt(c.row(i).squaredNorm() / dn / dn);
    ++out.checked;
    if (std::abs(mean(i) - mean_th(i)) > 3 * se) ++out.outside;
    for (int j = 0; j <= i; ++j) {
      const Eigen::ArrayXd prod = c.row(i).array() * c.row(j).array();
      const double cov = prod.mean();
      const double se_cov = std::sqrt((prod - cov).square().mean() / dn);
      ++out.checked;
      if (std::abs(cov - cov_th(i, j)) > 3 * se_cov) ++out.outside;
    }
  }
  return out;
}

}  // namespace synthetic
