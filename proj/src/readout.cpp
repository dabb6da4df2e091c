#include "tdr/readout.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "tdr/error.hpp"

namespace tdr {

namespace {

// Solves M X = B for symmetric positive (semi-)definite M.
Matrix spd_solve(const Matrix& m, const Matrix& b) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.solve(b);
  const double jitter = 1e-12 * m.trace() / static_cast<double>(m.rows());
  if (jitter > 0.0) {
    Matrix mj = m;
    mj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> retry(mj);
    if (retry.info() == Eigen::Success) return retry.solve(b);
  }
  fail(ErrorCode::kSingular,
       "ridge system is singular; use a positive ridge constant lambda");
}

Matrix centered(const Matrix& x) {
  return x.colwise() - x.rowwise().mean();
}

}  // namespace

Readout ridge_solve(const Matrix& gamma0, const Matrix& cov_xy, const Vector& mu_x,
                    const Vector& mu_y, double lambda) {
  require(lambda >= 0.0, "ridge_solve: lambda must be >= 0");
  require(gamma0.rows() == gamma0.cols() && cov_xy.rows() == gamma0.rows() &&
              mu_x.size() == gamma0.rows() && mu_y.size() == cov_xy.cols(),
          "ridge_solve: dimension mismatch");
  Matrix sys = gamma0;
  sys.diagonal().array() += lambda;
  Readout r;
  r.lambda = lambda;
  r.weights = spd_solve(sys, cov_xy);
  r.intercept = mu_y - r.weights.transpose() * mu_x;
  return r;
}

CapacityReport characteristic_error(const Matrix& gamma0, const Matrix& cov_xy,
                                    const Matrix& cov_yy, double lambda) {
  require(lambda >= 0.0, "characteristic_error: lambda must be >= 0");
  require(gamma0.rows() == gamma0.cols() && cov_xy.rows() == gamma0.rows() &&
              cov_yy.rows() == cov_xy.cols() && cov_yy.cols() == cov_xy.cols(),
          "characteristic_error: dimension mismatch");
  // Extended precision: with small lambda the system is ill-conditioned and
  // both forms lose about eps * cond(Gamma(0) + lambda I) in double.
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const LMatrix g = gamma0.cast<long double>();
  const LMatrix c = cov_xy.cast<long double>();
  const long double lam = lambda;

  LMatrix sys = g;
  sys.diagonal().array() += lam;
  Eigen::LLT<LMatrix> llt(sys);
  if (llt.info() != Eigen::Success) {
    // Same fallback and error as ridge_solve.
    (void)ridge_solve(gamma0, cov_xy, Vector::Zero(gamma0.rows()), Vector::Zero(cov_xy.cols()),
                      lambda);
    sys.diagonal().array() += 1e-12L * g.trace() / static_cast<long double>(g.rows());
    llt.compute(sys);
  }
  const LMatrix w = llt.solve(c);

  CapacityReport rep;
  const long double tr_yy = cov_yy.cast<long double>().trace();
  rep.trace_cov_yy = static_cast<double>(tr_yy);
  LMatrix g2 = g;
  g2.diagonal().array() += 2.0L * lam;
  rep.mse_char = static_cast<double>(tr_yy - (w.transpose() * g2 * w).trace());

  // Expanded form through an eigendecomposition of Gamma(0).
  Eigen::SelfAdjointEigenSolver<LMatrix> es(0.5L * (g + g.transpose()));
  const LVector ev = es.eigenvalues();
  LVector scale(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const long double d = ev(i) + lam;
    scale(i) = d > 0.0L ? (ev(i) + 2.0L * lam) / (d * d) : 0.0L;
  }
  const LMatrix vc = es.eigenvectors().transpose() * c;
  rep.mse_char_expanded =
      static_cast<double>(tr_yy - (vc.transpose() * scale.asDiagonal() * vc).trace());

  if (rep.trace_cov_yy > 0.0) {
    rep.nmse = rep.mse_char / rep.trace_cov_yy;
    rep.capacity = 1.0 - rep.nmse;
  } else {
    rep.nmse = std::numeric_limits<double>::quiet_NaN();
    rep.capacity = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

CapacityReport characteristic_error(const ModelMoments& model, const TaskSpec& task,
                                    const MomentProvider& provider, double lambda) {
  const Matrix cxy = task_cross_covariance(task, model, provider);
  const TaskCovariance cyy = task_output_covariance(task, provider);
  return characteristic_error(model.gamma0, cxy, cyy.cov, lambda);
}

EmpiricalMoments empirical_moments(const SamplePair& s) {
  require(s.x.cols() == s.y.cols() && s.x.cols() >= 2,
          "empirical_moments: need matching sample sizes T >= 2");
  const double t = static_cast<double>(s.x.cols());
  EmpiricalMoments m;
  m.mu_x = s.x.rowwise().mean();
  m.mu_y = s.y.rowwise().mean();
  const Matrix xc = centered(s.x);
  const Matrix yc = centered(s.y);
  m.gamma0 = xc * xc.transpose() / t;
  m.cov_yy = yc * yc.transpose() / t;
  m.cov_xy = xc * yc.transpose() / t;
  return m;
}

Readout ridge_fit_samples(const SamplePair& s, double lambda) {
  require(lambda >= 0.0, "ridge_fit_samples: lambda must be >= 0");
  require(s.x.cols() == s.y.cols() && s.x.cols() >= 2,
          "ridge_fit_samples: need matching sample sizes T >= 2");
  const double t = static_cast<double>(s.x.cols());
  const Matrix xc = centered(s.x);
  Matrix sys = xc * xc.transpose();
  sys.diagonal().array() += lambda * t;
  Readout r;
  r.lambda = lambda;
  r.weights = spd_solve(sys, xc * centered(s.y).transpose());
  r.intercept = (s.y - r.weights.transpose() * s.x).rowwise().mean();
  return r;
}

Matrix predict(const Readout& r, const Matrix& x) {
  return (r.weights.transpose() * x).colwise() + r.intercept;
}

double mean_squared_error(const Matrix& predicted, const Matrix& target) {
  require(predicted.rows() == target.rows() && predicted.cols() == target.cols(),
          "mean_squared_error: shape mismatch");
  return (predicted - target).squaredNorm() / static_cast<double>(target.cols());
}

namespace {

// R = (X A X^T + lambda T I)^{-1}.
Matrix ridge_resolvent(const Matrix& x, double lambda) {
  const double t = static_cast<double>(x.cols());
  const Matrix xc = centered(x);
  Matrix sys = xc * xc.transpose();
  sys.diagonal().array() += lambda * t;
  return spd_solve(sys, Matrix::Identity(x.rows(), x.rows()));
}

}  // namespace

RidgeSamplingMoments ridge_sampling_moments(const Matrix& x, double lambda,
                                            const Matrix& w_lambda,
                                            const Matrix& sigma_eps_q) {
  require(lambda >= 0.0, "ridge_sampling_moments: lambda must be >= 0");
  require(x.cols() >= 2 && w_lambda.rows() == x.rows() &&
              sigma_eps_q.rows() == w_lambda.cols() && sigma_eps_q.cols() == w_lambda.cols(),
          "ridge_sampling_moments: dimension mismatch");
  const Eigen::Index n = x.rows();
  const Eigen::Index q = w_lambda.cols();
  const double t = static_cast<double>(x.cols());
  const Matrix r = ridge_resolvent(x, lambda);
  const Matrix shrink = Matrix::Identity(n, n) - lambda * t * r;  // I - lambda T R
  const Vector x1 = x.rowwise().sum();                            // X 1

  RidgeSamplingMoments m;
  m.bias_w = -lambda * t * r * w_lambda;
  m.sigma_w_row = shrink * r;
  m.sigma_w_col = sigma_eps_q;
  m.bias_a = lambda * w_lambda.transpose() * r * x1;
  m.sigma_a = (1.0 + (m.sigma_w_row * x1 * x1.transpose()).trace() / t) / t * sigma_eps_q;

  const Matrix sw = shrink * w_lambda;
  const Vector vec_sw = vec_op(sw);
  const Vector rx1 = m.sigma_w_row * x1;
  m.sigma_wa_central = -kron(sigma_eps_q, rx1) / t;
  m.sigma_wa = (vec_sw * x1.transpose() * sw) / t + m.sigma_wa_central;
  (void)q;
  return m;
}

double total_error(const TotalErrorInputs& in, const Matrix& x, double lambda) {
  require(lambda >= 0.0, "total_error: lambda must be >= 0");
  require(x.cols() >= 2 && x.rows() == in.gamma0.rows() && in.mu_x.size() == x.rows() &&
              in.w_lambda.rows() == x.rows(),
          "total_error: dimension mismatch");
  const Eigen::Index n = x.rows();
  const double t = static_cast<double>(x.cols());
  const Matrix rr = ridge_resolvent(x, lambda);
  const Vector x1 = x.rowwise().sum();
  const Matrix q = in.gamma0 + in.mu_x * in.mu_x.transpose() +
                   x1 * x1.transpose() / (t * t) - (2.0 / t) * in.mu_x * x1.transpose();
  const double tr_s = in.sigma_eps_q.trace();
  const Matrix shrink = Matrix::Identity(n, n) - lambda * t * rr;
  const Matrix& w = in.w_lambda;
  return in.mse_char + tr_s / t + tr_s * (shrink * rr * q).trace() +
         lambda * lambda * t * t * (w.transpose() * rr * q * rr * w).trace() +
         2.0 * lambda * lambda * t * (w.transpose() * rr * w).trace();
}

TotalErrorInputs total_error_inputs(const ModelMoments& model, const TaskSpec& task,
                                    const MomentProvider& provider, double lambda) {
  const Matrix cxy = task_cross_covariance(task, model, provider);
  const TaskCovariance cyy = task_output_covariance(task, provider);
  const Readout r = ridge_solve(model.gamma0, cxy, model.mu_x, cyy.mean, lambda);
  const Matrix& w = r.weights;
  TotalErrorInputs in;
  in.gamma0 = model.gamma0;
  in.mu_x = model.mu_x;
  in.w_lambda = w;
  in.sigma_eps_q = cyy.cov - cxy.transpose() * w - w.transpose() * cxy +
                   w.transpose() * model.gamma0 * w;
  in.mse_char = characteristic_error(model.gamma0, cxy, cyy.cov, lambda).mse_char;
  return in;
}

double total_error(const ModelMoments& model, const TaskSpec& task,
                   const MomentProvider& provider, const Matrix& x, double lambda) {
  return total_error(total_error_inputs(model, task, provider, lambda), x, lambda);
}

TotalErrorApprox total_error_approx(const SamplePair& s, double lambda,
                                    double trace_sigma_eps, const Matrix& w_lambda) {
  require(lambda >= 0.0, "total_error_approx: lambda must be >= 0");
  require(s.x.cols() == s.y.cols() && s.x.cols() >= 2,
          "total_error_approx: need matching sample sizes T >= 2");
  const Eigen::Index n = s.x.rows();
  const double t = static_cast<double>(s.x.cols());
  const Matrix xc = centered(s.x);
  const Matrix yc = centered(s.y);
  const Matrix xax = xc * xc.transpose();
  const Matrix xay = xc * yc.transpose();
  const Matrix rr = ridge_resolvent(s.x, lambda);
  const Matrix id = Matrix::Identity(n, n);
  const Matrix shrink = id - lambda * t * rr;
  const Matrix w_hat = rr * xay;

  TotalErrorApprox out;
  out.mse_char_approx =
      ((yc * yc.transpose()) - xay.transpose() * (id + lambda * t * rr) * rr * xay).trace() / t;
  const double bracket = 1.0 + (shrink * rr * xax).trace();
  const Matrix three = 3.0 * id - lambda * t * rr;
  auto lam_term = [&](const Matrix& w) {
    return lambda * lambda * t * (w.transpose() * rr * three * w).trace();
  };
  out.mse_total_given_noise =
      out.mse_char_approx + trace_sigma_eps / t * bracket + lam_term(w_lambda);
  out.mse_total_approx =
      out.mse_char_approx + out.mse_char_approx / t * bracket + lam_term(w_hat);
  return out;
}

TotalErrorApprox total_error_approx(const SamplePair& s, double lambda) {
  const Readout r = ridge_fit_samples(s, lambda);
  TotalErrorApprox first = total_error_approx(s, lambda, 0.0, r.weights);
  return total_error_approx(s, lambda, first.mse_char_approx, r.weights);
}

}  // namespace tdr
