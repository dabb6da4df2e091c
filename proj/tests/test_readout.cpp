#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tdr/error.hpp"
#include "tdr/readout.hpp"

using namespace tdr;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Matrix::NullaryExpr(r, c, [&](Eigen::Index, Eigen::Index) { return u(rng); });
}

Matrix uniform_mask(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_matrix(rows, cols, rng);
}

Matrix fig3_sigma() {
  return unvech((Vector(6) << 0.0016, 0.0012, 0.0008, 0.0017, 0.0002, 0.0018).finished(), 3);
}

}  // namespace

TEST_CASE("ridge_solve") {
  const Vector c = (Vector(3) << 1, -2, 0.5).finished();
  const Readout r = ridge_solve(Matrix::Identity(3, 3), c, Vector::Zero(3), Vector::Zero(1), 1.0);
  CHECK((r.weights - c / 2).norm() < 1e-15);

  const Vector mu_x = (Vector(3) << 1, 2, 3).finished();
  const Readout r0 = ridge_solve(Matrix::Identity(3, 3), Matrix::Zero(3, 1), mu_x,
                                 Vector::Constant(1, 4.5), 0.3);
  CHECK(r0.weights.isZero(0.0));
  CHECK(r0.intercept(0) == 4.5);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix g = oracle::random_spd(6, rng);
    const Matrix cxy = random_matrix(6, 2, rng);
    const Readout s = ridge_solve(g, cxy, Vector::Zero(6), Vector::Zero(2), 0.0);
    CHECK((g * s.weights - cxy).norm() < 1e-10 * cxy.norm());
  }

  try {
    (void)ridge_solve(Matrix::Zero(2, 2), Matrix::Ones(2, 1), Vector::Zero(2), Vector::Zero(1), 0.0);
    FAIL("singular system accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingular);
  }
  CHECK_THROWS_AS(
      ridge_solve(Matrix::Identity(2, 2), Matrix::Ones(2, 1), Vector::Zero(2), Vector::Zero(1), -1.0),
      Error);
}

TEST_CASE("characteristic error") {
  std::mt19937_64 rng(2);
  SUBCASE("uncorrelated target") {
    const Matrix g = oracle::random_spd(4, rng);
    const Matrix cyy = oracle::random_spd(2, rng);
    const auto rep = characteristic_error(g, Matrix::Zero(4, 2), cyy, 0.1);
    CHECK(rep.mse_char == doctest::Approx(cyy.trace()));
    CHECK(rep.capacity == doctest::Approx(0.0));
  }
  SUBCASE("linearly representable target") {
    const Matrix g = oracle::random_spd(5, rng);
    const Vector w = random_matrix(5, 1, rng);
    const auto rep = characteristic_error(g, g * w, Matrix::Constant(1, 1, w.dot(g * w)), 0.0);
    CHECK(rep.capacity == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("capacity falls to zero as lambda grows") {
    const Matrix g = oracle::random_spd(5, rng);
    const Vector w = random_matrix(5, 1, rng);
    const Matrix cyy = Matrix::Constant(1, 1, w.dot(g * w) + 0.3);
    double prev = 2.0;
    for (double lam = 1e-6; lam <= 1e2 * 1.0001; lam *= 10) {
      const double cap = characteristic_error(g, g * w, cyy, lam).capacity;
      CHECK(cap < prev);
      prev = cap;
    }
    CHECK(prev < 0.05);
    CHECK(prev >= 0.0);
  }
  SUBCASE("both forms agree and capacity is bounded") {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 9, q = 1 + trial % 3;
      // A joint PSD covariance of (x, y) keeps the instance realizable.
      const Matrix joint = oracle::random_spd(n + q, rng);
      const double lam = std::pow(10.0, -6.0 + 6.0 * (trial % 7) / 6.0);
      const auto rep = characteristic_error(joint.topLeftCorner(n, n), joint.topRightCorner(n, q),
                                            joint.bottomRightCorner(q, q), lam);
      CHECK(std::abs(rep.mse_char - rep.mse_char_expanded) <= 1e-10 * std::abs(rep.mse_char));
      CHECK(rep.capacity >= -1e-10);
      CHECK(rep.capacity <= 1.0 + 1e-10);
      CHECK(rep.nmse == doctest::Approx(rep.mse_char / rep.trace_cov_yy));
    }
  }
  SUBCASE("zero target variance gives NaN capacity") {
    const auto rep = characteristic_error(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                                          Matrix::Zero(1, 1), 0.1);
    CHECK(std::isnan(rep.capacity));
  }
}

TEST_CASE("empirical moments and sample ridge") {
  SUBCASE("hand computation") {
    const SamplePair s{(Matrix(1, 2) << 1, 3).finished(), (Matrix(1, 2) << 0, 4).finished()};
    const auto m = empirical_moments(s);
    CHECK(m.mu_x(0) == 2.0);
    CHECK(m.gamma0(0, 0) == 1.0);
    CHECK(m.cov_xy(0, 0) == 2.0);
    CHECK(m.cov_yy(0, 0) == 4.0);
    const auto mc = empirical_moments({Matrix::Constant(2, 5, 1.5), Matrix::Ones(1, 5)});
    CHECK(mc.gamma0.isZero(0.0));
    CHECK_THROWS_AS(empirical_moments({Matrix::Ones(1, 1), Matrix::Ones(1, 1)}), Error);
  }
  SUBCASE("noiseless line") {
    Matrix x(1, 10), y(1, 10);
    for (int t = 0; t < 10; ++t) {
      x(0, t) = 0.3 * t - 1;
      y(0, t) = 2 * x(0, t) + 1;
    }
    const Readout r = ridge_fit_samples({x, y}, 0.0);
    CHECK(std::abs(r.weights(0, 0) - 2.0) < 1e-10);
    CHECK(std::abs(r.intercept(0) - 1.0) < 1e-10);
    const Readout big = ridge_fit_samples({x, y}, 1e12);
    CHECK(std::abs(big.weights(0, 0)) < 1e-9);
    CHECK(big.intercept(0) == doctest::Approx(y.mean()));
  }
  SUBCASE("lambda zero is least squares with an intercept column") {
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(4, 50, rng);
    const Matrix y = random_matrix(2, 50, rng);
    Matrix design(50, 5);
    design << x.transpose(), Vector::Ones(50);
    const Matrix beta = design.colPivHouseholderQr().solve(y.transpose());
    const Readout r = ridge_fit_samples({x, y}, 0.0);
    CHECK((r.weights - beta.topRows(4)).norm() < 1e-10);
    CHECK((r.intercept - beta.row(4).transpose()).norm() < 1e-10);
    CHECK(mean_squared_error(predict(r, x), y) ==
          doctest::Approx((design * beta - y.transpose()).squaredNorm() / 50));
  }
}

TEST_CASE("sample ridge on simulated states approaches the model readout") {
  ReservoirConfig c;
  c.neurons = 6;
  c.separation = 0.5;
  c.kernel = MackeyGlass{1.6, 0.7, 2};
  c.mask = uniform_mask(6, 3, 4);
  const double x0 = std::sqrt(0.6), lambda = 1e-6;
  const auto g = MomentProvider::gaussian(fig3_sigma());
  const ModelMoments m = model_moments(c, x0, g);
  const TaskSpec task = LinearTask{(Matrix(6, 1) << 1, 0.5, -1, 0.3, 0, 0.7).finished(), 1};
  const Matrix cxy = task_cross_covariance(task, m, g);
  const Readout pop = ridge_solve(m.gamma0, cxy, m.mu_x, Vector::Zero(1), lambda);
  const auto report = characteristic_error(m, task, g, lambda);

  const Matrix z = gen_input(InputSpec{fig3_sigma()}, 200'200, 5);
  const Matrix xs = run_discrete(c, z, 200, x0);
  const Matrix ys = target_series(task, z, 200);
  double prev = 1e300;
  for (long t : {1'000L, 10'000L, 100'000L}) {
    const Readout fit = ridge_fit_samples({xs.leftCols(t), ys.leftCols(t)}, lambda);
    const double err = oracle::rel_frob(fit.weights, pop.weights);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.05);

  // The characteristic error is the floor for held-out data.
  const Readout fit = ridge_fit_samples({xs.leftCols(100'000), ys.leftCols(100'000)}, lambda);
  const Matrix res = (predict(fit, xs.rightCols(100'000)) - ys.rightCols(100'000)).array().square();
  const double mse = res.mean();
  const double se = std::sqrt((res.array() - mse).square().mean() / 100'000.0);
  CHECK(mse >= report.mse_char - 3 * se);
}

TEST_CASE("ridge sampling moments") {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(3, 40, rng).array() + 0.5;
  const Vector w = random_matrix(3, 1, rng);
  SUBCASE("lambda zero is unbiased least squares") {
    const auto m = ridge_sampling_moments(x, 0.0, w, Matrix::Constant(1, 1, 0.2));
    CHECK(m.bias_w.isZero(0.0));
    CHECK(m.bias_a.isZero(0.0));
    const Matrix xc = x.colwise() - x.rowwise().mean();
    CHECK(oracle::rel_frob(m.sigma_w_row, (xc * xc.transpose()).inverse()) < 1e-10);
  }
  SUBCASE("no noise, no spread") {
    const auto m = ridge_sampling_moments(x, 0.1, w, Matrix::Zero(1, 1));
    CHECK(m.sigma_w_col.isZero(0.0));
    CHECK(m.sigma_a.isZero(0.0));
    CHECK(m.sigma_wa_central.isZero(0.0));
  }
  SUBCASE("resampling at fixed X") {
    for (double lam : {0.0, 0.1}) {
      const auto run = synthetic::sampling_moments_run(x.topRows(2), w.head(2), 0.4, 0.3, lam,
                                                       20'000, rng);
      CHECK(run.outside == 0);
    }
  }
}

TEST_CASE("total error") {
  std::mt19937_64 rng(7);
  const auto reg = synthetic::make_regression(5, 0.25, rng);
  SUBCASE("no noise and no ridge leaves the characteristic error") {
    tdr::TotalErrorInputs in;
    in.gamma0 = reg.gamma0;
    in.mu_x = reg.mu;
    in.w_lambda = reg.w;
    in.sigma_eps_q = Matrix::Zero(1, 1);
    in.mse_char = 0.123;
    CHECK(total_error(in, synthetic::draw_states(reg, 50, rng), 0.0) == 0.123);
  }
  SUBCASE("excess error decreases with T") {
    // With lambda > 0 an O(lambda^2) shrinkage term survives the limit.
    for (double lam : {0.0, 0.01}) {
      const auto model = synthetic::total_error_run(reg, synthetic::draw_states(reg, 100, rng), lam, 1, rng);
      double prev = 1e300;
      for (long t : {100L, 1'000L, 10'000L}) {
        const Matrix x = synthetic::draw_states(reg, t, rng);
        const double excess = synthetic::total_error_run(reg, x, lam, 1, rng).formula - model.mse_char;
        CHECK(excess > 0.0);
        CHECK(excess < prev);
        prev = excess;
      }
      if (lam == 0.0) CHECK(prev < 1e-3 * model.mse_char);
    }
  }
  SUBCASE("repeated training at T=200") {
    const Matrix x = synthetic::draw_states(reg, 200, rng);
    const auto run = synthetic::total_error_run(reg, x, 0.01, 5'000, rng);
    CHECK(run.mc_mse == doctest::Approx(run.formula).epsilon(0.03));
    CHECK(run.approx_mean == doctest::Approx(run.mc_mse).epsilon(0.10));
    CHECK(run.formula > run.mse_char);
  }
  SUBCASE("approximation with known noise and weights") {
    const Matrix x = synthetic::draw_states(reg, 200, rng);
    const SamplePair s{x, synthetic::draw_targets(x, reg.w, reg.a, reg.noise_var, rng)};
    const auto full = total_error_approx(s, 0.01);
    const auto fit = ridge_fit_samples(s, 0.01);
    const auto same = total_error_approx(s, 0.01, full.mse_char_approx, fit.weights);
    CHECK(same.mse_total_given_noise == doctest::Approx(full.mse_total_approx));
    CHECK(full.mse_char_approx > 0.0);
    CHECK(full.mse_total_approx > full.mse_char_approx);
  }
}

TEST_CASE("total error from the model") {
  ReservoirConfig c;
  c.neurons = 5;
  c.separation = 0.5;
  c.kernel = MackeyGlass{1.6, 0.7, 2};
  c.mask = uniform_mask(5, 3, 8);
  const auto g = MomentProvider::gaussian(fig3_sigma());
  const ModelMoments m = model_moments(c, std::sqrt(0.6), g);
  const TaskSpec task = diag_quadratic_task(1, 3, {1, 1});
  const Matrix z = gen_input(InputSpec{fig3_sigma()}, 1'200, 9);
  const Matrix x = run_discrete(c, z, 200, std::sqrt(0.6));
  const auto in = total_error_inputs(m, task, g, 1e-6);
  // For the ridge solution the residual variance and the characteristic error coincide.
  CHECK(in.sigma_eps_q(0, 0) == doctest::Approx(in.mse_char).epsilon(1e-8));
  CHECK(total_error(m, task, g, x, 1e-6) > in.mse_char);
}
