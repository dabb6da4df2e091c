#include "tdr/reservoir.hpp"

#include <string>

#include "tdr/error.hpp"
#include "tdr/rng.hpp"

namespace tdr {

void ReservoirConfig::validate() const {
  require(neurons >= 1, "reservoir: need at least one neuron");
  require(separation > 0.0 && std::isfinite(separation),
          "reservoir: separation d must be positive");
  require(mask.rows() == neurons,
          "reservoir: mask has " + std::to_string(mask.rows()) + " rows, expected " +
              std::to_string(neurons));
  require(mask.cols() >= 1, "reservoir: mask needs at least one column");
  require(mask.allFinite(), "reservoir: mask has non-finite entries");
}

int ParallelConfig::total_neurons() const {
  int total = 0;
  for (const auto& r : reservoirs) total += r.neurons;
  return total;
}

int ParallelConfig::input_dim() const {
  return reservoirs.empty() ? 0 : reservoirs.front().input_dim();
}

int ParallelConfig::offset(std::size_t j) const {
  int off = 0;
  for (std::size_t i = 0; i < j; ++i) off += reservoirs[i].neurons;
  return off;
}

void ParallelConfig::validate() const {
  require(!reservoirs.empty(), "parallel: empty pool");
  for (const auto& r : reservoirs) {
    r.validate();
    require(r.input_dim() == input_dim(), "parallel: masks disagree on input dimension");
  }
}

Matrix covariance_factor(const Matrix& sigma) {
  require(sigma.rows() == sigma.cols(), "covariance must be square");
  const double scale = std::max(1e-300, sigma.cwiseAbs().maxCoeff());
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "covariance must be symmetric");
  const int n = static_cast<int>(sigma.rows());
  if (sigma.isZero(0.0)) return Matrix::Zero(n, n);
  Eigen::LDLT<Matrix> ldlt(sigma);
  if (ldlt.info() != Eigen::Success)
    fail(ErrorCode::kInvalidArgument, "covariance factorization failed");
  const Vector dvec = ldlt.vectorD();
  if (dvec.minCoeff() < -1e-12 * scale)
    fail(ErrorCode::kInvalidArgument, "covariance is not positive semi-definite");
  const Matrix l = ldlt.matrixL();
  Matrix b = l * dvec.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  // sigma = P^T L D L^T P
  return ldlt.transpositionsP().transpose() * b;
}

Matrix gen_input(const InputSpec& spec, long steps, std::uint64_t seed) {
  require(steps >= 1, "gen_input: need T >= 1");
  Rng rng(seed);
  return gen_input(spec, steps, rng);
}

Vector reservoir_map(const ReservoirConfig& cfg, const Vector& prev, const Vector& forcing) {
  const int n = cfg.neurons;
  const double a = cfg.decay();
  const double b = 1.0 - a;
  Vector next(n);
  double left = prev(n - 1);  // x_0(t) = x_N(t-1)
  for (int i = 0; i < n; ++i) {
    next(i) = a * left + b * eval_kernel(cfg.kernel, prev(i), forcing(i));
    left = next(i);
  }
  return next;
}

Matrix run_discrete(const ReservoirConfig& cfg, const Matrix& z, long washout,
                    std::optional<double> x0) {
  cfg.validate();
  require(z.rows() == cfg.input_dim(), "run_discrete: input dimension does not match mask");
  require(washout >= 0 && washout < z.cols(), "run_discrete: washout must be in [0, T)");
  const long steps = z.cols();
  const int n = cfg.neurons;
  Matrix out(n, steps - washout);
  Vector x = Vector::Constant(n, x0.value_or(0.0));
  const Matrix forcing = cfg.mask * z;
  for (long t = 0; t < steps; ++t) {
    x = reservoir_map(cfg, x, forcing.col(t));
    if (!x.allFinite())
      fail(ErrorCode::kDivergence, "reservoir state diverged at t=" + std::to_string(t), t);
    if (t >= washout) out.col(t - washout) = x;
  }
  return out;
}

Matrix run_continuous(const ReservoirConfig& cfg, const Matrix& z, int oversample,
                      long washout, std::optional<double> x0) {
  cfg.validate();
  require(oversample >= 2, "run_continuous: oversampling M must be >= 2");
  require(z.rows() == cfg.input_dim(), "run_continuous: input dimension does not match mask");
  require(washout >= 0 && washout < z.cols(), "run_continuous: washout must be in [0, T)");
  const long steps = z.cols();
  const int n = cfg.neurons;
  const long per_delay = static_cast<long>(n) * oversample;
  const double h = cfg.separation / oversample;
  const Matrix forcing = cfg.mask * z;

  // Ring buffer holding x over the last delay period plus the current point.
  std::vector<double> hist(static_cast<std::size_t>(per_delay + 1), x0.value_or(0.0));
  long head = per_delay;  // slot of the current point x(s_k)
  auto slot = [&](long back) {
    long s = head - back;
    if (s < 0) s += per_delay + 1;
    return static_cast<std::size_t>(s);
  };

  Matrix out(n, steps - washout);
  for (long t = 0; t < steps; ++t) {
    for (int i = 0; i < n; ++i) {
      const double input = forcing(i, t);
      for (int m = 0; m < oversample; ++m) {
        const double x = hist[slot(0)];
        const double delayed = hist[slot(per_delay)];
        const double next = x + h * (-x + eval_kernel(cfg.kernel, delayed, input));
        head = (head + 1) % (per_delay + 1);
        hist[slot(0)] = next;
      }
      const double sample = hist[slot(0)];
      if (!std::isfinite(sample))
        fail(ErrorCode::kDivergence,
             "delay equation diverged at t=" + std::to_string(t), t);
      if (t >= washout) out(i, t - washout) = sample;
    }
  }
  return out;
}

Matrix run_parallel(const ParallelConfig& pcfg, const Matrix& z, long washout,
                    const std::vector<std::optional<double>>& x0) {
  pcfg.validate();
  require(x0.empty() || x0.size() == pcfg.reservoirs.size(),
          "run_parallel: one initial value per reservoir");
  Matrix out(pcfg.total_neurons(), z.cols() - washout);
  int row = 0;
  for (std::size_t j = 0; j < pcfg.reservoirs.size(); ++j) {
    const auto& r = pcfg.reservoirs[j];
    out.middleRows(row, r.neurons) =
        run_discrete(r, z, washout, x0.empty() ? std::nullopt : x0[j]);
    row += r.neurons;
  }
  return out;
}

}  // namespace tdr
