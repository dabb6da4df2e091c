#pragma once

// Time-delay reservoir simulation: input generation, the discrete-time
// layer recursion, Euler integration of the underlying delay equation, and
// parallel pools.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tdr/kernels.hpp"
#include "tdr/linalg.hpp"

namespace tdr {

struct ReservoirConfig {
  int neurons = 20;           // N
  double separation = 0.2;    // d
  KernelSpec kernel = MackeyGlass{};
  Matrix mask;                // N x n

  double xi() const { return std::log1p(separation); }
  double decay() const { return 1.0 / (1.0 + separation); }  // e^{-xi}
  double delay() const { return neurons * separation; }       // tau
  int input_dim() const { return static_cast<int>(mask.cols()); }

  /// Throws kInvalidArgument if N, d or the mask shape are inconsistent.
  void validate() const;
};

struct ParallelConfig {
  std::vector<ReservoirConfig> reservoirs;

  int total_neurons() const;
  int input_dim() const;
  /// Row offset of reservoir j in the stacked state.
  int offset(std::size_t j) const;
  void validate() const;
};

struct InputSpec {
  Matrix covariance;  // n x n, symmetric PSD
  int dim() const { return static_cast<int>(covariance.rows()); }
};

/// T IID N(0, Sigma_z) draws as the columns of an n x T matrix.
Matrix gen_input(const InputSpec& spec, long steps, std::uint64_t seed);

/// Same, from a caller-owned generator.
template <class Gen>
Matrix gen_input(const InputSpec& spec, long steps, Gen& rng);

/// Factor B with B B^T = Sigma (pivoted LDL^T). Throws kInvalidArgument
/// when Sigma is not positive semi-definite.
Matrix covariance_factor(const Matrix& sigma);

/// One layer of the discrete recursion: x(t) = F(x(t-1), I(t)).
Vector reservoir_map(const ReservoirConfig& cfg, const Vector& prev, const Vector& forcing);

/// Discrete-time reservoir driven by Z (n x T). The initial layer is
/// x0 * 1 when `x0` is given, zeros otherwise. Returns N x (T - washout).
Matrix run_discrete(const ReservoirConfig& cfg, const Matrix& z, long washout,
                    std::optional<double> x0 = std::nullopt);

/// Euler integration of x' = -x + f(x(s - tau), I(s)) with step d / M and
/// piecewise-constant forcing: neuron i of layer t owns the interval
/// (t tau - (N-i+1) d, t tau - (N-i) d]. Samples x(t tau - (N-i) d).
Matrix run_continuous(const ReservoirConfig& cfg, const Matrix& z, int oversample,
                      long washout, std::optional<double> x0 = std::nullopt);

/// Runs each reservoir on the shared input and stacks the states.
Matrix run_parallel(const ParallelConfig& pcfg, const Matrix& z, long washout,
                    const std::vector<std::optional<double>>& x0 = {});

// ---------------------------------------------------------------------------

template <class Gen>
Matrix gen_input(const InputSpec& spec, long steps, Gen& rng) {
  const Matrix b = covariance_factor(spec.covariance);
  const int n = spec.dim();
  Matrix white(n, steps);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long t = 0; t < steps; ++t)
    for (int i = 0; i < n; ++i) white(i, t) = normal(rng);
  return b * white;
}

}  // namespace tdr
