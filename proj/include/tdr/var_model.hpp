#pragma once

// Approximating VAR(1) model of a (parallel) discrete-time reservoir:
// partial linearization of the state feedback at a stable equilibrium and
// an order-R Taylor expansion in the input forcing.

#include <vector>

#include "tdr/moments.hpp"
#include "tdr/reservoir.hpp"

namespace tdr {

/// Jacobian of the reservoir map at the equilibrium layer x0 * 1.
Matrix connectivity_matrix(const ReservoirConfig& cfg, double x0);

/// Innovation polynomial V_R of neuron r (1-based) in the input variables.
/// The innovation itself is (1 - e^{-xi}) V_R.
Polynomial vr_polynomial(const ReservoirConfig& cfg, double x0, int r, int order);

/// All N innovation polynomials of one reservoir, prefactor included:
/// element r-1 is eps_r = (1 - e^{-xi}) V_R(r).
std::vector<Polynomial> innovation_polynomials(const ReservoirConfig& cfg, double x0,
                                               int order);

/// Evaluates the innovations directly from the forcing I = C z, without the
/// polynomial expansion. Used for sampling innovations.
Vector innovation_sample(const ReservoirConfig& cfg, const std::vector<double>& input_derivs,
                         const Vector& z);

struct InnovationMoments {
  Vector mean;       // mu_eps
  Matrix covariance; // Sigma_eps
};

InnovationMoments eps_moments(const ParallelConfig& pcfg, const std::vector<double>& x0,
                              int order, const MomentProvider& provider);

struct ModelOptions {
  int taylor_order = 3;
  /// Psi_j = A^j is kept until ||A^j||_F < psi_rel_tol * ||Gamma(0)||_F,
  /// and never beyond psi_max_terms matrices.
  double psi_rel_tol = 1e-12;
  int psi_max_terms = 10000;
};

struct ModelMoments {
  Matrix connectivity;            // A, block diagonal over the pool
  Vector mu_eps;
  Matrix sigma_eps;
  Vector mu_x;
  Matrix gamma0;
  std::vector<Matrix> psi;        // Psi_0 = I, Psi_j = A^j
  int taylor_order = 0;
  std::vector<double> equilibria; // one per reservoir
  /// Innovation polynomials of every stacked neuron (prefactor included).
  std::vector<Polynomial> innovations;

  int dim() const { return static_cast<int>(connectivity.rows()); }
  /// Gamma(k) = A^k Gamma(0) for k >= 0.
  Matrix autocovariance(int k) const;
  /// Psi_j, or zero past the truncation horizon.
  Matrix psi_at(int j) const;
};

/// Builds the model. Every equilibrium must satisfy |f_x(x0)| < 1; an
/// unstable one throws kInstability with the reservoir index.
ModelMoments model_moments(const ParallelConfig& pcfg, const std::vector<double>& x0,
                           const MomentProvider& provider, const ModelOptions& opts = {});

/// Single-reservoir convenience overload.
ModelMoments model_moments(const ReservoirConfig& cfg, double x0,
                           const MomentProvider& provider, const ModelOptions& opts = {});

}  // namespace tdr
