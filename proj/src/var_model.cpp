#include "tdr/var_model.hpp"

#include <string>

#include "tdr/error.hpp"

namespace tdr {

namespace {

// (c . z)^i / i! expanded into monomials: sum over |k| = i of
// prod_s c_s^k_s / k_s! z^k.
Polynomial scaled_linear_power(const Eigen::RowVectorXd& c, int i) {
  const int n = static_cast<int>(c.size());
  Polynomial out(n);
  Exponents k(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int pos, int left, double coef) -> void {
    if (pos == n - 1) {
      k[pos] = left;
      double f = 1.0;
      for (int m = 2; m <= left; ++m) f *= m;
      out.add_term(k, coef * std::pow(c(pos), left) / f);
      k[pos] = 0;
      return;
    }
    double f = 1.0;
    double cp = 1.0;
    for (int e = 0; e <= left; ++e) {
      if (e > 0) {
        f *= e;
        cp *= c(pos);
      }
      k[pos] = e;
      self(self, pos + 1, left - e, coef * cp / f);
    }
    k[pos] = 0;
  };
  rec(rec, 0, i, 1.0);
  return out;
}

// S_r^{(i)} = sum_{j<=r} e^{-(r-j) xi} (C_j . z)^i / i!, combined over i with
// the input derivatives; returns V_R for r = 1..N.
std::vector<Polynomial> all_vr(const ReservoirConfig& cfg, double x0, int order) {
  cfg.validate();
  require(order >= 0, "taylor order must be >= 0");
  const int n = cfg.input_dim();
  const auto derivs = input_derivatives(cfg.kernel, x0, order);
  const double a = cfg.decay();
  std::vector<Polynomial> out;
  out.reserve(static_cast<std::size_t>(cfg.neurons));
  Polynomial running(n);
  for (int r = 0; r < cfg.neurons; ++r) {
    Polynomial local(n);
    for (int i = 1; i <= order; ++i) {
      if (derivs[i - 1] == 0.0) continue;
      local += derivs[i - 1] * scaled_linear_power(cfg.mask.row(r), i);
    }
    running = a * running + local;
    out.push_back(running);
  }
  return out;
}

}  // namespace

Matrix connectivity_matrix(const ReservoirConfig& cfg, double x0) {
  cfg.validate();
  const int n = cfg.neurons;
  const double a = cfg.decay();
  const double phi = (1.0 - a) * state_derivative(cfg.kernel, x0);
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double w = phi;
    for (int j = i; j >= 0; --j) {
      m(i, j) = w;
      w *= a;
    }
    m(i, n - 1) += std::pow(a, i + 1);
  }
  return m;
}

Polynomial vr_polynomial(const ReservoirConfig& cfg, double x0, int r, int order) {
  require(r >= 1 && r <= cfg.neurons, "vr_polynomial: neuron index out of range");
  if (order == 0) return Polynomial(cfg.input_dim());
  return all_vr(cfg, x0, order)[static_cast<std::size_t>(r - 1)];
}

std::vector<Polynomial> innovation_polynomials(const ReservoirConfig& cfg, double x0,
                                               int order) {
  auto v = all_vr(cfg, x0, order);
  const double pre = 1.0 - cfg.decay();
  for (auto& p : v) p *= pre;
  return v;
}

Vector innovation_sample(const ReservoirConfig& cfg, const std::vector<double>& input_derivs,
                         const Vector& z) {
  const Vector forcing = cfg.mask * z;
  const double a = cfg.decay();
  Vector eps(cfg.neurons);
  double running = 0.0;
  for (int r = 0; r < cfg.neurons; ++r) {
    double local = 0.0;
    double pw = 1.0;
    double fact = 1.0;
    for (std::size_t i = 1; i <= input_derivs.size(); ++i) {
      pw *= forcing(r);
      fact *= static_cast<double>(i);
      local += input_derivs[i - 1] * pw / fact;
    }
    running = a * running + local;
    eps(r) = (1.0 - a) * running;
  }
  return eps;
}

namespace {

std::vector<Polynomial> stacked_innovations(const ParallelConfig& pcfg,
                                            const std::vector<double>& x0, int order) {
  pcfg.validate();
  require(x0.size() == pcfg.reservoirs.size(), "one equilibrium per reservoir required");
  std::vector<Polynomial> all;
  all.reserve(static_cast<std::size_t>(pcfg.total_neurons()));
  for (std::size_t j = 0; j < pcfg.reservoirs.size(); ++j) {
    auto polys = innovation_polynomials(pcfg.reservoirs[j], x0[j], order);
    for (auto& p : polys) all.push_back(std::move(p));
  }
  return all;
}

InnovationMoments moments_of(const std::vector<Polynomial>& eps, const MomentProvider& provider) {
  const auto dim = static_cast<Eigen::Index>(eps.size());
  InnovationMoments out{Vector(dim), Matrix(dim, dim)};
  for (Eigen::Index r = 0; r < dim; ++r) out.mean(r) = poly_expectation(eps[r], provider);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index s = 0; s <= r; ++s) {
      const double c = product_expectation(eps[r], eps[s], provider) - out.mean(r) * out.mean(s);
      out.covariance(r, s) = c;
      out.covariance(s, r) = c;
    }
  return out;
}

}  // namespace

InnovationMoments eps_moments(const ParallelConfig& pcfg, const std::vector<double>& x0,
                              int order, const MomentProvider& provider) {
  require(provider.dimension() == pcfg.input_dim(),
          "eps_moments: provider dimension differs from input dimension");
  provider.require_order(2 * order);
  return moments_of(stacked_innovations(pcfg, x0, order), provider);
}

Matrix ModelMoments::autocovariance(int k) const {
  require(k >= 0, "autocovariance: lag must be >= 0");
  Matrix g = gamma0;
  for (int i = 0; i < k; ++i) g = connectivity * g;
  return g;
}

Matrix ModelMoments::psi_at(int j) const {
  if (j >= 0 && static_cast<std::size_t>(j) < psi.size()) return psi[static_cast<std::size_t>(j)];
  return Matrix::Zero(dim(), dim());
}

ModelMoments model_moments(const ParallelConfig& pcfg, const std::vector<double>& x0,
                           const MomentProvider& provider, const ModelOptions& opts) {
  pcfg.validate();
  require(x0.size() == pcfg.reservoirs.size(), "one equilibrium per reservoir required");
  require(provider.dimension() == pcfg.input_dim(),
          "model_moments: provider dimension differs from input dimension");
  provider.require_order(2 * opts.taylor_order);

  const int total = pcfg.total_neurons();
  ModelMoments m;
  m.taylor_order = opts.taylor_order;
  m.equilibria = x0;
  m.connectivity = Matrix::Zero(total, total);
  Vector affine(total);  // F(x0, 0) - A x0, per block

  for (std::size_t j = 0; j < pcfg.reservoirs.size(); ++j) {
    const auto& cfg = pcfg.reservoirs[j];
    const double slope = state_derivative(cfg.kernel, x0[j]);
    if (!(std::abs(slope) < 1.0))
      fail(ErrorCode::kInstability,
           "reservoir " + std::to_string(j) + ": |f_x(x0)| = " + std::to_string(std::abs(slope)) +
               " >= 1",
           static_cast<long>(j));
    const Vector layer = Vector::Constant(cfg.neurons, x0[j]);
    const Vector image = reservoir_map(cfg, layer, Vector::Zero(cfg.neurons));
    require((image - layer).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, std::abs(x0[j])),
            "reservoir " + std::to_string(j) + ": x0 is not a fixed point of the reservoir map");
    const Matrix a = connectivity_matrix(cfg, x0[j]);
    const double rho = spectral_radius(a);
    if (!(rho < 1.0))
      fail(ErrorCode::kInstability,
           "reservoir " + std::to_string(j) + ": spectral radius " + std::to_string(rho) + " >= 1",
           static_cast<long>(j));
    const int off = pcfg.offset(j);
    m.connectivity.block(off, off, cfg.neurons, cfg.neurons) = a;
    affine.segment(off, cfg.neurons) = image - a * layer;
  }

  m.innovations = stacked_innovations(pcfg, x0, opts.taylor_order);
  const auto eps = moments_of(m.innovations, provider);
  m.mu_eps = eps.mean;
  m.sigma_eps = eps.covariance;

  const Matrix id = Matrix::Identity(total, total);
  m.mu_x = (id - m.connectivity).partialPivLu().solve(affine + m.mu_eps);
  m.gamma0 = stein_solve(m.connectivity, m.sigma_eps);

  const double gnorm = m.gamma0.norm();
  const double thresh = opts.psi_rel_tol * (gnorm > 0.0 ? gnorm : 1.0);
  Matrix p = id;
  for (int j = 0; j < opts.psi_max_terms; ++j) {
    if (j > 0 && p.norm() < thresh) break;
    m.psi.push_back(p);
    p = m.connectivity * p;
  }
  return m;
}

ModelMoments model_moments(const ReservoirConfig& cfg, double x0,
                           const MomentProvider& provider, const ModelOptions& opts) {
  ParallelConfig pcfg{{cfg}};
  return model_moments(pcfg, {x0}, provider, opts);
}

}  // namespace tdr
