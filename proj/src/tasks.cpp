#include "tdr/tasks.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "tdr/error.hpp"

namespace tdr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Slot i of z^h(t) is z_{i mod n}(t - i / n).
LaggedFactor slot_factor(int slot, int n) { return {slot % n, slot / n}; }

// The two lagged factors behind vech slot v of z^h z^h^T.
LaggedMonomial vech_slot_monomial(int v, int dim, int n) {
  auto [r, s] = sigma_inverse0(v, dim);
  return {slot_factor(r, n), slot_factor(s, n)};
}

void require_zero_mean(const MomentProvider& provider) {
  require(provider.zero_mean(), "task moments assume zero-mean inputs");
}

// Columns of Q with at least one nonzero entry.
std::vector<int> active_columns(const Matrix& q) {
  std::vector<int> cols;
  for (Eigen::Index v = 0; v < q.cols(); ++v)
    if (!q.col(v).isZero(0.0)) cols.push_back(static_cast<int>(v));
  return cols;
}

}  // namespace

int task_lags(const TaskSpec& task) {
  return std::visit([](const auto& t) { return t.lags; }, task);
}

int task_outputs(const TaskSpec& task) {
  return std::visit(overloaded{[](const LinearTask& t) { return static_cast<int>(t.weights.cols()); },
                               [](const QuadraticTask& t) { return static_cast<int>(t.weights.rows()); }},
                    task);
}

int task_degree(const TaskSpec& task) {
  return std::holds_alternative<LinearTask>(task) ? 1 : 2;
}

void validate_task(const TaskSpec& task, int input_dim) {
  require(input_dim >= 1, "task: input dimension must be >= 1");
  const int h = task_lags(task);
  require(h >= 0, "task: lag count must be >= 0");
  const int slots = (h + 1) * input_dim;
  std::visit(overloaded{[&](const LinearTask& t) {
                          require(t.weights.rows() == slots,
                                  "linear task: L must have (h+1)n = " + std::to_string(slots) +
                                      " rows");
                          require(t.weights.cols() >= 1, "linear task: q must be >= 1");
                        },
                        [&](const QuadraticTask& t) {
                          require(t.weights.cols() == vech_size(slots),
                                  "quadratic task: Q must have q* = " +
                                      std::to_string(vech_size(slots)) + " columns");
                          require(t.weights.rows() >= 1, "quadratic task: q must be >= 1");
                        }},
             task);
}

Matrix target_series(const TaskSpec& task, const Matrix& z, long washout) {
  const int n = static_cast<int>(z.rows());
  validate_task(task, n);
  const int h = task_lags(task);
  require(washout >= h, "target_series: washout must cover the task lags");
  require(z.cols() > h + washout, "target_series: need T > h + washout");
  const int slots = (h + 1) * n;
  const long len = z.cols() - washout;
  Matrix y(task_outputs(task), len);
  Vector zh(slots);
  for (long c = 0; c < len; ++c) {
    const long t = washout + c;
    for (int l = 0; l <= h; ++l) zh.segment(l * n, n) = z.col(t - l);
    std::visit(overloaded{[&](const LinearTask& lt) { y.col(c) = lt.weights.transpose() * zh; },
                          [&](const QuadraticTask& qt) {
                            Vector m(vech_size(slots));
                            int k = 0;
                            for (int j = 0; j < slots; ++j)
                              for (int i = j; i < slots; ++i) m(k++) = zh(i) * zh(j);
                            y.col(c) = qt.weights * m;
                          }},
               task);
  }
  return y;
}

TaskSpec diag_quadratic_task(int lags, int input_dim, const std::vector<double>& weights) {
  require(lags >= 0 && input_dim >= 1, "diag_quadratic_task: bad dimensions");
  require(static_cast<int>(weights.size()) == lags + 1,
          "diag_quadratic_task: need one weight per lag block");
  const int slots = (lags + 1) * input_dim;
  Matrix qstar = Matrix::Zero(slots, slots);
  for (int l = 0; l <= lags; ++l)
    qstar.block(l * input_dim, l * input_dim, input_dim, input_dim).setConstant(weights[l]);
  const Matrix q = vec_op(qstar).transpose() * duplication_matrix(slots);
  return QuadraticTask{q, lags};
}

TaskSpec diagonal_quadratic_task(int lags, int input_dim, const std::vector<double>& diag) {
  const int slots = (lags + 1) * input_dim;
  require(static_cast<int>(diag.size()) == slots,
          "diagonal_quadratic_task: need (h+1)n diagonal entries");
  Matrix qstar = Matrix::Zero(slots, slots);
  for (int i = 0; i < slots; ++i) qstar(i, i) = diag[i];
  return QuadraticTask{vec_op(qstar).transpose() * duplication_matrix(slots), lags};
}

double lagged_expectation(const LaggedMonomial& mono, const MomentProvider& provider) {
  const int n = provider.dimension();
  std::map<int, Exponents> by_lag;
  for (const auto& f : mono) {
    require(f.var >= 0 && f.var < n && f.lag >= 0, "lagged monomial: bad factor");
    auto [it, _] = by_lag.try_emplace(f.lag, Exponents(static_cast<std::size_t>(n), 0));
    it->second[f.var] += 1;
  }
  double e = 1.0;
  for (const auto& [lag, k] : by_lag) {
    e *= provider.moment(k);
    if (e == 0.0) break;
  }
  return e;
}

double eps_cross_moment(const Polynomial& innovation, int k, const LaggedMonomial& mono,
                        const MomentProvider& provider) {
  const int n = provider.dimension();
  Exponents at_k(static_cast<std::size_t>(n), 0);
  LaggedMonomial others;
  for (const auto& f : mono) {
    require(f.var >= 0 && f.var < n && f.lag >= 0, "lagged monomial: bad factor");
    if (f.lag == k)
      at_k[f.var] += 1;
    else
      others.push_back(f);
  }
  const double rest = lagged_expectation(others, provider);
  if (rest == 0.0) return 0.0;
  return rest * poly_expectation(innovation * Polynomial::monomial(n, at_k), provider);
}

double eps_cross_moment(const ReservoirConfig& cfg, double x0, int order, int u, int k,
                        const LaggedMonomial& mono, const MomentProvider& provider) {
  require(u >= 1 && u <= cfg.neurons, "eps_cross_moment: neuron index out of range");
  const auto eps = innovation_polynomials(cfg, x0, order);
  return eps_cross_moment(eps[static_cast<std::size_t>(u - 1)], k, mono, provider);
}

TaskCovariance task_output_covariance(const TaskSpec& task, const MomentProvider& provider) {
  const int n = provider.dimension();
  validate_task(task, n);
  require_zero_mean(provider);
  const int h = task_lags(task);
  TaskCovariance out;
  std::visit(
      overloaded{
          [&](const LinearTask& lt) {
            provider.require_order(2);
            const Matrix sz = provider.second_moments();
            Matrix szh = Matrix::Zero((h + 1) * n, (h + 1) * n);
            for (int l = 0; l <= h; ++l) szh.block(l * n, l * n, n, n) = sz;
            out.cov = lt.weights.transpose() * szh * lt.weights;
            out.mean = Vector::Zero(lt.weights.cols());
          },
          [&](const QuadraticTask& qt) {
            provider.require_order(4);
            const int slots = (h + 1) * n;
            const auto cols = active_columns(qt.weights);
            const auto na = static_cast<Eigen::Index>(cols.size());
            std::vector<LaggedMonomial> mono;
            Vector em(na);
            for (Eigen::Index a = 0; a < na; ++a) {
              mono.push_back(vech_slot_monomial(cols[a], slots, n));
              em(a) = lagged_expectation(mono.back(), provider);
            }
            Matrix c(na, na);
            for (Eigen::Index a = 0; a < na; ++a)
              for (Eigen::Index b = 0; b <= a; ++b) {
                LaggedMonomial four = mono[a];
                four.insert(four.end(), mono[b].begin(), mono[b].end());
                const double v = lagged_expectation(four, provider) - em(a) * em(b);
                c(a, b) = v;
                c(b, a) = v;
              }
            Matrix qa(qt.weights.rows(), na);
            for (Eigen::Index a = 0; a < na; ++a) qa.col(a) = qt.weights.col(cols[a]);
            out.cov = qa * c * qa.transpose();
            out.mean = qa * em;
          }},
      task);
  return out;
}

Matrix task_cross_covariance(const TaskSpec& task, const ModelMoments& model,
                             const MomentProvider& provider) {
  const int n = provider.dimension();
  validate_task(task, n);
  require_zero_mean(provider);
  const int h = task_lags(task);
  const int dim = model.dim();
  require(static_cast<int>(model.innovations.size()) == dim,
          "task_cross_covariance: model lacks innovation polynomials");
  const int degree = task_degree(task);
  provider.require_order(model.taylor_order + degree);

  Matrix cov = Matrix::Zero(dim, task_outputs(task));
  std::visit(
      overloaded{
          [&](const LinearTask& lt) {
            // M(u, v) = E[eps_u z_v]; the same at every lag by stationarity.
            Matrix mez(dim, n);
            for (int u = 0; u < dim; ++u)
              for (int v = 0; v < n; ++v)
                mez(u, v) = eps_cross_moment(model.innovations[u], 0, {{v, 0}}, provider);
            for (int s = 0; s <= h; ++s) {
              const Matrix block = lt.weights.middleRows(s * n, n);
              if (block.isZero(0.0) || static_cast<std::size_t>(s) >= model.psi.size()) continue;
              cov += model.psi[s] * mez * block;
            }
          },
          [&](const QuadraticTask& qt) {
            const int slots = (h + 1) * n;
            const auto cols = active_columns(qt.weights);
            const auto na = static_cast<Eigen::Index>(cols.size());
            Matrix qa(qt.weights.rows(), na);
            std::vector<LaggedMonomial> mono;
            Vector em(na);
            for (Eigen::Index a = 0; a < na; ++a) {
              qa.col(a) = qt.weights.col(cols[a]);
              mono.push_back(vech_slot_monomial(cols[a], slots, n));
              em(a) = lagged_expectation(mono.back(), provider);
            }
            for (int k = 0; k <= h; ++k) {
              if (static_cast<std::size_t>(k) >= model.psi.size()) break;
              // G(u, a) = E[eps_u(t-k) M_a] - mu_u E[M_a]; zero unless M_a
              // has a factor at lag k.
              Matrix g = Matrix::Zero(dim, na);
              bool any = false;
              for (Eigen::Index a = 0; a < na; ++a) {
                if (mono[a][0].lag != k && mono[a][1].lag != k) continue;
                any = true;
                for (int u = 0; u < dim; ++u)
                  g(u, a) = eps_cross_moment(model.innovations[u], k, mono[a], provider) -
                            model.mu_eps(u) * em(a);
              }
              if (any) cov += model.psi[k] * g * qa.transpose();
            }
          }},
      task);
  return cov;
}

}  // namespace tdr
