#include "tdr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "tdr/error.hpp"
#include "tdr/rng.hpp"

namespace tdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_id(Stream s, std::uint64_t sub = 0) {
  return (static_cast<std::uint64_t>(s) << 48) ^ sub;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::string fmt(double v) { return format_double(v); }

MomentProvider input_provider(const ExperimentConfig& cfg) {
  return MomentProvider::gaussian(cfg.sigma_z, 2 * cfg.taylor_order + 2);
}

ModelOptions model_options(const ExperimentConfig& cfg, int lags) {
  ModelOptions o;
  o.taylor_order = cfg.taylor_order;
  o.psi_max_terms = lags + 1;
  return o;
}

const char* flag_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInstability:
      return flag::kRejected;
    case ErrorCode::kDivergence:
      return flag::kDiverged;
    default:
      return flag::kNumeric;
  }
}

// Runs the pool in continuous time, member by member, and stacks the states.
Matrix run_parallel_continuous(const ParallelConfig& pool, const Matrix& z, int oversample,
                               long washout, const std::vector<double>& x0) {
  Matrix out(pool.total_neurons(), z.cols() - washout);
  for (std::size_t j = 0; j < pool.reservoirs.size(); ++j) {
    const auto& r = pool.reservoirs[j];
    out.middleRows(pool.offset(j), r.neurons) =
        run_continuous(r, z, oversample, washout, x0[j]);
  }
  return out;
}

std::vector<std::optional<double>> as_optional(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

std::string join_members(const ParallelConfig& pool) {
  std::ostringstream os;
  for (std::size_t j = 0; j < pool.reservoirs.size(); ++j) {
    const auto& r = pool.reservoirs[j];
    const auto& mg = std::get<MackeyGlass>(r.kernel);
    if (j) os << ';';
    os << fmt(r.separation) << '/' << fmt(mg.eta) << '/' << fmt(mg.gamma);
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  require(sigma_z.rows() >= 1 && sigma_z.rows() == sigma_z.cols(),
          "config: sigma_z must be a non-empty square matrix");
  require(kernel == "mackey-glass" || kernel == "ikeda",
          "config: kernel must be mackey-glass or ikeda");
  require(neurons >= 1 && reservoirs >= 1, "config: neurons and reservoirs must be >= 1");
  require(d > 0.0, "config: d must be > 0");
  require(mask_lo <= mask_hi, "config: mask range is reversed");
  if (mask)
    require(mask->rows() == neurons && mask->cols() == sigma_z.rows(),
            "config: explicit mask must be neurons x input dimension");
  validate_task(task, static_cast<int>(sigma_z.rows()));
  require(lambda >= 0.0, "config: lambda must be >= 0");
  require(taylor_order >= 1 && taylor_order <= kMaxDerivativeOrder,
          "config: taylor order must be in 1..6");
  require(!d_grid.empty() && !eta_grid.empty() && !gamma_grid.empty(),
          "config: grids must be non-empty");
  for (double v : d_grid) require(v > 0.0, "config: d grid values must be > 0");
  require(oversample >= 1, "config: oversample must be >= 1");
  require(t_train >= 2 && t_test >= 2 && washout >= 0 && replicates >= 1,
          "config: bad Monte Carlo sizes");
  require(washout >= task_lags(task), "config: washout must cover the task lags");
  require(!pools.empty() && !neuron_totals.empty(), "config: pools and totals non-empty");
  for (int p : pools) require(p >= 1, "config: pool sizes must be >= 1");
  for (int t : neuron_totals) require(t >= 1, "config: neuron totals must be >= 1");
  require(draws >= 0 && tasks >= 0 && eval_lags >= 0, "config: negative counts");
  require(draw_d_lo >= 0.0 && draw_d_lo < draw_d_hi, "config: bad d draw range");
  require(draw_eta_lo <= draw_eta_hi && draw_gamma_lo <= draw_gamma_hi,
          "config: bad draw ranges");
  require(task_weight_lo <= task_weight_hi, "config: bad task weight range");
  if (fixed_params)
    require(fixed_params->size() == 3 && (*fixed_params)[0] > 0.0,
            "config: fixed_params must be [d, eta, gamma] with d > 0");
  require(workers >= 1, "config: workers must be >= 1");
}

KernelSpec make_kernel(const ExperimentConfig& cfg, double eta, double gamma) {
  if (cfg.kernel == "ikeda") return Ikeda{eta, gamma, cfg.phi};
  return MackeyGlass{eta, gamma, cfg.p};
}

Matrix make_mask(const ExperimentConfig& cfg, int neurons, int member) {
  if (cfg.mask) return *cfg.mask;
  auto rng = split_rng(cfg.seed, stream_id(Stream::kMask), static_cast<std::uint64_t>(member));
  std::uniform_real_distribution<double> u(cfg.mask_lo, cfg.mask_hi);
  const auto n = cfg.sigma_z.rows();
  Matrix m(neurons, n);
  for (int i = 0; i < neurons; ++i)
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = u(rng);
  return m;
}

bool is_numeric_failure(const std::string& f) {
  return f == flag::kNumeric || f == flag::kDiverged;
}

std::uint64_t param_key(const std::vector<double>& values) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (double v : values) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

std::vector<int> split_neurons(int total, int members) {
  require(members >= 1 && total >= members, "split_neurons: need total >= members >= 1");
  std::vector<int> s(static_cast<std::size_t>(members), total / members);
  for (int j = 0; j < total % members; ++j) ++s[static_cast<std::size_t>(j)];
  return s;
}

ParallelConfig make_pool(const ExperimentConfig& cfg, const std::vector<int>& sizes, double d,
                         double eta, double gamma) {
  ParallelConfig pool;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    ReservoirConfig r;
    r.neurons = sizes[j];
    r.separation = d;
    r.kernel = make_kernel(cfg, eta, gamma);
    r.mask = make_mask(cfg, sizes[j], static_cast<int>(j));
    pool.reservoirs.push_back(std::move(r));
  }
  return pool;
}

ModelMoments pool_model(const ExperimentConfig& cfg, const ParallelConfig& pool,
                        const MomentProvider& provider) {
  std::vector<double> x0;
  for (std::size_t j = 0; j < pool.reservoirs.size(); ++j) {
    const auto eq =
        choose_equilibrium(find_equilibria(pool.reservoirs[j].kernel, cfg.search), cfg.choice);
    if (!eq) fail(ErrorCode::kInstability, "no stable equilibrium", static_cast<long>(j));
    x0.push_back(eq->x0);
  }
  const int lags = std::max(task_lags(cfg.task), cfg.eval_lags);
  return model_moments(pool, x0, provider, model_options(cfg, lags));
}

double mc_nmse(const Matrix& states, const Matrix& targets, long t_train, double lambda) {
  require(states.cols() == targets.cols() && t_train >= 2 && states.cols() - t_train >= 2,
          "mc_nmse: bad sample split");
  const long t_test = states.cols() - t_train;
  const Readout r = ridge_fit_samples({states.leftCols(t_train), targets.leftCols(t_train)},
                                      lambda);
  const Matrix yt = targets.rightCols(t_test);
  const double mse = mean_squared_error(predict(r, states.rightCols(t_test)), yt);
  const Matrix c = yt.colwise() - yt.rowwise().mean();
  const double var = c.squaredNorm() / static_cast<double>(t_test);
  return var > 0.0 ? mse / var : kNaN;
}

PointResult evaluate_point(const ExperimentConfig& cfg, double d, double eta, double gamma,
                           std::uint64_t stream_key) {
  PointResult out;
  out.nmse_discrete_mc = kNaN;
  out.nmse_continuous_mc = kNaN;
  const KernelSpec kernel = make_kernel(cfg, eta, gamma);
  const auto eq = choose_equilibrium(find_equilibria(kernel, cfg.search), cfg.choice);
  if (!eq) {
    out.x0 = kNaN;
    out.model.mse_char = out.model.capacity = out.model.nmse = kNaN;
    out.model.trace_cov_yy = out.model.mse_char_expanded = kNaN;
    out.flag = flag::kNoStable;
    return out;
  }
  out.x0 = eq->x0;
  const std::vector<int> sizes(static_cast<std::size_t>(cfg.reservoirs), cfg.neurons);
  const ParallelConfig pool = make_pool(cfg, sizes, d, eta, gamma);
  const std::vector<double> x0(sizes.size(), eq->x0);

  try {
    const MomentProvider provider = input_provider(cfg);
    const ModelMoments model =
        model_moments(pool, x0, provider, model_options(cfg, task_lags(cfg.task)));
    out.model = characteristic_error(model, cfg.task, provider, cfg.lambda);
    if (!(out.model.trace_cov_yy > 0.0)) out.flag = flag::kDegenerate;
  } catch (const Error& e) {
    out.model.mse_char = out.model.capacity = out.model.nmse = kNaN;
    out.flag = flag_for(e);
    return out;
  }
  if (!cfg.mc) return out;

  const InputSpec spec{cfg.sigma_z};
  const long steps = cfg.washout + cfg.t_train + cfg.t_test;
  double sum_d = 0.0, sum_c = 0.0;
  try {
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      auto rng = split_rng(cfg.seed, stream_id(Stream::kInput, static_cast<std::uint64_t>(rep)),
                           stream_key);
      const Matrix z = gen_input(spec, steps, rng);
      const Matrix y = target_series(cfg.task, z, cfg.washout);
      sum_d += mc_nmse(run_parallel(pool, z, cfg.washout, as_optional(x0)), y, cfg.t_train,
                       cfg.lambda);
      if (cfg.continuous)
        sum_c += mc_nmse(run_parallel_continuous(pool, z, cfg.oversample, cfg.washout, x0), y,
                         cfg.t_train, cfg.lambda);
    }
  } catch (const Error& e) {
    out.flag = e.code() == ErrorCode::kDivergence ? flag::kDiverged : flag::kNumeric;
    return out;
  }
  out.nmse_discrete_mc = sum_d / cfg.replicates;
  if (cfg.continuous) out.nmse_continuous_mc = sum_c / cfg.replicates;
  return out;
}

// ---------------------------------------------------------------------------

void parallel_for(int count, int workers, const std::function<void(int)>& body) {
  if (count <= 0) return;
  const int threads = std::max(1, std::min(workers, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kPointHeader{
    "d",     "eta",        "nmse_model", "nmse_discrete_mc", "nmse_continuous_mc",
    "kernel", "gamma",     "p",          "phi",              "neurons",
    "reservoirs", "lambda", "seed",      "x0",               "capacity",
    "flag"};

std::vector<std::string> point_row(const ExperimentConfig& cfg, double d, double eta,
                                   double gamma, const PointResult& r) {
  return {fmt(d),
          fmt(eta),
          fmt(r.model.nmse),
          fmt(r.nmse_discrete_mc),
          fmt(r.nmse_continuous_mc),
          cfg.kernel,
          fmt(gamma),
          fmt(cfg.p),
          fmt(cfg.phi),
          std::to_string(cfg.neurons),
          std::to_string(cfg.reservoirs),
          fmt(cfg.lambda),
          std::to_string(cfg.seed),
          fmt(r.x0),
          fmt(r.model.capacity),
          r.flag};
}

struct PoolConfig {
  int pool;
  int total;
};

std::vector<PoolConfig> pool_configs(const ExperimentConfig& cfg) {
  std::vector<PoolConfig> out;
  for (int p : cfg.pools)
    for (int t : cfg.neuron_totals)
      if (t >= p) out.push_back({p, t});
  return out;
}

void count_failures(Table& t, const std::string& f) {
  ++t.points;
  if (is_numeric_failure(f)) ++t.failed;
}

}  // namespace

Table cmd_surface(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& ds = cfg.d_grid;
  const auto& es = cfg.eta_grid;
  const int count = static_cast<int>(ds.size() * es.size());
  std::vector<PointResult> res(static_cast<std::size_t>(count));
  parallel_for(count, cfg.workers, [&](int i) {
    const double d = ds[static_cast<std::size_t>(i) / es.size()];
    const double eta = es[static_cast<std::size_t>(i) % es.size()];
    res[static_cast<std::size_t>(i)] =
        evaluate_point(cfg, d, eta, cfg.gamma, param_key({d, eta, cfg.gamma}));
  });
  Table t;
  t.header = kPointHeader;
  for (int i = 0; i < count; ++i) {
    const double d = ds[static_cast<std::size_t>(i) / es.size()];
    const double eta = es[static_cast<std::size_t>(i) % es.size()];
    t.rows.push_back(point_row(cfg, d, eta, cfg.gamma, res[static_cast<std::size_t>(i)]));
    count_failures(t, res[static_cast<std::size_t>(i)].flag);
  }
  return t;
}

Table cmd_capacity(const ExperimentConfig& cfg) {
  cfg.validate();
  const PointResult r =
      evaluate_point(cfg, cfg.d, cfg.eta, cfg.gamma, param_key({cfg.d, cfg.eta, cfg.gamma}));
  Table t;
  t.header = kPointHeader;
  t.rows.push_back(point_row(cfg, cfg.d, cfg.eta, cfg.gamma, r));
  count_failures(t, r.flag);
  return t;
}

Table cmd_robust_params(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.kernel == "mackey-glass", "robust-params: only the mackey-glass kernel is drawn");
  const auto configs = pool_configs(cfg);
  const int draws = cfg.draws;
  const int count = static_cast<int>(configs.size()) * draws;

  struct Row {
    double nmse = kNaN, capacity = kNaN;
    std::string members;
    std::string flag = flag::kOk;
  };
  std::vector<Row> rows(static_cast<std::size_t>(count));
  const MomentProvider provider = input_provider(cfg);
  const auto n = cfg.sigma_z.rows();

  parallel_for(count, cfg.workers, [&](int i) {
    const PoolConfig pc = configs[static_cast<std::size_t>(i / draws)];
    const int k = i % draws;
    auto rng = split_rng(cfg.seed,
                         stream_id(Stream::kDraw, (static_cast<std::uint64_t>(pc.pool) << 24) |
                                                      static_cast<std::uint64_t>(pc.total)),
                         static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> ueta(cfg.draw_eta_lo, cfg.draw_eta_hi);
    std::uniform_real_distribution<double> ugam(cfg.draw_gamma_lo, cfg.draw_gamma_hi);
    std::uniform_real_distribution<double> ud(cfg.draw_d_lo, cfg.draw_d_hi);
    std::uniform_real_distribution<double> umask(cfg.mask_lo, cfg.mask_hi);

    ParallelConfig pool;
    for (int size : split_neurons(pc.total, pc.pool)) {
      ReservoirConfig r;
      r.neurons = size;
      double d = 0.0;
      while (d <= 0.0) d = ud(rng);  // open at zero
      r.separation = d;
      const double eta = ueta(rng);
      const double gamma = ugam(rng);
      r.kernel = MackeyGlass{eta, gamma, cfg.p};
      r.mask.resize(size, n);
      for (int a = 0; a < size; ++a)
        for (Eigen::Index b = 0; b < n; ++b) r.mask(a, b) = umask(rng);
      pool.reservoirs.push_back(std::move(r));
    }
    Row& row = rows[static_cast<std::size_t>(i)];
    row.members = join_members(pool);
    try {
      const ModelMoments model = pool_model(cfg, pool, provider);
      const CapacityReport rep = characteristic_error(model, cfg.task, provider, cfg.lambda);
      row.nmse = rep.nmse;
      row.capacity = rep.capacity;
      if (!(rep.trace_cov_yy > 0.0)) row.flag = flag::kDegenerate;
    } catch (const Error& e) {
      row.flag = flag_for(e);
    }
  });

  Table t;
  t.header = {"pool_size", "neurons", "draw_index", "nmse_model", "capacity", "lambda",
              "seed",      "members", "flag"};
  for (int i = 0; i < count; ++i) {
    const PoolConfig pc = configs[static_cast<std::size_t>(i / draws)];
    const Row& r = rows[static_cast<std::size_t>(i)];
    t.rows.push_back({std::to_string(pc.pool), std::to_string(pc.total),
                      std::to_string(i % draws), fmt(r.nmse), fmt(r.capacity), fmt(cfg.lambda),
                      std::to_string(cfg.seed), r.members, r.flag});
    count_failures(t, r.flag);
  }
  return t;
}

OptimizeResult optimize_grid(const ExperimentConfig& cfg, const std::vector<int>& sizes) {
  const auto ds = sorted(cfg.d_grid);
  const auto es = sorted(cfg.eta_grid);
  const auto gs = sorted(cfg.gamma_grid);
  const std::size_t ne = es.size(), ng = gs.size();
  const int count = static_cast<int>(ds.size() * ne * ng);
  const MomentProvider provider = input_provider(cfg);
  std::vector<double> cap(static_cast<std::size_t>(count), kNaN);

  parallel_for(count, cfg.workers, [&](int i) {
    const auto u = static_cast<std::size_t>(i);
    const ParallelConfig pool = make_pool(cfg, sizes, ds[u / (ne * ng)], es[(u / ng) % ne],
                                          gs[u % ng]);
    try {
      const ModelMoments model = pool_model(cfg, pool, provider);
      cap[u] = characteristic_error(model, cfg.task, provider, cfg.lambda).capacity;
    } catch (const Error&) {
      // Infeasible point: stays NaN.
    }
  });

  OptimizeResult best;
  best.evaluated = count;
  for (int i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (std::isnan(cap[u])) {
      ++best.infeasible;
      continue;
    }
    // Strict improvement keeps the earliest point in (d, eta, gamma) order.
    if (!best.feasible || cap[u] > best.capacity) {
      best.feasible = true;
      best.capacity = cap[u];
      best.d = ds[u / (ne * ng)];
      best.eta = es[(u / ng) % ne];
      best.gamma = gs[u % ng];
    }
  }
  return best;
}

Table cmd_optimize(const ExperimentConfig& cfg) {
  cfg.validate();
  Table t;
  t.header = {"pool_size", "neurons", "d",    "eta",  "gamma", "capacity", "evaluated",
              "infeasible", "kernel", "lambda", "seed", "flag"};
  for (const PoolConfig& pc : pool_configs(cfg)) {
    const OptimizeResult r = optimize_grid(cfg, split_neurons(pc.total, pc.pool));
    const double nan = kNaN;
    t.rows.push_back({std::to_string(pc.pool), std::to_string(pc.total),
                      fmt(r.feasible ? r.d : nan), fmt(r.feasible ? r.eta : nan),
                      fmt(r.feasible ? r.gamma : nan), fmt(r.feasible ? r.capacity : nan),
                      std::to_string(r.evaluated), std::to_string(r.infeasible), cfg.kernel,
                      fmt(cfg.lambda), std::to_string(cfg.seed),
                      r.feasible ? flag::kOk : flag::kNoStable});
    ++t.points;
  }
  return t;
}

DiagonalTaskEvaluator::DiagonalTaskEvaluator(const ModelMoments& model,
                                             const MomentProvider& provider, int lags,
                                             double lambda) {
  const int n = provider.dimension();
  const int slots = (lags + 1) * n;
  // One output per slot: y_i = s_i^2.
  Matrix q = Matrix::Zero(slots, vech_size(slots));
  for (int i = 0; i < slots; ++i) q(i, sigma_index0(i, i, slots)) = 1.0;
  const TaskSpec basis = QuadraticTask{q, lags};
  const Matrix b = task_cross_covariance(basis, model, provider);
  cov_ = task_output_covariance(basis, provider).cov;
  const Readout r = ridge_solve(model.gamma0, b, Vector::Zero(model.dim()),
                                Vector::Zero(slots), lambda);
  Matrix g2 = model.gamma0;
  g2.diagonal().array() += 2.0 * lambda;
  explained_ = r.weights.transpose() * g2 * r.weights;
}

double DiagonalTaskEvaluator::nmse(const Vector& w) const {
  require(w.size() == cov_.rows(), "DiagonalTaskEvaluator: weight count mismatch");
  const double var = w.dot(cov_ * w);
  if (!(var > 0.0)) return kNaN;
  return (var - w.dot(explained_ * w)) / var;
}

Table cmd_robust_task(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto configs = pool_configs(cfg);
  const MomentProvider provider = input_provider(cfg);
  const int slots = (cfg.eval_lags + 1) * static_cast<int>(cfg.sigma_z.rows());

  // Paired design: task k is the same draw for every configuration.
  std::vector<Vector> weights;
  for (int k = 0; k < cfg.tasks; ++k) {
    auto rng = split_rng(cfg.seed, stream_id(Stream::kTaskDraw), static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> u(cfg.task_weight_lo, cfg.task_weight_hi);
    Vector w(slots);
    for (int i = 0; i < slots; ++i) w(i) = u(rng);
    weights.push_back(std::move(w));
  }

  Table t;
  t.header = {"pool_size", "neurons", "task_index", "nmse_model", "d",    "eta",
              "gamma",     "train_capacity", "lambda", "seed", "flag"};
  for (const PoolConfig& pc : configs) {
    const auto sizes = split_neurons(pc.total, pc.pool);
    OptimizeResult opt;
    if (cfg.fixed_params) {
      opt.feasible = true;
      opt.d = (*cfg.fixed_params)[0];
      opt.eta = (*cfg.fixed_params)[1];
      opt.gamma = (*cfg.fixed_params)[2];
      opt.capacity = kNaN;
    } else {
      opt = optimize_grid(cfg, sizes);
    }
    std::optional<DiagonalTaskEvaluator> eval;
    std::string config_flag = flag::kOk;
    if (!opt.feasible) {
      config_flag = flag::kNoStable;
    } else {
      try {
        const ModelMoments model =
            pool_model(cfg, make_pool(cfg, sizes, opt.d, opt.eta, opt.gamma), provider);
        if (!cfg.fixed_params)
          opt.capacity = characteristic_error(model, cfg.task, provider, cfg.lambda).capacity;
        eval.emplace(model, provider, cfg.eval_lags, cfg.lambda);
      } catch (const Error& e) {
        config_flag = flag_for(e);
      }
    }
    for (int k = 0; k < cfg.tasks; ++k) {
      double nmse = kNaN;
      std::string f = config_flag;
      if (eval) {
        nmse = eval->nmse(weights[static_cast<std::size_t>(k)]);
        if (std::isnan(nmse)) f = flag::kDegenerate;
      }
      const double nan = kNaN;
      t.rows.push_back({std::to_string(pc.pool), std::to_string(pc.total), std::to_string(k),
                        fmt(nmse), fmt(opt.feasible ? opt.d : nan),
                        fmt(opt.feasible ? opt.eta : nan), fmt(opt.feasible ? opt.gamma : nan),
                        fmt(opt.feasible ? opt.capacity : nan), fmt(cfg.lambda),
                        std::to_string(cfg.seed), f});
      count_failures(t, f);
    }
  }
  return t;
}

}  // namespace tdr
