#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tdr/config.hpp"
#include "tdr/error.hpp"
#include "tdr/experiment.hpp"

using namespace tdr;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.sigma_z = Matrix::Constant(1, 1, 1e-3);
  c.eta = 1.6;
  c.gamma = 0.8;
  c.d = 0.4;
  c.neurons = 6;
  c.d_grid = {0.4};
  c.eta_grid = {1.6};
  c.gamma_grid = {0.8};
  c.lambda = 1e-6;
  c.t_train = 3000;
  c.t_test = 3000;
  c.pools = {1, 2};
  c.neuron_totals = {6};
  c.draws = 3;
  c.tasks = 4;
  c.eval_lags = 4;
  return c;
}

std::string csv(const Table& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

int column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  FAIL("missing column " << name);
  return -1;
}

double number(const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); }

}  // namespace

TEST_CASE("helpers") {
  SUBCASE("linspace") {
    const auto v = linspace(0.0, 1.0, 5);
    REQUIRE(v.size() == 5);
    CHECK(v[1] == 0.25);
    CHECK(v.back() == 1.0);
    CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});
    CHECK_THROWS_AS(linspace(0, 1, 0), Error);
  }
  SUBCASE("format_double round-trips") {
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 1000; ++i) {
      const double v = std::pow(10.0, u(rng)) * (i % 2 ? -1 : 1);
      CHECK(std::stod(format_double(v)) == v);
    }
  }
  SUBCASE("split_neurons") {
    CHECK(split_neurons(20, 3) == std::vector<int>{7, 7, 6});
    CHECK(split_neurons(5, 5) == std::vector<int>(5, 1));
    CHECK(split_neurons(100, 20) == std::vector<int>(20, 5));
  }
  SUBCASE("parallel_for covers every index once") {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(97, 3, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 2,
                                 [](int i) {
                                   if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }
  SUBCASE("param_key") {
    CHECK(param_key({0.1, 2.0, 0.3}) == param_key({0.1, 2.0, 0.3}));
    CHECK(param_key({0.1, 2.0, 0.3}) != param_key({0.3, 2.0, 0.1}));
    CHECK(param_key({0.1}) != param_key({0.1, 0.0}));
  }
  SUBCASE("masks") {
    ExperimentConfig c = small_config();
    const Matrix m0 = make_mask(c, 6, 0), m1 = make_mask(c, 6, 1);
    CHECK(m0 == make_mask(c, 6, 0));
    CHECK(m0 != m1);
    CHECK(m0.maxCoeff() <= 1.0);
    CHECK(m0.minCoeff() >= -1.0);
    c.mask = Matrix::Constant(6, 1, 0.25);
    CHECK(make_mask(c, 6, 3) == *c.mask);
  }
}

TEST_CASE("configuration files") {
  const std::string text = R"(# small run
kernel = ikeda
eta = 0.9
gamma = 0.5
phi = 0.2
sigma_z_vech = [0.0016, 0.0012, 0.0017]
neurons = 8
task = diag-quadratic
task_lags = 2
task_weights = [1, 0.5, 0.25]
lambda = 1e-7
d_linspace = [0.1, 0.5, 5]
eta_grid = [0.8, 0.9]
mc = false
seed = 42
)";
  const ExperimentConfig c = parse_experiment_config(text);
  CHECK(c.kernel == "ikeda");
  CHECK(c.phi == 0.2);
  CHECK(c.sigma_z.rows() == 2);
  CHECK(c.sigma_z(1, 0) == 0.0012);
  CHECK(c.neurons == 8);
  CHECK(task_lags(c.task) == 2);
  CHECK(c.lambda == 1e-7);
  CHECK(c.d_grid.size() == 5);
  CHECK(c.eta_grid == std::vector<double>{0.8, 0.9});
  CHECK_FALSE(c.mc);
  CHECK(c.seed == 42);

  CHECK_THROWS_AS(parse_experiment_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("eta = 1\neta = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("eta = \"high\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("d_grid = [0.1]\nd_linspace = [0, 1, 3]\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("lambda = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("kernel = lorenz\n"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config("sigma_z_vech = [1, 2, 1]\n"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("single point and surfaces") {
  ExperimentConfig c = small_config();
  SUBCASE("one grid point gives one row") {
    const Table t = cmd_surface(c);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][static_cast<std::size_t>(column(t, "flag"))] == "ok");
    CHECK(t.header.front() == "d");
    CHECK(t.failed == 0);
  }
  SUBCASE("capacity agrees with the model pipeline") {
    c.mc = false;
    const Table t = cmd_capacity(c);
    REQUIRE(t.rows.size() == 1);
    const auto& row = t.rows[0];
    const MomentProvider g = MomentProvider::gaussian(c.sigma_z);
    const ModelMoments m = pool_model(c, make_pool(c, {6}, c.d, c.eta, c.gamma), g);
    const double want = characteristic_error(m, c.task, g, c.lambda).nmse;
    CHECK(number(row[static_cast<std::size_t>(column(t, "nmse_model"))]) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("Monte Carlo tracks the model") {
    const PointResult r = evaluate_point(c, c.d, c.eta, c.gamma, 11);
    CHECK(r.flag == "ok");
    CHECK(r.nmse_discrete_mc == doctest::Approx(r.model.nmse).epsilon(0.15));
  }
  SUBCASE("byte-identical reruns, any worker count") {
    c.d_grid = {0.3, 0.6};
    c.eta_grid = {1.4, 1.8};
    const std::string a = csv(cmd_surface(c));
    CHECK(csv(cmd_surface(c)) == a);
    c.workers = 3;
    CHECK(csv(cmd_surface(c)) == a);
  }
  SUBCASE("adding grid points leaves existing rows unchanged") {
    c.d_grid = {0.3};
    const Table one = cmd_surface(c);
    c.d_grid = {0.2, 0.3};
    const Table two = cmd_surface(c);
    REQUIRE(two.rows.size() == 2);
    CHECK(two.rows[1] == one.rows[0]);
  }
  SUBCASE("no stable equilibrium is flagged, not fatal") {
    c.kernel = "ikeda";
    c.phi = 0.5;
    c.mc = false;
    const KernelSpec k = make_kernel(c, 4.0, 1.0);
    REQUIRE_FALSE(choose_equilibrium(find_equilibria(k, c.search), c.choice));
    const PointResult r = evaluate_point(c, 0.4, 4.0, 1.0, 1);
    CHECK(r.flag == "no_stable_equilibrium");
    CHECK(std::isnan(r.model.nmse));
    CHECK_FALSE(is_numeric_failure(r.flag));
  }
}

TEST_CASE("Monte Carlo NMSE") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Matrix x(3, 4000), y(1, 4000);
  for (int t = 0; t < 4000; ++t) {
    x.col(t) << nd(rng), nd(rng), nd(rng);
    y(0, t) = 2 * x(0, t) - x(2, t) + 0.5;
  }
  CHECK(mc_nmse(x, y, 2000, 0.0) < 1e-20);
  Matrix noise(1, 4000);
  for (int t = 0; t < 4000; ++t) noise(0, t) = nd(rng);
  CHECK(mc_nmse(x, noise, 2000, 0.0) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("grid optimization") {
  ExperimentConfig c = small_config();
  c.d_grid = {0.5, 0.2};
  c.eta_grid = {1.5, 1.2};
  SUBCASE("ties go to the smallest parameters") {
    c.gamma_grid = {0.0};
    const OptimizeResult r = optimize_grid(c, {6});
    REQUIRE(r.feasible);
    CHECK(r.capacity == 0.0);
    CHECK(r.d == 0.2);
    CHECK(r.eta == 1.2);
    CHECK(r.evaluated == 4);
    CHECK(r.infeasible == 0);
  }
  SUBCASE("one point") {
    c.d_grid = {0.3};
    c.eta_grid = {1.7};
    c.gamma_grid = {0.6};
    const OptimizeResult r = optimize_grid(c, {3, 3});
    CHECK(r.d == 0.3);
    CHECK(r.eta == 1.7);
    CHECK(r.gamma == 0.6);
  }
  SUBCASE("exhaustive maximum") {
    c.gamma_grid = {0.3, 1.1, -0.7};
    const MomentProvider g = MomentProvider::gaussian(c.sigma_z);
    double best = -1.0;
    for (double d : c.d_grid)
      for (double e : c.eta_grid)
        for (double gm : c.gamma_grid) {
          const ModelMoments m = pool_model(c, make_pool(c, {3, 3}, d, e, gm), g);
          best = std::max(best, characteristic_error(m, c.task, g, c.lambda).capacity);
        }
    const OptimizeResult r = optimize_grid(c, {3, 3});
    CHECK(r.capacity == best);
  }
  SUBCASE("optimize command covers pools and totals") {
    c.gamma_grid = {0.8};
    const Table t = cmd_optimize(c);
    CHECK(t.rows.size() == 2);
    for (const auto& row : t.rows) CHECK(row.back() == "ok");
  }
}

TEST_CASE("robustness studies") {
  ExperimentConfig c = small_config();
  SUBCASE("random parameter draws") {
    const Table t = cmd_robust_params(c);
    REQUIRE(t.rows.size() == 6);
    const int members = column(t, "members");
    for (const auto& row : t.rows) {
      const auto& m = row[static_cast<std::size_t>(members)];
      const auto parts = static_cast<int>(std::count(m.begin(), m.end(), ';')) + 1;
      CHECK(parts == std::stoi(row[0]));
    }
    CHECK(csv(cmd_robust_params(c)) == csv(t));
  }
  SUBCASE("random tasks at fixed parameters") {
    c.fixed_params = std::vector<double>{0.4, 1.6, 0.8};
    const Table t = cmd_robust_task(c);
    REQUIRE(t.rows.size() == 8);
    const int col = column(t, "nmse_model");
    for (const auto& row : t.rows) {
      const double v = number(row[static_cast<std::size_t>(col)]);
      CHECK(v >= -1e-10);
      CHECK(v <= 1.0 + 1e-10);
      CHECK(row.back() == "ok");
    }
  }
  SUBCASE("a zero task is degenerate") {
    c.fixed_params = std::vector<double>{0.4, 1.6, 0.8};
    c.task_weight_lo = c.task_weight_hi = 0.0;
    const Table t = cmd_robust_task(c);
    for (const auto& row : t.rows) CHECK(row.back() == "degenerate");
    CHECK(t.failed == 0);
  }
  SUBCASE("diagonal evaluator reproduces the training task") {
    const MomentProvider g = MomentProvider::gaussian(c.sigma_z);
    const ModelMoments m = pool_model(c, make_pool(c, {3, 3}, 0.4, 1.6, 0.8), g);
    const DiagonalTaskEvaluator eval(m, g, c.eval_lags, c.lambda);
    REQUIRE(eval.slots() == 5);
    Vector w = Vector::Zero(5);
    w.head(4).setOnes();
    const double want = characteristic_error(m, c.task, g, c.lambda).nmse;
    CHECK(eval.nmse(w) == doctest::Approx(want).epsilon(1e-9));
    const Vector w2 = (Vector(5) << 0.3, -2, 0, 1.5, 4).finished();
    const double want2 =
        characteristic_error(m, diag_quadratic_task(4, 1, {0.3, -2, 0, 1.5, 4}), g, c.lambda).nmse;
    CHECK(eval.nmse(w2) == doctest::Approx(want2).epsilon(1e-9));
    CHECK(std::isnan(eval.nmse(Vector::Zero(5))));
  }
}
