#include "tdr/config.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tdr/error.hpp"

namespace tdr {

namespace {

using json = nlohmann::json;

const std::set<std::string> kKeys{
    "kernel",       "eta",          "gamma",         "p",            "phi",
    "d",            "sigma_z",      "sigma_z_vech",  "sigma_z_var",  "sigma_z_repair",
    "neurons",      "reservoirs",   "mask",          "mask_range",   "task",
    "task_lags",    "task_weights", "lambda",        "taylor_order", "d_grid",
    "eta_grid",     "gamma_grid",   "d_linspace",    "eta_linspace", "gamma_linspace",
    "mc",           "continuous",   "oversample",    "T_train",      "T_test",
    "washout",      "replicates",   "pools",         "neuron_totals", "draws",
    "draw_eta",     "draw_gamma",   "draw_d",        "eval_lags",    "tasks",
    "task_weight_range", "fixed_params", "equilibrium", "equilibrium_range",
    "equilibrium_grid", "seed",     "workers"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Values {
 public:
  explicit Values(std::map<std::string, json> m) : m_(std::move(m)) {}

  bool has(const std::string& k) const { return m_.count(k) != 0; }

  double number(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_number()) bad(k, "a number");
    return v.get<double>();
  }
  long integer(const std::string& k) const {
    const json& v = at(k);
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()))
      return static_cast<long>(v.get<double>());
    bad(k, "an integer");
  }
  bool boolean(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_boolean()) bad(k, "true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_string()) bad(k, "a string");
    return v.get<std::string>();
  }
  bool is_string(const std::string& k) const { return at(k).is_string(); }
  std::vector<double> numbers(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array()) bad(k, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) bad(k, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<int> integers(const std::string& k) const {
    std::vector<int> out;
    for (double x : numbers(k)) {
      if (x != std::floor(x)) bad(k, "an array of integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }
  std::pair<double, double> range(const std::string& k) const {
    const auto v = numbers(k);
    if (v.size() != 2 || v[0] > v[1]) bad(k, "[lo, hi] with lo <= hi");
    return {v[0], v[1]};
  }
  Matrix matrix(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array() || v.empty()) bad(k, "a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array()) bad(k, "an array of rows");
      if (cols < 0) {
        cols = static_cast<Eigen::Index>(row.size());
        m.resize(rows, cols);
      }
      if (static_cast<Eigen::Index>(row.size()) != cols || cols == 0)
        bad(k, "rows of equal non-zero length");
      for (Eigen::Index j = 0; j < cols; ++j) {
        const json& e = row[static_cast<std::size_t>(j)];
        if (!e.is_number()) bad(k, "numeric entries");
        m(i, j) = e.get<double>();
      }
    }
    return m;
  }

 private:
  const json& at(const std::string& k) const { return m_.at(k); }
  [[noreturn]] static void bad(const std::string& k, const std::string& what) {
    throw ConfigError("config key '" + k + "' must be " + what);
  }
  std::map<std::string, json> m_;
};

Values parse_values(const std::string& text) {
  std::map<std::string, json> m;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!kKeys.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (m.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    json v = json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded()) v = value;
    m.emplace(key, std::move(v));
  }
  return Values(std::move(m));
}

Matrix clip_to_psd(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix read_sigma(const Values& v) {
  const int given = v.has("sigma_z") + v.has("sigma_z_vech") + v.has("sigma_z_var");
  if (given > 1) throw ConfigError("give only one of sigma_z, sigma_z_vech, sigma_z_var");
  Matrix s = Matrix::Constant(1, 1, 1e-4);
  if (v.has("sigma_z")) {
    s = v.matrix("sigma_z");
    if (s.rows() != s.cols() || !s.isApprox(s.transpose(), 1e-12))
      throw ConfigError("sigma_z must be a symmetric square matrix");
  } else if (v.has("sigma_z_vech")) {
    const auto e = v.numbers("sigma_z_vech");
    int n = 1;
    while (vech_size(n) < static_cast<int>(e.size())) ++n;
    if (vech_size(n) != static_cast<int>(e.size()))
      throw ConfigError("sigma_z_vech length is not n(n+1)/2");
    s = unvech(Eigen::Map<const Vector>(e.data(), static_cast<Eigen::Index>(e.size())), n);
  } else if (v.has("sigma_z_var")) {
    s = Matrix::Constant(1, 1, v.number("sigma_z_var"));
  }
  const std::string repair = v.has("sigma_z_repair") ? v.string("sigma_z_repair") : "none";
  if (repair == "clip") {
    s = clip_to_psd(s);
  } else if (repair != "none") {
    throw ConfigError("sigma_z_repair must be none or clip");
  } else {
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues();
    if (ev.minCoeff() < -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
      throw ConfigError("sigma_z is not positive semidefinite (smallest eigenvalue " +
                        format_double(ev.minCoeff()) + "); set sigma_z_repair = clip");
  }
  return s;
}

TaskSpec read_task(const Values& v, int n) {
  const std::string kind = v.has("task") ? v.string("task") : "diag-quadratic";
  const int lags = v.has("task_lags") ? static_cast<int>(v.integer("task_lags")) : 3;
  if (lags < 0) throw ConfigError("task_lags must be >= 0");
  const int slots = (lags + 1) * n;
  if (kind == "diag-quadratic") {
    const auto w = v.has("task_weights") ? v.numbers("task_weights")
                                         : std::vector<double>(lags + 1, 1.0);
    if (static_cast<int>(w.size()) != lags + 1)
      throw ConfigError("diag-quadratic task_weights needs task_lags + 1 entries");
    return diag_quadratic_task(lags, n, w);
  }
  if (kind == "diagonal-quadratic") {
    const auto w = v.has("task_weights") ? v.numbers("task_weights")
                                         : std::vector<double>(slots, 1.0);
    if (static_cast<int>(w.size()) != slots)
      throw ConfigError("diagonal-quadratic task_weights needs (task_lags + 1) n entries");
    return diagonal_quadratic_task(lags, n, w);
  }
  if (kind == "quadratic" || kind == "linear") {
    if (!v.has("task_weights")) throw ConfigError("task_weights is required for " + kind);
    const Matrix w = v.matrix("task_weights");
    if (kind == "quadratic") return QuadraticTask{w, lags};
    return LinearTask{w, lags};
  }
  throw ConfigError("task must be diag-quadratic, diagonal-quadratic, quadratic or linear");
}

std::vector<double> read_grid(const Values& v, const std::string& axis,
                              std::vector<double> fallback) {
  const std::string g = axis + "_grid", l = axis + "_linspace";
  if (v.has(g) && v.has(l)) throw ConfigError("give only one of " + g + " and " + l);
  if (v.has(g)) return v.numbers(g);
  if (v.has(l)) {
    const auto e = v.numbers(l);
    if (e.size() != 3 || e[2] < 1 || e[2] != std::floor(e[2]))
      throw ConfigError(l + " must be [lo, hi, count]");
    return linspace(e[0], e[1], static_cast<int>(e[2]));
  }
  return fallback;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int count) {
  require(count >= 1, "linspace: count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] =
        count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  return out;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  const Values v = parse_values(text);
  ExperimentConfig c;
  try {
    c.sigma_z = read_sigma(v);
    const int n = static_cast<int>(c.sigma_z.rows());

    if (v.has("kernel")) c.kernel = v.string("kernel");
    if (c.kernel == "ikeda") {
      c.eta = 1.0;
      c.gamma = 1.0;
    }
    if (v.has("eta")) c.eta = v.number("eta");
    if (v.has("gamma")) c.gamma = v.number("gamma");
    if (v.has("p")) c.p = v.number("p");
    if (v.has("phi")) c.phi = v.number("phi");
    if (v.has("d")) c.d = v.number("d");

    if (v.has("neurons")) c.neurons = static_cast<int>(v.integer("neurons"));
    if (v.has("reservoirs")) c.reservoirs = static_cast<int>(v.integer("reservoirs"));
    if (v.has("mask")) {
      if (v.is_string("mask")) {
        if (v.string("mask") != "uniform") throw ConfigError("mask must be uniform or a matrix");
      } else {
        c.mask = v.matrix("mask");
      }
    }
    if (v.has("mask_range")) std::tie(c.mask_lo, c.mask_hi) = v.range("mask_range");

    c.task = read_task(v, n);
    if (v.has("lambda")) c.lambda = v.number("lambda");
    if (v.has("taylor_order")) c.taylor_order = static_cast<int>(v.integer("taylor_order"));

    c.d_grid = read_grid(v, "d", {c.d});
    c.eta_grid = read_grid(v, "eta", {c.eta});
    c.gamma_grid = read_grid(v, "gamma", {c.gamma});

    if (v.has("mc")) c.mc = v.boolean("mc");
    if (v.has("continuous")) c.continuous = v.boolean("continuous");
    if (v.has("oversample")) c.oversample = static_cast<int>(v.integer("oversample"));
    if (v.has("T_train")) c.t_train = v.integer("T_train");
    if (v.has("T_test")) c.t_test = v.integer("T_test");
    if (v.has("washout")) c.washout = v.integer("washout");
    if (v.has("replicates")) c.replicates = static_cast<int>(v.integer("replicates"));

    if (v.has("pools")) c.pools = v.integers("pools");
    if (v.has("neuron_totals")) c.neuron_totals = v.integers("neuron_totals");
    if (v.has("draws")) c.draws = static_cast<int>(v.integer("draws"));
    if (v.has("draw_eta")) std::tie(c.draw_eta_lo, c.draw_eta_hi) = v.range("draw_eta");
    if (v.has("draw_gamma")) std::tie(c.draw_gamma_lo, c.draw_gamma_hi) = v.range("draw_gamma");
    if (v.has("draw_d")) std::tie(c.draw_d_lo, c.draw_d_hi) = v.range("draw_d");
    if (v.has("eval_lags")) c.eval_lags = static_cast<int>(v.integer("eval_lags"));
    if (v.has("tasks")) c.tasks = static_cast<int>(v.integer("tasks"));
    if (v.has("task_weight_range"))
      std::tie(c.task_weight_lo, c.task_weight_hi) = v.range("task_weight_range");
    if (v.has("fixed_params")) c.fixed_params = v.numbers("fixed_params");

    if (v.has("equilibrium")) {
      const std::string e = v.string("equilibrium");
      if (e == "largest-stable")
        c.choice = EquilibriumChoice::kLargestStable;
      else if (e == "smallest-stable")
        c.choice = EquilibriumChoice::kSmallestStable;
      else if (e == "closest-to-zero")
        c.choice = EquilibriumChoice::kClosestToZero;
      else
        throw ConfigError(
            "equilibrium must be largest-stable, smallest-stable or closest-to-zero");
    }
    if (v.has("equilibrium_range"))
      std::tie(c.search.lo, c.search.hi) = v.range("equilibrium_range");
    if (v.has("equilibrium_grid"))
      c.search.grid = static_cast<int>(v.integer("equilibrium_grid"));

    if (v.has("seed")) {
      const long s = v.integer("seed");
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    }
    if (v.has("workers")) c.workers = static_cast<int>(v.integer("workers"));
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

}  // namespace tdr
