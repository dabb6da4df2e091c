#include "tdr/kernels.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
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

bool is_integer(double p) { return p == std::round(p); }

double mg_power(double u, double p) {
  if (is_integer(p)) return std::pow(u, p);
  if (u < 0.0)
    fail(ErrorCode::kNumericDomain,
         "Mackey-Glass: negative argument with non-integer exponent");
  return std::pow(u, p);
}

double mg_value(const MackeyGlass& k, double u) {
  const double den = 1.0 + mg_power(u, k.p);
  if (den == 0.0 || !std::isfinite(den))
    fail(ErrorCode::kNumericDomain, "Mackey-Glass: pole at u=" + std::to_string(u));
  return k.eta * u / den;
}

using Series = std::array<double, kMaxDerivativeOrder + 1>;

// Taylor coefficients of g(u0 + h) = eta (u0 + h) / (1 + (u0 + h)^p) in h.
Series mg_series(const MackeyGlass& k, double u0) {
  Series pw{};
  if (is_integer(k.p) && k.p >= 0) {
    const int ip = static_cast<int>(k.p);
    double binom = 1.0;
    for (int j = 0; j <= kMaxDerivativeOrder && j <= ip; ++j) {
      pw[j] = binom * std::pow(u0, ip - j);
      binom = binom * (ip - j) / (j + 1);
    }
  } else {
    if (!(u0 > 0.0))
      fail(ErrorCode::kNumericDomain,
           "Mackey-Glass: derivatives with non-integer exponent need u0 > 0");
    double gb = 1.0;  // generalized binomial C(p, j)
    for (int j = 0; j <= kMaxDerivativeOrder; ++j) {
      pw[j] = gb * std::pow(u0, k.p - j);
      gb = gb * (k.p - j) / (j + 1);
    }
  }
  Series den = pw;
  den[0] += 1.0;
  if (den[0] == 0.0)
    fail(ErrorCode::kNumericDomain, "Mackey-Glass: pole at u=" + std::to_string(u0));
  Series inv{};
  inv[0] = 1.0 / den[0];
  for (int j = 1; j <= kMaxDerivativeOrder; ++j) {
    double acc = 0.0;
    for (int m = 1; m <= j; ++m) acc += den[m] * inv[j - m];
    inv[j] = -acc / den[0];
  }
  Series g{};
  for (int j = 0; j <= kMaxDerivativeOrder; ++j)
    g[j] = k.eta * (u0 * inv[j] + (j > 0 ? inv[j - 1] : 0.0));
  return g;
}

// j-th derivative of sin^2 at u: 2^(j-1) sin(2u + (j-1) pi/2), j >= 1.
double sin2_derivative(double u, int j) {
  return std::ldexp(1.0, j - 1) * std::sin(2.0 * u + (j - 1) * std::numbers::pi / 2.0);
}

}  // namespace

std::string kernel_name(const KernelSpec& k) {
  return std::visit(overloaded{[](const MackeyGlass&) { return std::string("mackey-glass"); },
                               [](const Ikeda&) { return std::string("ikeda"); },
                               [](const LinearKernel&) { return std::string("linear"); }},
                    k);
}

double eval_kernel(const KernelSpec& k, double x, double input) {
  return std::visit(
      overloaded{
          [&](const MackeyGlass& mg) { return mg_value(mg, x + mg.gamma * input); },
          [&](const Ikeda& ik) {
            const double s = std::sin(x + ik.gamma * input + ik.phi);
            return ik.eta * s * s;
          },
          [&](const LinearKernel& lk) { return lk.alpha * x + lk.beta * input; }},
      k);
}

double state_derivative(const KernelSpec& k, double x0) {
  return std::visit(
      overloaded{[&](const MackeyGlass& mg) { return mg_series(mg, x0)[1]; },
                 [&](const Ikeda& ik) { return ik.eta * sin2_derivative(x0 + ik.phi, 1); },
                 [&](const LinearKernel& lk) { return lk.alpha; }},
      k);
}

std::vector<double> input_derivatives(const KernelSpec& k, double x0, int order) {
  if (order > kMaxDerivativeOrder)
    fail(ErrorCode::kUnsupportedOrder,
         "input derivatives are available up to order " +
             std::to_string(kMaxDerivativeOrder));
  require(order >= 0, "input_derivatives: negative order");
  std::vector<double> out(static_cast<std::size_t>(order));
  std::visit(overloaded{[&](const MackeyGlass& mg) {
                          const Series g = mg_series(mg, x0);
                          double fact = 1.0;
                          double gpow = 1.0;
                          for (int i = 1; i <= order; ++i) {
                            fact *= i;
                            gpow *= mg.gamma;
                            out[i - 1] = gpow * fact * g[i];
                          }
                        },
                        [&](const Ikeda& ik) {
                          double gpow = 1.0;
                          for (int i = 1; i <= order; ++i) {
                            gpow *= ik.gamma;
                            out[i - 1] = ik.eta * gpow * sin2_derivative(x0 + ik.phi, i);
                          }
                        },
                        [&](const LinearKernel& lk) {
                          if (order >= 1) out[0] = lk.beta;
                        }},
             k);
  return out;
}

std::vector<Equilibrium> find_equilibria(const KernelSpec& k, const EquilibriumSearch& search) {
  require(std::isfinite(search.lo) && std::isfinite(search.hi) && search.lo < search.hi,
          "find_equilibria: bracket must be finite and non-empty");
  require(search.grid >= 2, "find_equilibria: grid must have at least 2 nodes");

  auto g = [&](double x) -> double {
    try {
      return eval_kernel(k, x, 0.0) - x;
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto classify = [&](double x0) {
    Equilibrium e;
    e.x0 = x0;
    e.slope = state_derivative(k, x0);
    e.stable = std::abs(e.slope) < 1.0;
    return e;
  };
  auto accept = [&](double x0, std::vector<Equilibrium>& out) {
    // Sign changes across a pole are not roots.
    const double r = g(x0);
    if (!(std::abs(r) < 1e-10)) return;
    try {
      out.push_back(classify(x0));
    } catch (const Error&) {
    }
  };

  std::vector<Equilibrium> out;
  const double step = (search.hi - search.lo) / (search.grid - 1);
  auto node = [&](int i) { return i == search.grid - 1 ? search.hi : search.lo + i * step; };

  double x_prev = node(0);
  double g_prev = g(x_prev);
  if (g_prev == 0.0) accept(x_prev, out);
  for (int i = 1; i < search.grid; ++i) {
    const double x = node(i);
    const double gx = g(x);
    if (gx == 0.0) {
      // Cell (x_prev, x] owns the node.
      accept(x, out);
    } else if (std::isfinite(g_prev) && std::isfinite(gx) && g_prev != 0.0 &&
               std::signbit(g_prev) != std::signbit(gx)) {
      double a = x_prev, b = x, ga = g_prev;
      while (b - a > 1e-12 * std::max(1.0, std::abs(a))) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if (gm == 0.0) {
          a = b = m;
          break;
        }
        if (!std::isfinite(gm)) break;
        if (std::signbit(gm) == std::signbit(ga)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      accept(std::abs(g(a)) < std::abs(g(root)) ? a : root, out);
    }
    x_prev = x;
    g_prev = gx;
  }
  return out;
}

std::optional<Equilibrium> choose_equilibrium(const std::vector<Equilibrium>& eqs,
                                              EquilibriumChoice choice) {
  std::optional<Equilibrium> best;
  for (const auto& e : eqs) {
    if (!e.stable) continue;
    if (!best) {
      best = e;
      continue;
    }
    switch (choice) {
      case EquilibriumChoice::kLargestStable:
        if (e.x0 > best->x0) best = e;
        break;
      case EquilibriumChoice::kSmallestStable:
        if (e.x0 < best->x0) best = e;
        break;
      case EquilibriumChoice::kClosestToZero:
        if (std::abs(e.x0) < std::abs(best->x0)) best = e;
        break;
    }
  }
  return best;
}

}  // namespace tdr
