#pragma once

// Nonlinear kernels f(x, I, theta) of the delay equation
//   x'(s) = -x(s) + f(x(s - tau), I(s), theta),
// with closed-form derivatives and equilibrium search.

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tdr {

/// f = eta * u / (1 + u^p), u = x + gamma * I.
struct MackeyGlass {
  double eta = 2.0;
  double gamma = 1.0;
  double p = 2.0;
};

/// f = eta * sin^2(x + gamma * I + phi).
struct Ikeda {
  double eta = 1.0;
  double gamma = 1.0;
  double phi = 0.0;
};

/// f = alpha * x + beta * I. Only used to check the integrators against
/// closed-form linear solutions.
struct LinearKernel {
  double alpha = 0.5;
  double beta = 1.0;
};

using KernelSpec = std::variant<MackeyGlass, Ikeda, LinearKernel>;

inline constexpr int kMaxDerivativeOrder = 6;

std::string kernel_name(const KernelSpec& k);

/// Throws kNumericDomain at a Mackey-Glass pole or outside the domain of a
/// non-integer exponent (u < 0).
double eval_kernel(const KernelSpec& k, double x, double input);

/// d f / d x at (x0, 0).
double state_derivative(const KernelSpec& k, double x0);

/// [d^i f / d I^i (x0, 0)] for i = 1..order. order > 6 throws
/// kUnsupportedOrder.
std::vector<double> input_derivatives(const KernelSpec& k, double x0, int order);

struct Equilibrium {
  double x0 = 0.0;
  double slope = 0.0;  // d f / d x at (x0, 0)
  bool stable = false; // |slope| < 1
};

struct EquilibriumSearch {
  double lo = -5.0;
  double hi = 5.0;
  int grid = 1000;
};

/// Sign-change roots of f(x, 0) - x on a uniform grid, bisection-refined.
/// Exact zeros at grid nodes are attributed to the cell on their left.
std::vector<Equilibrium> find_equilibria(const KernelSpec& k,
                                         const EquilibriumSearch& search = {});

enum class EquilibriumChoice { kLargestStable, kSmallestStable, kClosestToZero };

/// Picks one stable equilibrium, or nothing if none is stable.
std::optional<Equilibrium> choose_equilibrium(const std::vector<Equilibrium>& eqs,
                                              EquilibriumChoice choice);

}  // namespace tdr
