#pragma once

// Higher-order moments of a zero-mean input vector and the sparse
// multivariate polynomials they are evaluated against.

#include <map>
#include <vector>

#include "tdr/linalg.hpp"

namespace tdr {

/// Exponent vector (k_1, ..., k_n) of a monomial z_1^k_1 ... z_n^k_n.
using Exponents = std::vector<int>;

int total_order(const Exponents& k);

/// E[z_1^k_1 ... z_n^k_n] for z ~ N(0, sigma): the hafnian of the expanded
/// covariance of the repeated-coordinate vector when the total order is
/// even, zero otherwise.
double gaussian_moment(const Matrix& sigma, const Exponents& k);

/// Source of input moments: analytic Gaussian, or a user-supplied table for
/// non-Gaussian inputs. Immutable once built; safe to share across threads.
class MomentProvider {
 public:
  /// Precomputes every moment up to `cache_order`; higher orders are still
  /// answered, by a fresh hafnian each time.
  static MomentProvider gaussian(const Matrix& sigma, int cache_order = 8);

  /// Table provider; queries above `max_order` throw kUnsupportedOrder,
  /// and exponent vectors missing from the table throw kInvalidArgument.
  static MomentProvider table(int n, int max_order,
                              std::map<Exponents, double> moments);

  double moment(const Exponents& k) const;

  int dimension() const { return n_; }
  bool is_gaussian() const { return gaussian_; }
  /// Highest order guaranteed to be answerable; unbounded for Gaussian.
  int max_order() const;
  /// Second moments E[z z^T] (the covariance, for zero-mean inputs).
  Matrix second_moments() const;
  /// True when every first moment is zero.
  bool zero_mean() const;

  /// Throws kUnsupportedOrder if moments up to `order` cannot be served.
  void require_order(int order) const;

 private:
  MomentProvider() = default;

  int n_ = 0;
  bool gaussian_ = false;
  int max_order_ = 0;
  Matrix sigma_;
  std::map<Exponents, double> table_;
};

/// Sparse polynomial in n variables; terms keyed by exponent vector.
/// Terms with coefficient exactly zero are never stored.
class Polynomial {
 public:
  using Terms = std::map<Exponents, double>;

  explicit Polynomial(int n_vars = 0) : n_(n_vars) {}

  static Polynomial constant(int n_vars, double c);
  static Polynomial monomial(int n_vars, const Exponents& k, double coef = 1.0);
  /// The single variable z_i (0-based).
  static Polynomial variable(int n_vars, int i);

  int n_vars() const { return n_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  int degree() const;

  /// Adds `coef` to the term with exponents `k`.
  void add_term(const Exponents& k, double coef);
  double coefficient(const Exponents& k) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  /// Evaluates at a point z of length n_vars.
  double evaluate(const Vector& z) const;

 private:
  int n_;
  Terms terms_;
};

inline Polynomial poly_mul(const Polynomial& p, const Polynomial& q) { return p * q; }

/// Replaces each monomial by the corresponding moment and sums.
double poly_expectation(const Polynomial& p, const MomentProvider& provider);

/// E[p * q] without materializing the product.
double product_expectation(const Polynomial& p, const Polynomial& q,
                           const MomentProvider& provider);

}  // namespace tdr
