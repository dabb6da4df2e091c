#include "tdr/moments.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tdr/error.hpp"

namespace tdr {

int total_order(const Exponents& k) {
  return std::accumulate(k.begin(), k.end(), 0);
}

double gaussian_moment(const Matrix& sigma, const Exponents& k) {
  require(sigma.rows() == sigma.cols() &&
              sigma.rows() == static_cast<Eigen::Index>(k.size()),
          "gaussian_moment: covariance and exponent dimensions differ");
  std::vector<int> coord;
  for (std::size_t s = 0; s < k.size(); ++s) {
    require(k[s] >= 0, "gaussian_moment: negative exponent");
    for (int r = 0; r < k[s]; ++r) coord.push_back(static_cast<int>(s));
  }
  const auto big_k = static_cast<Eigen::Index>(coord.size());
  if (big_k % 2 != 0) return 0.0;
  if (big_k == 0) return 1.0;
  Matrix expanded(big_k, big_k);
  for (Eigen::Index i = 0; i < big_k; ++i)
    for (Eigen::Index j = 0; j < big_k; ++j) expanded(i, j) = sigma(coord[i], coord[j]);
  return hafnian(expanded);
}

namespace {

// Enumerates every exponent vector of length n with total order <= max.
template <typename Fn>
void for_each_exponent(int n, int max_order, Fn&& fn) {
  Exponents k(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == n) {
      fn(k);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      k[pos] = e;
      self(self, pos + 1, left - e);
    }
    k[pos] = 0;
  };
  rec(rec, 0, max_order);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

MomentProvider MomentProvider::gaussian(const Matrix& sigma, int cache_order) {
  require(sigma.rows() == sigma.cols() && sigma.rows() >= 1,
          "gaussian provider: covariance must be square and non-empty");
  require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
          "gaussian provider: covariance must be symmetric");
  MomentProvider p;
  p.n_ = static_cast<int>(sigma.rows());
  p.gaussian_ = true;
  p.sigma_ = sigma;
  // Keep the cache to a few hundred thousand entries.
  while (cache_order > 0 && binomial(p.n_ + cache_order, p.n_) > 2e5) --cache_order;
  p.max_order_ = cache_order;
  for_each_exponent(p.n_, cache_order, [&](const Exponents& k) {
    if (total_order(k) % 2 == 0) p.table_.emplace(k, gaussian_moment(sigma, k));
  });
  return p;
}

MomentProvider MomentProvider::table(int n, int max_order,
                                     std::map<Exponents, double> moments) {
  require(n >= 1 && max_order >= 0, "table provider: bad dimensions");
  for (const auto& [k, v] : moments) {
    require(static_cast<int>(k.size()) == n, "table provider: exponent length != n");
    require(total_order(k) <= max_order, "table provider: entry above max_order");
    require(std::isfinite(v), "table provider: non-finite moment");
  }
  MomentProvider p;
  p.n_ = n;
  p.gaussian_ = false;
  p.max_order_ = max_order;
  p.table_ = std::move(moments);
  p.table_[Exponents(static_cast<std::size_t>(n), 0)] = 1.0;
  return p;
}

double MomentProvider::moment(const Exponents& k) const {
  require(static_cast<int>(k.size()) == n_, "moment: exponent length != dimension");
  const int order = total_order(k);
  if (gaussian_) {
    if (order % 2 != 0) return 0.0;
    if (order <= max_order_) return table_.at(k);
    return gaussian_moment(sigma_, k);
  }
  if (order > max_order_)
    fail(ErrorCode::kUnsupportedOrder, "moment table covers order <= " +
                                           std::to_string(max_order_) + ", asked " +
                                           std::to_string(order));
  auto it = table_.find(k);
  if (it == table_.end())
    fail(ErrorCode::kInvalidArgument, "moment table has no entry for requested exponents");
  return it->second;
}

int MomentProvider::max_order() const {
  return gaussian_ ? std::numeric_limits<int>::max() : max_order_;
}

void MomentProvider::require_order(int order) const {
  if (order > max_order())
    fail(ErrorCode::kUnsupportedOrder, "moment provider covers order <= " +
                                           std::to_string(max_order_) + ", need " +
                                           std::to_string(order));
}

Matrix MomentProvider::second_moments() const {
  if (gaussian_) return sigma_;
  require_order(2);
  Matrix m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      Exponents k(static_cast<std::size_t>(n_), 0);
      k[i] += 1;
      k[j] += 1;
      m(i, j) = moment(k);
    }
  return m;
}

bool MomentProvider::zero_mean() const {
  if (gaussian_) return true;
  if (max_order_ < 1) return false;
  for (int i = 0; i < n_; ++i) {
    Exponents k(static_cast<std::size_t>(n_), 0);
    k[i] = 1;
    auto it = table_.find(k);
    if (it == table_.end() || it->second != 0.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Polynomial Polynomial::constant(int n_vars, double c) {
  Polynomial p(n_vars);
  p.add_term(Exponents(static_cast<std::size_t>(n_vars), 0), c);
  return p;
}

Polynomial Polynomial::monomial(int n_vars, const Exponents& k, double coef) {
  Polynomial p(n_vars);
  p.add_term(k, coef);
  return p;
}

Polynomial Polynomial::variable(int n_vars, int i) {
  require(i >= 0 && i < n_vars, "Polynomial::variable: index out of range");
  Exponents k(static_cast<std::size_t>(n_vars), 0);
  k[i] = 1;
  return monomial(n_vars, k);
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [k, c] : terms_) d = std::max(d, total_order(k));
  return d;
}

void Polynomial::add_term(const Exponents& k, double coef) {
  require(static_cast<int>(k.size()) == n_, "Polynomial: exponent length != n_vars");
  if (coef == 0.0) return;
  auto [it, inserted] = terms_.emplace(k, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::coefficient(const Exponents& k) const {
  auto it = terms_.find(k);
  return it == terms_.end() ? 0.0 : it->second;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (n_ == 0 && terms_.empty()) n_ = o.n_;
  require(o.n_ == n_ || o.terms_.empty(), "Polynomial: variable count mismatch");
  for (const auto& [k, c] : o.terms_) add_term(k, c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, c] : terms_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  require(a.n_ == b.n_, "Polynomial: variable count mismatch");
  Polynomial out(a.n_);
  Exponents k(static_cast<std::size_t>(a.n_));
  for (const auto& [ka, ca] : a.terms_)
    for (const auto& [kb, cb] : b.terms_) {
      for (std::size_t s = 0; s < k.size(); ++s) k[s] = ka[s] + kb[s];
      out.add_term(k, ca * cb);
    }
  return out;
}

double Polynomial::evaluate(const Vector& z) const {
  require(z.size() == n_, "Polynomial::evaluate: point dimension mismatch");
  double total = 0.0;
  for (const auto& [k, c] : terms_) {
    double m = c;
    for (int s = 0; s < n_; ++s)
      if (k[s] != 0) m *= std::pow(z(s), k[s]);
    total += m;
  }
  return total;
}

double poly_expectation(const Polynomial& p, const MomentProvider& provider) {
  if (p.empty()) return 0.0;
  require(p.n_vars() == provider.dimension(),
          "poly_expectation: polynomial and provider dimensions differ");
  double total = 0.0;
  for (const auto& [k, c] : p.terms()) total += c * provider.moment(k);
  return total;
}

double product_expectation(const Polynomial& p, const Polynomial& q,
                           const MomentProvider& provider) {
  if (p.empty() || q.empty()) return 0.0;
  require(p.n_vars() == q.n_vars() && p.n_vars() == provider.dimension(),
          "product_expectation: dimension mismatch");
  double total = 0.0;
  Exponents k(static_cast<std::size_t>(p.n_vars()));
  for (const auto& [ka, ca] : p.terms())
    for (const auto& [kb, cb] : q.terms()) {
      for (std::size_t s = 0; s < k.size(); ++s) k[s] = ka[s] + kb[s];
      total += ca * cb * provider.moment(k);
    }
  return total;
}

}  // namespace tdr
