#include "tdr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "tdr/error.hpp"

namespace tdr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNumericDomain: return "numeric-domain";
    case ErrorCode::kUnsupportedOrder: return "unsupported-order";
    case ErrorCode::kInstability: return "instability";
    case ErrorCode::kNumericFailure: return "numeric-failure";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kSingular: return "singular";
  }
  return "unknown";
}

Vector vec_op(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Vector vech_op(const Matrix& a) {
  require(a.rows() == a.cols(), "vech: matrix must be square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "vech: matrix must be symmetric");
  const int n = static_cast<int>(a.rows());
  Vector v(vech_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v(k++) = a(i, j);
  return v;
}

Matrix unvech(const Vector& v, int n) {
  require(n >= 0 && v.size() == vech_size(n),
          "unvech: length " + std::to_string(v.size()) + " does not match n=" +
              std::to_string(n));
  Matrix a(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      a(i, j) = v(k);
      a(j, i) = v(k);
      ++k;
    }
  return a;
}

Matrix duplication_matrix(int n) {
  require(n >= 1, "duplication_matrix: n must be >= 1");
  Matrix d = Matrix::Zero(n * n, vech_size(n));
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      const int k = sigma_index0(i, j, n);
      d(i + j * n, k) = 1.0;
      d(j + i * n, k) = 1.0;
    }
  return d;
}

Matrix elimination_matrix(int n) {
  require(n >= 1, "elimination_matrix: n must be >= 1");
  Matrix l = Matrix::Zero(vech_size(n), n * n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) l(sigma_index0(i, j, n), i + j * n) = 1.0;
  return l;
}

int sigma_index0(int i, int j, int n) {
  require(i >= j && j >= 0 && i < n, "sigma_index: need 0 <= j <= i < n");
  // Columns 0..j-1 contribute n + (n-1) + ... + (n-j+1) slots.
  return j * n - j * (j - 1) / 2 + (i - j);
}

std::pair<int, int> sigma_inverse0(int k, int n) {
  require(n >= 1 && k >= 0 && k < vech_size(n), "sigma_inverse: k out of range");
  int j = 0;
  int start = 0;
  while (start + (n - j) <= k) {
    start += n - j;
    ++j;
  }
  return {j + (k - start), j};
}

int sigma_index(int i, int j, int n) { return sigma_index0(i - 1, j - 1, n) + 1; }

std::pair<int, int> sigma_inverse(int k, int n) {
  auto [i, j] = sigma_inverse0(k - 1, n);
  return {i + 1, j + 1};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

double hafnian_rec(const Matrix& s, std::vector<int>& free) {
  if (free.empty()) return 1.0;
  const int first = free.front();
  double total = 0.0;
  // Pair `first` with each remaining index, recurse on what is left.
  for (std::size_t k = 1; k < free.size(); ++k) {
    const double w = s(first, free[k]);
    if (w == 0.0) continue;
    std::vector<int> rest;
    rest.reserve(free.size() - 2);
    for (std::size_t m = 1; m < free.size(); ++m)
      if (m != k) rest.push_back(free[m]);
    total += w * hafnian_rec(s, rest);
  }
  return total;
}

}  // namespace

double hafnian(const Matrix& s) {
  require(s.rows() == s.cols(), "hafnian: matrix must be square");
  require(s.rows() % 2 == 0, "hafnian: dimension must be even");
  std::vector<int> idx(static_cast<std::size_t>(s.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return hafnian_rec(s, idx);
}

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix stein_solve_dense(const Matrix& a, const Matrix& s) {
  const int m = static_cast<int>(a.rows());
  const Matrix dm = duplication_matrix(m);
  const Matrix lm = elimination_matrix(m);
  const int nn = vech_size(m);
  const Matrix sys = Matrix::Identity(nn, nn) - lm * kron(a, a) * dm;
  const Vector g = sys.partialPivLu().solve(vech_op(s));
  return unvech(g, m);
}

Matrix stein_solve(const Matrix& a, const Matrix& s, const SteinOptions& opts) {
  require(a.rows() == a.cols() && s.rows() == a.rows() && s.cols() == a.cols(),
          "stein_solve: dimension mismatch");
  const Matrix sym = 0.5 * (s + s.transpose());
  require((s - sym).cwiseAbs().maxCoeff() <=
              1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()),
          "stein_solve: S must be symmetric");
  const double rho = spectral_radius(a);
  if (!(rho < 1.0))
    fail(ErrorCode::kInstability,
         "stein_solve: spectral radius " + std::to_string(rho) + " >= 1");

  Matrix g = sym;
  Matrix p = a;
  for (int it = 0; it < opts.max_doublings; ++it) {
    const Matrix inc = p * g * p.transpose();
    g += inc;
    const double gn = g.norm();
    if (inc.norm() <= opts.rel_tol * gn || gn == 0.0) {
      return 0.5 * (g + g.transpose());
    }
    p = p * p;
    if (!p.allFinite()) break;
  }
  if (a.rows() <= opts.dense_fallback_max_dim) return stein_solve_dense(a, sym);
  fail(ErrorCode::kNumericFailure, "stein_solve: doubling did not converge");
}

}  // namespace tdr
