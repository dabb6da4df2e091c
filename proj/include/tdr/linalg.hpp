#pragma once

// Matrix-calculus primitives: vec/vech, duplication and elimination
// matrices, vech index maps, hafnians and the discrete Stein equation.

#include <Eigen/Dense>
#include <utility>

namespace tdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Column stacking of an m x n matrix.
Vector vec_op(const Matrix& a);

/// Stacks the lower triangle (diagonal included) column by column.
/// Throws kInvalidArgument unless `a` is square and symmetric to 1e-12
/// relative.
Vector vech_op(const Matrix& a);

/// Inverse of vech_op. `v` must have length n(n+1)/2.
Matrix unvech(const Vector& v, int n);

/// Length n(n+1)/2 of vech for an n x n matrix.
constexpr int vech_size(int n) { return n * (n + 1) / 2; }

/// D_n with vec(A) = D_n vech(A) for symmetric A.
Matrix duplication_matrix(int n);

/// L_n with vech(A) = L_n vec(A).
Matrix elimination_matrix(int n);

// vech position of entry (i, j), i >= j. 1-based on both sides, the way
// the index map is usually written down; the *_0 variants are 0-based.
int sigma_index(int i, int j, int n);
std::pair<int, int> sigma_inverse(int k, int n);
int sigma_index0(int i, int j, int n);
std::pair<int, int> sigma_inverse0(int k, int n);

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Sum over all perfect matchings of {0..2l-1} of the products of matched
/// entries. Recursive pairing on the first unmatched index, (2l-1)!! terms.
/// The 0x0 hafnian is 1. Odd dimension throws kInvalidArgument.
double hafnian(const Matrix& s);

double spectral_radius(const Matrix& a);

struct SteinOptions {
  double rel_tol = 1e-12;
  int max_doublings = 80;
  // The vech-vectorized dense solve is only attempted up to this size;
  // its system has m(m+1)/2 unknowns.
  int dense_fallback_max_dim = 40;
};

/// Solves G = A G A^T + S for symmetric S with rho(A) < 1 by doubling
/// (G <- G + P G P^T, P <- P^2). Falls back to the dense system
/// vech(G) = (I - L (A (x) A) D)^{-1} vech(S) if doubling stalls.
Matrix stein_solve(const Matrix& a, const Matrix& s, const SteinOptions& opts = {});

/// Solves the vectorized Stein system directly. O(m^6); small m only.
Matrix stein_solve_dense(const Matrix& a, const Matrix& s);

}  // namespace tdr
