#pragma once

// Two-level block-Toeplitz operator T(U) and its diagonal-averaging
// pseudo-adjoint T*.
//
// Layout: the MN x MN matrix is an N x N grid of M x M blocks. Block
// (J, J') holds Toep(u_{J-J'}), and entry (p, q) of Toep(u_l) is u_l(p-q).
// Positive l therefore lives below the block diagonal.

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "anm/types.hpp"

namespace anm {

/// Coefficients u_l(m), l in [-(N-1), N-1], m in [-(M-1), M-1], stored as a
/// (2M-1) x (2N-1) array (row m+M-1, column l+N-1).
class BlockToeplitzCoeffs {
 public:
  BlockToeplitzCoeffs() = default;
  BlockToeplitzCoeffs(int M, int N) : M_(M), N_(N), u_(CMatrix::Zero(2 * M - 1, 2 * N - 1)) {
    if (M < 1 || N < 1) throw std::invalid_argument("BlockToeplitzCoeffs: M and N must be >= 1");
  }
  BlockToeplitzCoeffs(int M, int N, CMatrix raw) : M_(M), N_(N), u_(std::move(raw)) {
    if (M < 1 || N < 1) throw std::invalid_argument("BlockToeplitzCoeffs: M and N must be >= 1");
    if (u_.rows() != 2 * M - 1 || u_.cols() != 2 * N - 1)
      throw std::invalid_argument("BlockToeplitzCoeffs: raw array must be (2M-1) x (2N-1)");
  }

  /// I_(M,N): a single 1 at l = m = 0.
  static BlockToeplitzCoeffs unit(int M, int N) {
    BlockToeplitzCoeffs c(M, N);
    c(0, 0) = 1.0;
    return c;
  }

  int M() const { return M_; }
  int N() const { return N_; }

  cplx& operator()(int l, int m) { return u_(m + M_ - 1, l + N_ - 1); }
  const cplx& operator()(int l, int m) const { return u_(m + M_ - 1, l + N_ - 1); }

  /// u_l as a (2M-1)-vector ordered m = -(M-1) .. M-1.
  CVector column(int l) const { return u_.col(l + N_ - 1); }

  const CMatrix& raw() const { return u_; }
  CMatrix& raw() { return u_; }

  double norm() const { return u_.norm(); }

  /// Largest |u_{-l}(-m) - conj(u_l(m))| over all coefficients.
  double hermitian_defect() const {
    double worst = 0.0;
    for (int l = -(N_ - 1); l <= N_ - 1; ++l)
      for (int m = -(M_ - 1); m <= M_ - 1; ++m)
        worst = std::max(worst, std::abs((*this)(-l, -m) - std::conj((*this)(l, m))));
    return worst;
  }

  BlockToeplitzCoeffs& operator+=(const BlockToeplitzCoeffs& o) { u_ += o.u_; return *this; }
  BlockToeplitzCoeffs& operator-=(const BlockToeplitzCoeffs& o) { u_ -= o.u_; return *this; }
  BlockToeplitzCoeffs& operator*=(cplx s) { u_ *= s; return *this; }

  friend BlockToeplitzCoeffs operator+(BlockToeplitzCoeffs a, const BlockToeplitzCoeffs& b) { return a += b; }
  friend BlockToeplitzCoeffs operator-(BlockToeplitzCoeffs a, const BlockToeplitzCoeffs& b) { return a -= b; }
  friend BlockToeplitzCoeffs operator*(cplx s, BlockToeplitzCoeffs a) { return a *= s; }

 private:
  int M_ = 1;
  int N_ = 1;
  CMatrix u_ = CMatrix::Zero(1, 1);
};

/// M x M Toeplitz matrix with entry (p, q) = u_l(p - q).
inline CMatrix toep(const CVector& u_l) {
  if (u_l.size() < 1 || u_l.size() % 2 == 0)
    throw std::invalid_argument("toep: coefficient vector must have odd length 2M-1");
  const int M = static_cast<int>((u_l.size() + 1) / 2);
  CMatrix out(M, M);
  for (int q = 0; q < M; ++q)
    for (int p = 0; p < M; ++p) out(p, q) = u_l(p - q + M - 1);
  return out;
}

/// Materializes T(U) as a dense MN x MN matrix.
inline CMatrix t_apply(const BlockToeplitzCoeffs& U) {
  const int M = U.M(), N = U.N();
  CMatrix out(M * N, M * N);
  for (int Jc = 0; Jc < N; ++Jc)
    for (int q = 0; q < M; ++q)
      for (int Jr = 0; Jr < N; ++Jr)
        for (int p = 0; p < M; ++p) out(Jr * M + p, Jc * M + q) = U(Jr - Jc, p - q);
  return out;
}

/// The M x M block of P occupied by the j-th copy (1-based, left to right)
/// of Toep(u_l) in T(U).
inline CMatrix subblock(const CMatrix& P, int M, int N, int l, int j) {
  if (P.rows() != M * N || P.cols() != M * N)
    throw std::invalid_argument("subblock: P must be MN x MN");
  if (std::abs(l) > N - 1 || j < 1 || j > N - std::abs(l))
    throw std::invalid_argument("subblock: (l, j) out of range");
  const int row = l >= 0 ? l + j - 1 : j - 1;
  const int col = l >= 0 ? j - 1 : -l + j - 1;
  return P.block(row * M, col * M, M, M);
}

/// Sum of A(p, q) over p - q = m.
inline cplx tr_m(const CMatrix& A, int m) {
  const int M = static_cast<int>(A.rows());
  if (A.cols() != M) throw std::invalid_argument("tr_m: matrix must be square");
  if (std::abs(m) >= M) throw std::invalid_argument("tr_m: |m| must be < M");
  cplx s = 0.0;
  for (int q = std::max(0, -m); q < M && q + m < M; ++q) s += A(q + m, q);
  return s;
}

/// T*(P): averages P over each two-level diagonal (l, m). Satisfies
/// t_star(t_apply(U)) == U.
inline BlockToeplitzCoeffs t_star(const CMatrix& P, int M, int N) {
  if (P.rows() != M * N || P.cols() != M * N)
    throw std::invalid_argument("t_star: P must be MN x MN (got " + std::to_string(P.rows()) + "x" +
                                std::to_string(P.cols()) + ")");
  BlockToeplitzCoeffs Q(M, N);
  CMatrix& acc = Q.raw();
  for (int Jc = 0; Jc < N; ++Jc)
    for (int q = 0; q < M; ++q)
      for (int Jr = 0; Jr < N; ++Jr)
        for (int p = 0; p < M; ++p) acc(p - q + M - 1, Jr - Jc + N - 1) += P(Jr * M + p, Jc * M + q);
  for (int l = -(N - 1); l <= N - 1; ++l)
    for (int m = -(M - 1); m <= M - 1; ++m)
      Q(l, m) /= static_cast<double>((N - std::abs(l)) * (M - std::abs(m)));
  return Q;
}

/// Number of entries of T(U) carrying u_l(m).
inline double diagonal_multiplicity(int M, int N, int l, int m) {
  return static_cast<double>((N - std::abs(l)) * (M - std::abs(m)));
}

}  // namespace anm
