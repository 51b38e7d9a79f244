#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "anm/types.hpp"

#ifdef ANM_USE_LAPACKE
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace anm {

/// Complex soft-thresholding, the prox of kappa * ||.||_1 on C^n:
/// y_i * max(1 - kappa/|y_i|, 0).
inline CVector soft_threshold(const CVector& y, double kappa) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("soft_threshold: kappa must be >= 0");
  CVector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mag = std::abs(y(i));
    out(i) = mag <= kappa ? cplx(0.0) : y(i) * (1.0 - kappa / mag);
  }
  return out;
}

struct EigPair {
  RVector values;  // ascending
  CMatrix vectors;  // unitary, column i pairs with values(i)
};

#ifdef ANM_USE_LAPACKE
namespace lapack_detail {

// One BLAS thread per caller: results must not depend on how many solver
// workers share the pool.
inline void pin_threads() {
  static const bool pinned = (openblas_set_num_threads(1), true);
  (void)pinned;
}

inline int n_of(const CMatrix& P) { return static_cast<int>(P.rows()); }

}  // namespace lapack_detail
#endif

/// Full spectral decomposition of a Hermitian matrix. Only the lower
/// triangle is read; callers symmetrize first.
inline EigPair hermitian_eig(const CMatrix& P) {
  if (P.rows() != P.cols()) throw std::invalid_argument("hermitian_eig: matrix must be square");
  if (!P.allFinite()) throw NumericError("hermitian_eig: non-finite entries");
#ifdef ANM_USE_LAPACKE
  lapack_detail::pin_threads();
  const int n = lapack_detail::n_of(P);
  EigPair out{RVector(n), P};
  if (n == 0) return out;
  if (LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data()) != 0)
    throw NumericError("hermitian_eig: eigensolver did not converge");
  return out;
#else
  Eigen::SelfAdjointEigenSolver<CMatrix> es(P, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericError("hermitian_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
#endif
}

/// Eigenpairs with eigenvalue > 0 of a Hermitian matrix, ascending.
inline EigPair hermitian_eig_positive(const CMatrix& P) {
#ifdef ANM_USE_LAPACKE
  if (P.rows() != P.cols()) throw std::invalid_argument("hermitian_eig_positive: matrix must be square");
  if (!P.allFinite()) throw NumericError("hermitian_eig_positive: non-finite entries");
  lapack_detail::pin_threads();
  const int n = lapack_detail::n_of(P);
  EigPair out{RVector(n), CMatrix(n, n)};
  if (n == 0) return out;
  CMatrix a = P;
  std::vector<int> support(2 * static_cast<std::size_t>(n));
  int found = 0;
  if (LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'L', n, a.data(), n, 0.0, std::numeric_limits<double>::max(), 0, 0,
                     0.0, &found, out.values.data(), out.vectors.data(), n, support.data()) != 0)
    throw NumericError("hermitian_eig_positive: eigensolver did not converge");
  out.values.conservativeResize(found);
  out.vectors.conservativeResize(n, found);
  return out;
#else
  EigPair full = hermitian_eig(P);
  Eigen::Index first = 0;
  while (first < full.values.size() && !(full.values(first) > 0.0)) ++first;
  const Eigen::Index k = full.values.size() - first;
  return {full.values.tail(k), full.vectors.rightCols(k)};
#endif
}

/// Frobenius-nearest Hermitian PSD matrix to (P + P^H)/2, formed as W W^H
/// from the positive eigenpairs only.
inline CMatrix psd_project(const CMatrix& P) {
  if (P.rows() != P.cols()) throw std::invalid_argument("psd_project: matrix must be square");
  const CMatrix sym = 0.5 * (P + P.adjoint());
  const EigPair pos = hermitian_eig_positive(sym);
  const CMatrix W = pos.vectors * pos.values.cwiseSqrt().asDiagonal();
  CMatrix out = W * W.adjoint();
  // Reassert exact Hermitian symmetry lost to roundoff in the product.
  return 0.5 * (out + out.adjoint());
}

}  // namespace anm
