#pragma once

// Independent evaluation of the printed KKT residual formulas: explicit
// loops, a direct Eigen eigensolver, and diagonal averaging by enumeration.

#include <Eigen/Eigenvalues>

#include "anm/scene.hpp"
#include "anm/state.hpp"

namespace anm::fixtures {

struct Etas {
  double v[6];
};

inline CMatrix oracle_psd(const CMatrix& A) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (A + A.adjoint()));
  RVector lam = es.eigenvalues();
  for (auto& x : lam) x = std::max(x, 0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

inline cplx oracle_soft(cplx x, double k) {
  const double a = std::abs(x);
  return a <= k ? cplx(0.0) : x * ((a - k) / a);
}

inline Etas verbatim_oracle(const SolverState& s, const ReceivedData& d, double lambda, double mu) {
  const int M = s.M(), N = s.N(), mn = M * N;
  CVector gamma(mn);
  for (int i = 0; i < mn; ++i) gamma(i) = s.Gamma(i, mn);
  Etas out{};

  double num = 0, nz = 0, ng = 0;
  for (int i = 0; i < mn; ++i) {
    num += std::norm(s.z(i) - d.r(i) + s.e(i) - 2.0 * gamma(i));
    nz += std::norm(s.z(i));
    ng += std::norm(gamma(i));
  }
  out.v[0] = std::sqrt(num) / (1.0 + std::sqrt(nz) + 2.0 * std::sqrt(ng));

  double n2 = 0, ne = 0, nr = 0;
  for (int i = 0; i < mn; ++i) {
    n2 += std::norm(s.e(i) - oracle_soft(s.e(i) - s.z(i), mu));
    ne += std::norm(s.e(i));
    nr += std::norm(d.r(i) - s.e(i) - s.z(i));
  }
  out.v[1] = std::sqrt(n2) / (1.0 + std::sqrt(ne) + std::sqrt(nr));

  out.v[2] = (s.Theta - oracle_psd(s.Theta - s.Gamma)).norm() / (1.0 + s.Theta.norm() + s.Gamma.norm());

  const double gbar = s.Gamma(mn, mn).real();
  out.v[3] = std::abs(lambda / 2.0 - gbar) / (1.0 + std::abs(s.eps) + std::abs(gbar));

  // T*(Gamma0) by averaging every (l, m) diagonal directly.
  double dev = 0, nu = 0, nt = 0;
  for (int l = -(N - 1); l <= N - 1; ++l)
    for (int m = -(M - 1); m <= M - 1; ++m) {
      cplx sum = 0;
      int count = 0;
      for (int J = 0; J < N; ++J)
        for (int p = 0; p < M; ++p) {
          const int Jp = J - l, q = p - m;
          if (Jp < 0 || Jp >= N || q < 0 || q >= M) continue;
          sum += s.Gamma(J * M + p, Jp * M + q);
          ++count;
        }
      const cplx t = sum / static_cast<double>(count);
      nt += std::norm(t);
      dev += std::norm(t - (l == 0 && m == 0 ? lambda / (2.0 * mn) : 0.0));
      nu += std::norm(s.U(l, m));
    }
  out.v[4] = std::sqrt(dev) / (1.0 + std::sqrt(nu) + std::sqrt(nt));

  double n6 = 0;
  for (int i = 0; i <= mn; ++i)
    for (int j = 0; j <= mn; ++j) {
      cplx c;
      if (i < mn && j < mn) {
        const int J = i / M, p = i % M, Jp = j / M, q = j % M;
        c = s.U(J - Jp, p - q);
      } else if (i < mn) {
        c = s.z(i);
      } else if (j < mn) {
        c = std::conj(s.z(j));
      } else {
        c = s.eps;
      }
      n6 += std::norm(s.Theta(i, j) - c);
    }
  out.v[5] = std::sqrt(n6);
  return out;
}

}  // namespace anm::fixtures
