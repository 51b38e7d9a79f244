#pragma once

// Numerical check that each sGS sweep equals one joint proximal minimization
//
//   min_x  L_rho(x) + 1/2 ||x - x^k||_T^2,   T = U D^{-1} U^T,
//
// where Q = D + U + U^T is the Hessian of the smooth part of L_rho in the
// swept blocks (first block carries the nonsmooth term). Q is recovered from
// aug_lagrangian by polarization in real coordinates, T is formed from it,
// and the joint problem is solved by proximal gradient after eliminating the
// smooth blocks. Nothing here reuses the closed-form step formulas.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "anm/proxops.hpp"
#include "anm/solver.hpp"

namespace anm {

using RMatrix = Eigen::MatrixXd;

namespace sgs_detail {

inline void put_complex(RVector& x, Eigen::Index& pos, const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(pos++) = v(i).real();
    x(pos++) = v(i).imag();
  }
}

inline void get_complex(const RVector& x, Eigen::Index& pos, CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i, pos += 2) v(i) = cplx(x(pos), x(pos + 1));
}

/// Orthonormal real coordinates of a Hermitian n x n matrix (n^2 entries).
inline void put_hermitian(RVector& x, Eigen::Index& pos, const CMatrix& H) {
  const Eigen::Index n = H.rows();
  for (Eigen::Index i = 0; i < n; ++i) x(pos++) = H(i, i).real();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      x(pos++) = std::sqrt(2.0) * H(i, j).real();
      x(pos++) = std::sqrt(2.0) * H(i, j).imag();
    }
}

inline void get_hermitian(const RVector& x, Eigen::Index& pos, CMatrix& H) {
  const Eigen::Index n = H.rows();
  for (Eigen::Index i = 0; i < n; ++i) H(i, i) = x(pos++);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i, pos += 2) {
      H(i, j) = cplx(x(pos), x(pos + 1)) / std::sqrt(2.0);
      H(j, i) = std::conj(H(i, j));
    }
}

/// A sweep described in real coordinates: block sizes (first block
/// nonsmooth), packing, and the prox of the nonsmooth term.
struct SweepModel {
  std::vector<Eigen::Index> blocks;
  std::function<RVector(const SolverState&)> pack;
  std::function<void(const RVector&, SolverState&)> unpack;
  std::function<RVector(const RVector&, double)> prox_first;  // (absolute x1, step) -> x1
};

inline SweepModel step1_model(int mn, double mu) {
  SweepModel m;
  m.blocks = {2 * mn, 2 * mn};
  m.pack = [mn](const SolverState& s) {
    RVector x(4 * mn);
    Eigen::Index p = 0;
    put_complex(x, p, s.e);
    put_complex(x, p, s.g);
    return x;
  };
  m.unpack = [](const RVector& x, SolverState& s) {
    Eigen::Index p = 0;
    get_complex(x, p, s.e);
    get_complex(x, p, s.g);
  };
  m.prox_first = [mn, mu](const RVector& x1, double t) {
    CVector v(mn);
    Eigen::Index p = 0;
    get_complex(x1, p, v);
    RVector out(x1.size());
    p = 0;
    put_complex(out, p, soft_threshold(v, mu * t));
    return out;
  };
  return m;
}

inline SweepModel step2_model(int M, int N) {
  const int mn = M * N;
  const Eigen::Index nt = static_cast<Eigen::Index>(mn + 1) * (mn + 1);
  const Eigen::Index nu = 2 * static_cast<Eigen::Index>(2 * M - 1) * (2 * N - 1);
  SweepModel m;
  m.blocks = {nt, nu, 1, 2 * mn};
  m.pack = [=](const SolverState& s) {
    RVector x(nt + nu + 1 + 2 * mn);
    Eigen::Index p = 0;
    put_hermitian(x, p, s.Theta);
    const CMatrix& raw = s.U.raw();
    put_complex(x, p, Eigen::Map<const CVector>(raw.data(), raw.size()));
    x(p++) = s.eps;
    put_complex(x, p, s.z);
    return x;
  };
  m.unpack = [=](const RVector& x, SolverState& s) {
    Eigen::Index p = 0;
    get_hermitian(x, p, s.Theta);
    CVector u(nu / 2);
    get_complex(x, p, u);
    s.U = BlockToeplitzCoeffs(M, N, Eigen::Map<const CMatrix>(u.data(), 2 * M - 1, 2 * N - 1));
    s.eps = x(p++);
    get_complex(x, p, s.z);
  };
  m.prox_first = [=](const RVector& x1, double) {
    CMatrix H(mn + 1, mn + 1);
    Eigen::Index p = 0;
    get_hermitian(x1, p, H);
    RVector out(x1.size());
    p = 0;
    put_hermitian(out, p, psd_project(H));
    return out;
  };
  return m;
}

struct QuadraticModel {
  RMatrix hessian;
  RVector gradient;  // at the packed base point
};

/// Exact for quadratics: unit-step polarization and central differences.
inline QuadraticModel polarize(const std::function<double(const RVector&)>& f, const RVector& x0) {
  const Eigen::Index n = x0.size();
  QuadraticModel q;
  q.hessian.resize(n, n);
  q.gradient.resize(n);
  const double f0 = f(x0);
  RVector fi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    RVector xp = x0, xm = x0;
    xp(i) += 1.0;
    xm(i) -= 1.0;
    fi(i) = f(xp);
    q.gradient(i) = 0.5 * (fi(i) - f(xm));
    q.hessian(i, i) = fi(i) + f(xm) - 2.0 * f0;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      RVector x = x0;
      x(i) += 1.0;
      x(j) += 1.0;
      q.hessian(i, j) = q.hessian(j, i) = f(x) - fi(i) - fi(j) + f0;
    }
  return q;
}

/// T = U D^{-1} U^T for the block partition of Q.
inline RMatrix sgs_operator(const RMatrix& Q, const std::vector<Eigen::Index>& blocks) {
  const Eigen::Index n = Q.rows();
  RMatrix Up = RMatrix::Zero(n, n), Dinv = RMatrix::Zero(n, n);
  Eigen::Index oi = 0;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    Dinv.block(oi, oi, blocks[bi], blocks[bi]) =
        Q.block(oi, oi, blocks[bi], blocks[bi]).ldlt().solve(RMatrix::Identity(blocks[bi], blocks[bi]));
    Up.block(oi, oi + blocks[bi], blocks[bi], n - oi - blocks[bi]) =
        Q.block(oi, oi + blocks[bi], blocks[bi], n - oi - blocks[bi]);
    oi += blocks[bi];
  }
  return Up * Dinv * Up.transpose();
}

/// argmin_d 1/2 d^T A d + b^T d + phi(x1 + d1) by elimination of the smooth
/// blocks and proximal gradient on the first block.
inline RVector solve_joint(const RMatrix& A, const RVector& b, const RVector& x0, Eigen::Index n1,
                           const std::function<RVector(const RVector&, double)>& prox) {
  const Eigen::Index n = A.rows(), nr = n - n1;
  const Eigen::LDLT<RMatrix> rr(A.bottomRightCorner(nr, nr));
  const RMatrix A1r = A.topRightCorner(n1, nr);
  const RMatrix S = A.topLeftCorner(n1, n1) - A1r * rr.solve(A1r.transpose());
  const RVector c = b.head(n1) - A1r * rr.solve(b.tail(nr));

  const double L = Eigen::SelfAdjointEigenSolver<RMatrix>(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly)
                       .eigenvalues()
                       .maxCoeff();
  const double t = 1.0 / L;
  const RVector base = x0.head(n1);
  RVector d1 = RVector::Zero(n1);
  for (int it = 0; it < 100000; ++it) {
    const RVector next = prox(base + d1 - t * (S * d1 + c), t) - base;
    const double change = (next - d1).norm();
    d1 = next;
    if (change <= 1e-15 * (1.0 + d1.norm() + base.norm())) break;
  }
  RVector d(n);
  d.head(n1) = d1;
  d.tail(nr) = -rr.solve(b.tail(nr) + A1r.transpose() * d1);
  return x0 + d;
}

struct SweepCheck {
  double residual = 0.0;
  RMatrix T;  // sGS proximal operator in packed coordinates
};

inline SweepCheck check_sweep(const SolverState& state, const ReceivedData& d, const IterationConstants& c,
                              const SweepModel& model,
                              const std::function<void(SolverState&, const ReceivedData&, const IterationConstants&)>& sweep) {
  const RVector x0 = model.pack(state);
  auto smooth = [&](const RVector& x) {
    SolverState s = state;
    model.unpack(x, s);
    return aug_lagrangian(s, d, c.lambda, 0.0, c.rho);
  };
  const QuadraticModel q = polarize(smooth, x0);
  SweepCheck out;
  out.T = sgs_operator(q.hessian, model.blocks);
  const RVector xj = solve_joint(q.hessian + out.T, q.gradient, x0, model.blocks.front(), model.prox_first);

  SolverState ref = state;
  sweep(ref, d, c);
  out.residual = (model.pack(ref) - xj).cwiseAbs().maxCoeff();
  return out;
}

inline void require_small_hermitian(const SolverState& s, const ReceivedData& d) {
  check_dims(s, d);
  if (s.size() > 20) throw std::invalid_argument("sgs_equivalence_check: instance too large (MN must be <= 20)");
  auto herm = [](const CMatrix& A) { return (A - A.adjoint()).norm() <= 1e-12 * (1.0 + A.norm()); };
  if (!herm(s.Theta) || !herm(s.Gamma))
    throw std::invalid_argument("sgs_equivalence_check: Theta and Gamma must be Hermitian");
}

}  // namespace sgs_detail

struct EquivalenceResidual {
  double step1 = 0.0;  // max abs coordinate gap, (e, g) sweep
  double step2 = 0.0;  // max abs coordinate gap, (Theta, U, eps, z) sweep
};

inline EquivalenceResidual sgs_equivalence_check(const SolverState& state, const ReceivedData& d,
                                                 const IterationConstants& c) {
  sgs_detail::require_small_hermitian(state, d);
  EquivalenceResidual r;
  r.step1 = sgs_detail::check_sweep(state, d, c, sgs_detail::step1_model(state.size(), c.mu), step1_eg).residual;
  r.step2 = sgs_detail::check_sweep(state, d, c, sgs_detail::step2_model(state.M(), state.N()), step2_zeUTheta).residual;
  return r;
}

inline EquivalenceResidual sgs_equivalence_check(const SolverState& state, const ReceivedData& d,
                                                 const SolverParams& params) {
  return sgs_equivalence_check(state, d, resolve(params, d.size()));
}

/// The proximal operators T1 (on (e, g)) and T2 (on (Theta, U, eps, z)) in
/// packed real coordinates: complex entries as (re, im) pairs, Hermitian
/// matrices as diagonal followed by sqrt(2)-scaled upper-triangle pairs.
inline std::pair<RMatrix, RMatrix> sgs_operators(const SolverState& state, const ReceivedData& d,
                                                 const IterationConstants& c) {
  sgs_detail::require_small_hermitian(state, d);
  return {sgs_detail::check_sweep(state, d, c, sgs_detail::step1_model(state.size(), c.mu), step1_eg).T,
          sgs_detail::check_sweep(state, d, c, sgs_detail::step2_model(state.M(), state.N()), step2_zeUTheta).T};
}

}  // namespace anm
