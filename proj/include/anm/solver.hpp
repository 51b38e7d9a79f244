#pragma once

// sGS-ADMM and the directly-extended ADMM baseline for
//
//   min  1/2 ||g||^2 + lambda/(2MN) Tr T(U) + lambda eps/2 + mu ||e||_1 + delta_{S+}(Theta)
//   s.t. g = r - e - S z,   Theta = [[T(U), z], [z^H, eps]]
//
// with S = diag(s_hat). All inner products are <x, y> = Re(x^H y).

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anm/diagnostics.hpp"
#include "anm/proxops.hpp"
#include "anm/scene.hpp"
#include "anm/state.hpp"
#include "anm/toeplitz.hpp"

namespace anm {

enum class SolveStatus { converged, max_iter, numeric_failure };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numeric_failure: return "numeric_failure";
  }
  return "numeric_failure";
}

enum class Algorithm { sgs_admm, admm };

inline std::string to_string(Algorithm a) { return a == Algorithm::sgs_admm ? "sgs_admm" : "admm"; }

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "sgs_admm" || s == "sgs") return Algorithm::sgs_admm;
  if (s == "admm") return Algorithm::admm;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected sgs_admm or admm)");
}

struct HistoryRecord {
  int iter = 0;
  KktReport kkt;
  double seconds = 0.0;
};

struct Solution {
  SolverState state;
  int iterations = 0;
  std::vector<HistoryRecord> history;
  SolveStatus status = SolveStatus::max_iter;
  IterationConstants constants;
  std::string message;

  const KktReport* last_kkt() const { return history.empty() ? nullptr : &history.back().kkt; }
};

inline double real_inner(const CMatrix& a, const CMatrix& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }
inline double real_inner(const CVector& a, const CVector& b) { return a.dot(b).real(); }

inline void check_dims(const SolverState& s, const ReceivedData& d) {
  if (d.r.size() != d.size() || d.s_hat.size() != d.size())
    throw std::invalid_argument("ReceivedData: r and s_hat must have length MN");
  if (s.M() != d.M || s.N() != d.N) throw std::invalid_argument("SolverState dimensions do not match the data");
}

/// Augmented Lagrangian value. The PSD indicator on Theta is omitted; the
/// caller is responsible for Theta being PSD where that matters.
inline double aug_lagrangian(const SolverState& s, const ReceivedData& d, double lambda, double mu, double rho) {
  const double mn = static_cast<double>(s.size());
  const CVector fit = s.g - d.r + s.e + d.s_hat.cwiseProduct(s.z);
  const CMatrix gap = s.Theta - coupling_matrix(s);
  return 0.5 * s.g.squaredNorm() + lambda / (2.0 * mn) * mn * s.U(0, 0).real() + 0.5 * lambda * s.eps +
         mu * s.e.cwiseAbs().sum() + real_inner(s.beta, fit) + real_inner(s.Gamma, gap) +
         0.5 * rho * fit.squaredNorm() + 0.5 * rho * gap.squaredNorm();
}

/// Partial gradients of the augmented Lagrangian with respect to g, z, eps
/// and U, w.r.t. the real inner product (so dL = Re(grad^H dx)). Assumes
/// Theta and Gamma are Hermitian.
struct LagrangianGradients {
  CVector g;
  CVector z;
  double eps = 0.0;
  BlockToeplitzCoeffs U;
};

inline LagrangianGradients lagrangian_gradients(const SolverState& s, const ReceivedData& d, double lambda,
                                                double rho) {
  const int M = s.M(), N = s.N();
  LagrangianGradients out;
  out.g = (1.0 + rho) * s.g + s.beta - rho * (d.r - s.e - d.s_hat.cwiseProduct(s.z));
  const CVector inner = d.s_hat.cwiseProduct(s.z) + s.g - d.r + s.e + s.beta / rho;
  out.z = rho * d.s_hat.conjugate().cwiseProduct(inner) + 2.0 * rho * (s.z - s.theta1()) - 2.0 * s.gamma();
  out.eps = lambda / 2.0 + rho * (s.eps - s.Theta_bar()) - s.Gamma_bar();

  // Sum of (rho Theta0 + Gamma0) over each (l, m) diagonal via T* times multiplicity.
  const BlockToeplitzCoeffs avg = t_star(CMatrix(rho * s.Theta0() + s.Gamma0()), M, N);
  out.U = BlockToeplitzCoeffs(M, N);
  for (int l = -(N - 1); l <= N - 1; ++l)
    for (int m = -(M - 1); m <= M - 1; ++m) {
      const double w = diagonal_multiplicity(M, N, l, m);
      out.U(l, m) = w * rho * s.U(l, m) - w * avg(l, m);
    }
  out.U(0, 0) += lambda / 2.0;
  return out;
}

namespace detail {

/// argmin_z of the sGS Lagrangian for fixed (e, g, Theta, beta, Gamma):
/// (S^H S + 2I) z = S^H (r - g - e - beta/rho) + 2 theta1 + 2 gamma/rho, diagonal.
inline CVector solve_z(const SolverState& s, const ReceivedData& d, const CVector& theta1, const CVector& gamma,
                       double rho) {
  const CVector rhs =
      d.s_hat.conjugate().cwiseProduct(d.r - s.g - s.e - s.beta / rho) + 2.0 * theta1 + (2.0 / rho) * gamma;
  return rhs.cwiseQuotient((d.s_hat.cwiseAbs2().array() + 2.0).matrix().cast<cplx>());
}

inline double solve_eps(double theta_bar, double gamma_bar, double lambda, double rho) {
  return gamma_bar / rho + theta_bar - lambda / (2.0 * rho);
}

inline BlockToeplitzCoeffs solve_U(const CMatrix& theta0, const CMatrix& gamma0, int M, int N, double lambda,
                                   double rho) {
  BlockToeplitzCoeffs U = t_star(theta0 + gamma0 / rho, M, N);
  U(0, 0) -= lambda / (2.0 * M * N * rho);
  return U;
}

}  // namespace detail

/// Step 1: g~ -> e -> g with z and beta held at their incoming values.
inline void step1_eg(SolverState& s, const ReceivedData& d, const IterationConstants& c) {
  const double rho = c.rho;
  const CVector sz = d.s_hat.cwiseProduct(s.z);
  const CVector g_tilde = rho / (1.0 + rho) * (d.r - s.e - sz) - s.beta / (1.0 + rho);
  s.e = soft_threshold(d.r - g_tilde - sz - s.beta / rho, c.mu / rho);
  s.g = rho / (1.0 + rho) * (d.r - s.e - sz) - s.beta / (1.0 + rho);
}

/// Step 2: z~ -> eps~ -> U~ -> Theta -> U -> eps -> z, multipliers fixed.
inline void step2_zeUTheta(SolverState& s, const ReceivedData& d, const IterationConstants& c) {
  const int M = s.M(), N = s.N();
  const double rho = c.rho;
  const CVector gamma = s.gamma();
  const CMatrix gamma0 = s.Gamma0();
  const double gamma_bar = s.Gamma_bar();

  const CVector z_tilde = detail::solve_z(s, d, s.theta1(), gamma, rho);
  const double eps_tilde = detail::solve_eps(s.Theta_bar(), gamma_bar, c.lambda, rho);
  const BlockToeplitzCoeffs U_tilde = detail::solve_U(s.Theta0(), gamma0, M, N, c.lambda, rho);

  s.Theta = psd_project(coupling_matrix(U_tilde, z_tilde, eps_tilde) - s.Gamma / rho);

  s.U = detail::solve_U(s.Theta0(), gamma0, M, N, c.lambda, rho);
  s.eps = detail::solve_eps(s.Theta_bar(), gamma_bar, c.lambda, rho);
  s.z = detail::solve_z(s, d, s.theta1(), gamma, rho);
}

/// beta += varrho rho (g - r + e + S z);  Gamma += varrho rho (Theta - [[T(U), z], [z^H, eps]]).
inline void update_multipliers(SolverState& s, const ReceivedData& d, const IterationConstants& c) {
  if (!(c.varrho > 0.0 && c.varrho < kGoldenRatio))
    throw std::invalid_argument("update_multipliers: varrho must lie in (0, (1+sqrt 5)/2)");
  const double step = c.varrho * c.rho;
  s.beta += step * (s.g - d.r + s.e + d.s_hat.cwiseProduct(s.z));
  s.Gamma += step * (s.Theta - coupling_matrix(s));
}

inline void sgs_admm_iteration(SolverState& s, const ReceivedData& d, const IterationConstants& c) {
  step1_eg(s, d, c);
  step2_zeUTheta(s, d, c);
  update_multipliers(s, d, c);
}

/// One sweep of the directly-extended ADMM on the g-free splitting, in the
/// order z -> eps -> U -> e -> Theta, followed by the Gamma update. The data
/// term stays in the objective, so g and beta are not iterated; they are set
/// to the residual r - e - S z and its exact multiplier -g afterwards.
inline void admm_iteration(SolverState& s, const ReceivedData& d, const IterationConstants& c) {
  if (!(c.varrho > 0.0 && c.varrho < kGoldenRatio))
    throw std::invalid_argument("admm_iteration: varrho must lie in (0, (1+sqrt 5)/2)");
  const int M = s.M(), N = s.N();
  const double rho = c.rho;

  // z: (S^H S + 2 rho I) z = S^H (r - e) + 2 gamma + 2 rho theta1
  const CVector rhs = d.s_hat.conjugate().cwiseProduct(d.r - s.e) + 2.0 * s.gamma() + 2.0 * rho * s.theta1();
  s.z = rhs.cwiseQuotient((d.s_hat.cwiseAbs2().array() + 2.0 * rho).matrix().cast<cplx>());
  s.eps = detail::solve_eps(s.Theta_bar(), s.Gamma_bar(), c.lambda, rho);
  s.U = detail::solve_U(s.Theta0(), s.Gamma0(), M, N, c.lambda, rho);
  s.e = soft_threshold(d.r - d.s_hat.cwiseProduct(s.z), c.mu);
  s.Theta = psd_project(coupling_matrix(s) - s.Gamma / rho);
  s.Gamma += c.varrho * rho * (s.Theta - coupling_matrix(s));

  s.g = d.r - s.e - d.s_hat.cwiseProduct(s.z);
  s.beta = -s.g;
}

namespace detail {

using IterationFn = std::function<void(SolverState&, const ReceivedData&, const IterationConstants&)>;

inline Solution run_solver(const ReceivedData& d, const SolverParams& params, std::optional<SolverState> initial,
                           const IterationFn& iterate) {
  const IterationConstants c = resolve(params, d.size());
  Solution sol;
  sol.constants = c;
  sol.state = initial ? std::move(*initial) : SolverState::dual_start(d.M, d.N, c.lambda);
  check_dims(sol.state, d);

  const int cap = params.forced_steps ? *params.forced_steps : params.max_iter;
  const auto start = std::chrono::steady_clock::now();
  for (int k = 1; k <= cap; ++k) {
    try {
      iterate(sol.state, d, c);
    } catch (const NumericError& err) {
      sol.iterations = k;
      sol.status = SolveStatus::numeric_failure;
      sol.message = err.what();
      return sol;
    }
    sol.iterations = k;
    if (!sol.state.all_finite()) {
      sol.status = SolveStatus::numeric_failure;
      sol.message = "non-finite iterate at iteration " + std::to_string(k);
      return sol;
    }
    const bool last = k == cap;
    if (k % params.check_every != 0 && !last) continue;

    HistoryRecord rec;
    rec.iter = k;
    try {
      rec.kkt = kkt_residuals(sol.state, d, c.lambda, c.mu, params.kkt_form);
    } catch (const NumericError& err) {
      sol.status = SolveStatus::numeric_failure;
      sol.message = err.what();
      return sol;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    sol.history.push_back(rec);
    if (!std::isfinite(rec.kkt.eta_max)) {
      sol.status = SolveStatus::numeric_failure;
      sol.message = "non-finite KKT residual at iteration " + std::to_string(k);
      return sol;
    }
    const bool met = rec.kkt.eta_max <= params.tol;
    if (params.forced_steps) {
      if (last) sol.status = met ? SolveStatus::converged : SolveStatus::max_iter;
    } else if (met) {
      sol.status = SolveStatus::converged;
      return sol;
    }
  }
  if (!params.forced_steps) sol.status = SolveStatus::max_iter;
  return sol;
}

}  // namespace detail

/// sGS-ADMM. Default start: zero primal point with the dual certificate of
/// the zero solution (see SolverState::dual_start).
inline Solution sgs_admm_solve(const ReceivedData& d, const SolverParams& params,
                               std::optional<SolverState> initial = std::nullopt) {
  return detail::run_solver(d, params, std::move(initial), sgs_admm_iteration);
}

inline Solution admm_solve(const ReceivedData& d, const SolverParams& params,
                           std::optional<SolverState> initial = std::nullopt) {
  return detail::run_solver(d, params, std::move(initial), admm_iteration);
}

inline Solution solve(Algorithm alg, const ReceivedData& d, const SolverParams& params,
                      std::optional<SolverState> initial = std::nullopt) {
  return alg == Algorithm::sgs_admm ? sgs_admm_solve(d, params, std::move(initial))
                                    : admm_solve(d, params, std::move(initial));
}

}  // namespace anm
