#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "anm/toeplitz.hpp"
#include "anm/types.hpp"

namespace anm {

/// Which form of the stationarity residuals eta1/eta2 to evaluate.
///  - consistent: includes the symbol matrix S and uses r - S z inside the
///    l1 prox, so both vanish at every KKT point.
///  - verbatim: the simplified printed form (no S, prox argument e - z).
///    It only vanishes at trivial optima; kept for comparison runs.
enum class KktForm { consistent, verbatim };

struct SolverParams {
  double rho = 0.3;
  double varrho = 1.618;
  double sigma_reg = 0.1;
  // When unset, lambda = sigma_reg * sqrt(MN log MN) and mu = lambda / sqrt(MN).
  std::optional<double> lambda;
  std::optional<double> mu;
  double tol = 1e-4;
  int max_iter = 2000;
  int check_every = 1;
  // Fixed-iteration mode: run exactly this many iterations, ignoring tol.
  std::optional<int> forced_steps;
  KktForm kkt_form = KktForm::consistent;

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("SolverParams: rho must be > 0");
    if (!(varrho > 0.0 && varrho < kGoldenRatio))
      throw std::invalid_argument("SolverParams: varrho must lie in (0, (1+sqrt 5)/2)");
    if (!(sigma_reg >= 0.0)) throw std::invalid_argument("SolverParams: sigma_reg must be >= 0");
    if (lambda && !(*lambda >= 0.0)) throw std::invalid_argument("SolverParams: lambda must be >= 0");
    if (mu && !(*mu >= 0.0)) throw std::invalid_argument("SolverParams: mu must be >= 0");
    if (!(tol >= 0.0)) throw std::invalid_argument("SolverParams: tol must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("SolverParams: max_iter must be >= 1");
    if (check_every < 1) throw std::invalid_argument("SolverParams: check_every must be >= 1");
    if (forced_steps && *forced_steps < 1) throw std::invalid_argument("SolverParams: forced_steps must be >= 1");
  }
};

/// The scalars one iteration needs, resolved for a given problem size.
struct IterationConstants {
  double rho = 0.3;
  double varrho = 1.618;
  double lambda = 0.0;
  double mu = 0.0;
};

inline double default_lambda(double sigma_reg, int mn) {
  const double n = static_cast<double>(mn);
  return sigma_reg * std::sqrt(n * std::log(n));
}

inline IterationConstants resolve(const SolverParams& p, int mn) {
  p.validate();
  IterationConstants c;
  c.rho = p.rho;
  c.varrho = p.varrho;
  c.lambda = p.lambda ? *p.lambda : default_lambda(p.sigma_reg, mn);
  c.mu = p.mu ? *p.mu : c.lambda / std::sqrt(static_cast<double>(mn));
  return c;
}

/// Primal iterates (e, g, z, eps, U, Theta) and multipliers (beta, Gamma).
/// Theta and Gamma are (MN+1) x (MN+1), partitioned as
/// [[Theta0, theta1], [theta1^H, Theta_bar]].
struct SolverState {
  CVector e, g, z;
  double eps = 0.0;
  BlockToeplitzCoeffs U;
  CMatrix Theta;
  CVector beta;
  CMatrix Gamma;

  int M() const { return U.M(); }
  int N() const { return U.N(); }
  int size() const { return U.M() * U.N(); }

  static SolverState zeros(int M, int N) {
    const int mn = M * N;
    SolverState s;
    s.e = CVector::Zero(mn);
    s.g = CVector::Zero(mn);
    s.z = CVector::Zero(mn);
    s.eps = 0.0;
    s.U = BlockToeplitzCoeffs(M, N);
    s.Theta = CMatrix::Zero(mn + 1, mn + 1);
    s.beta = CVector::Zero(mn);
    s.Gamma = CMatrix::Zero(mn + 1, mn + 1);
    return s;
  }

  /// Zero primal point with Gamma = diag(lambda/(2MN) I, lambda/2), the dual
  /// certificate of the zero solution when r = 0.
  static SolverState dual_start(int M, int N, double lambda) {
    SolverState s = zeros(M, N);
    const int mn = M * N;
    for (int i = 0; i < mn; ++i) s.Gamma(i, i) = lambda / (2.0 * mn);
    s.Gamma(mn, mn) = lambda / 2.0;
    return s;
  }

  auto Theta0() const { return Theta.topLeftCorner(size(), size()); }
  auto theta1() const { return Theta.col(size()).head(size()); }
  double Theta_bar() const { return Theta(size(), size()).real(); }
  auto Gamma0() const { return Gamma.topLeftCorner(size(), size()); }
  auto gamma() const { return Gamma.col(size()).head(size()); }
  double Gamma_bar() const { return Gamma(size(), size()).real(); }

  bool all_finite() const {
    return e.allFinite() && g.allFinite() && z.allFinite() && std::isfinite(eps) && U.raw().allFinite() &&
           Theta.allFinite() && beta.allFinite() && Gamma.allFinite();
  }
};

/// [[T(U), z], [z^H, eps]].
inline CMatrix coupling_matrix(const BlockToeplitzCoeffs& U, const CVector& z, double eps) {
  const int mn = U.M() * U.N();
  CMatrix out(mn + 1, mn + 1);
  out.topLeftCorner(mn, mn) = t_apply(U);
  out.col(mn).head(mn) = z;
  out.row(mn).head(mn) = z.adjoint();
  out(mn, mn) = eps;
  return out;
}

inline CMatrix coupling_matrix(const SolverState& s) { return coupling_matrix(s.U, s.z, s.eps); }

}  // namespace anm
