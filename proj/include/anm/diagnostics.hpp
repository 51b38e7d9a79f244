#pragma once

// Relative KKT residuals used as the stopping rule, plus estimate scoring.

#include <algorithm>
#include <vector>

#include "anm/proxops.hpp"
#include "anm/report.hpp"
#include "anm/scene.hpp"
#include "anm/state.hpp"
#include "anm/toeplitz.hpp"

namespace anm {

struct KktReport {
  double eta1 = 0.0;  // z-stationarity with the data-fit multiplier eliminated
  double eta2 = 0.0;  // e-stationarity (l1 prox fixed point)
  double eta3 = 0.0;  // Theta complementarity (PSD projection fixed point)
  double eta4 = 0.0;  // eps-stationarity
  double eta5 = 0.0;  // U-stationarity
  double eta6 = 0.0;  // coupling feasibility
  double eta_max = 0.0;
  double objective = 0.0;
};

/// 1/2 ||r - e - S z||^2 + lambda/(2MN) Tr T(U) + lambda eps / 2 + mu ||e||_1.
inline double objective(const SolverState& s, const ReceivedData& d, double lambda, double mu) {
  const double mn = static_cast<double>(s.size());
  const CVector resid = d.r - s.e - d.s_hat.cwiseProduct(s.z);
  const double trace = mn * s.U(0, 0).real();
  return 0.5 * resid.squaredNorm() + lambda / (2.0 * mn) * trace + 0.5 * lambda * s.eps + mu * s.e.cwiseAbs().sum();
}

inline KktReport kkt_residuals(const SolverState& s, const ReceivedData& d, double lambda, double mu,
                               KktForm form = KktForm::consistent) {
  const int mn = s.size();
  const CVector gamma = s.gamma();
  KktReport k;

  if (form == KktForm::verbatim) {
    k.eta1 = (s.z - d.r + s.e - 2.0 * gamma).norm() / (1.0 + s.z.norm() + 2.0 * gamma.norm());
    k.eta2 = (s.e - soft_threshold(s.e - s.z, mu)).norm() / (1.0 + s.e.norm() + (d.r - s.e - s.z).norm());
  } else {
    const CVector sz = d.s_hat.cwiseProduct(s.z);
    const CVector fit = sz - d.r + s.e;
    k.eta1 = (d.s_hat.conjugate().cwiseProduct(fit) - 2.0 * gamma).norm() /
             (1.0 + s.z.norm() + 2.0 * gamma.norm());
    k.eta2 = (s.e - soft_threshold(d.r - sz, mu)).norm() / (1.0 + s.e.norm() + (d.r - s.e - sz).norm());
  }

  k.eta3 = (s.Theta - psd_project(s.Theta - s.Gamma)).norm() / (1.0 + s.Theta.norm() + s.Gamma.norm());

  const double gbar = s.Gamma_bar();
  k.eta4 = std::abs(lambda / 2.0 - gbar) / (1.0 + std::abs(s.eps) + std::abs(gbar));

  const BlockToeplitzCoeffs tg = t_star(CMatrix(s.Gamma0()), s.M(), s.N());
  BlockToeplitzCoeffs dev = tg;
  dev(0, 0) -= lambda / (2.0 * mn);
  k.eta5 = dev.norm() / (1.0 + s.U.norm() + tg.norm());

  k.eta6 = (s.Theta - coupling_matrix(s)).norm();

  k.eta_max = std::max({k.eta1, k.eta2, k.eta3, k.eta4, k.eta5, k.eta6});
  k.objective = objective(s, d, lambda, mu);
  return k;
}

// ---------------------------------------------------------------------------
// Scoring

struct MatchTable {
  int true_positives = 0;
  int misses = 0;
  int ghosts = 0;
  std::vector<std::pair<int, int>> matches;  // (estimate index, truth index)
};

/// Greedy nearest matching on the wrapped (phi, psi) torus; a pair is
/// admissible when both per-axis distances are within tolerance.
inline MatchTable score_estimates(const std::vector<Peak>& estimates, const std::vector<NormalizedPath>& truth,
                                  double tol_phi, double tol_psi) {
  struct Candidate {
    double dist;
    int est;
    int tru;
  };
  std::vector<Candidate> cands;
  for (int i = 0; i < static_cast<int>(estimates.size()); ++i) {
    for (int j = 0; j < static_cast<int>(truth.size()); ++j) {
      const double dphi = wrapped_distance(estimates[i].phi, truth[j].phi);
      const double dpsi = wrapped_distance(estimates[i].psi, truth[j].psi);
      if (dphi <= tol_phi && dpsi <= tol_psi) cands.push_back({std::hypot(dphi, dpsi), i, j});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });

  std::vector<bool> est_used(estimates.size(), false), tru_used(truth.size(), false);
  MatchTable t;
  for (const auto& c : cands) {
    if (est_used[c.est] || tru_used[c.tru]) continue;
    est_used[c.est] = tru_used[c.tru] = true;
    t.matches.emplace_back(c.est, c.tru);
  }
  t.true_positives = static_cast<int>(t.matches.size());
  t.misses = static_cast<int>(truth.size()) - t.true_positives;
  t.ghosts = static_cast<int>(estimates.size()) - t.true_positives;
  return t;
}

}  // namespace anm
