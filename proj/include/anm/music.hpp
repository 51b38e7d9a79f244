#pragma once

// 2D MUSIC on the recovered block-Toeplitz covariance surrogate T(U),
// followed by least-squares amplitude fitting and path classification.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "anm/proxops.hpp"
#include "anm/report.hpp"
#include "anm/scene.hpp"
#include "anm/toeplitz.hpp"

namespace anm {

struct MusicParams {
  int grid_phi = 256;
  int grid_psi = 256;
  double rank_ratio = 1e-2;
  int k_max = 0;  // 0 selects 2 * expected path count
  double v_min = 5.0;  // m/s
  // Normalized delay below which a slow path counts as direct. Negative
  // selects half a delay resolution cell, 0.5 / N.
  double psi_direct = -1.0;
  // Leading eigenvalue at or below this counts as a zero covariance.
  double zero_floor = 1e-12;

  void validate() const {
    if (grid_phi < 16 || grid_psi < 16) throw std::invalid_argument("MusicParams: grid sizes must be >= 16");
    if (!(rank_ratio > 0.0 && rank_ratio < 1.0)) throw std::invalid_argument("MusicParams: rank_ratio must lie in (0,1)");
    if (k_max < 0) throw std::invalid_argument("MusicParams: k_max must be >= 0");
    if (!(v_min >= 0.0)) throw std::invalid_argument("MusicParams: v_min must be >= 0");
    if (!(zero_floor >= 0.0)) throw std::invalid_argument("MusicParams: zero_floor must be >= 0");
  }

  double psi_direct_for(int N) const { return psi_direct < 0.0 ? 0.5 / N : psi_direct; }

  /// Model-order cap; without an expected count, half the sample count.
  int k_max_for(int k_expected, int mn) const {
    if (k_max > 0) return k_max;
    return k_expected > 0 ? 2 * k_expected : std::max(1, mn / 2);
  }
};

/// Smallest k with zeta_{k+1} < ratio * zeta_1, capped at k_max.
inline int estimate_rank(const RVector& desc, double rank_ratio, int k_max) {
  if (desc.size() == 0 || !(desc(0) > 0.0)) return 0;
  const double floor = rank_ratio * desc(0);
  int k = static_cast<int>(desc.size());
  for (Eigen::Index i = 1; i < desc.size(); ++i) {
    if (desc(i) < floor) {
      k = static_cast<int>(i);
      break;
    }
  }
  return std::min(k, k_max);
}

/// Pseudo-spectrum 1 / ||E_n^H a(phi, psi)||^2 with E_n the noise subspace of
/// the Hermitian part of T(U). Throws DegenerateEstimate when the model order
/// is 0 or leaves no noise subspace.
inline Spectrum music_spectrum(const BlockToeplitzCoeffs& U_hat, const MusicParams& params, int k_expected = 0) {
  params.validate();
  const int M = U_hat.M(), N = U_hat.N(), mn = M * N;
  const CMatrix T = t_apply(U_hat);
  const EigPair eig = hermitian_eig(0.5 * (T + T.adjoint()));

  Spectrum sp;
  sp.grid_phi = params.grid_phi;
  sp.grid_psi = params.grid_psi;
  sp.eigenvalues = eig.values.reverse().cwiseMax(0.0);
  sp.k_hat = sp.eigenvalues(0) <= params.zero_floor
                 ? 0
                 : estimate_rank(sp.eigenvalues, params.rank_ratio, params.k_max_for(k_expected, mn));
  if (sp.k_hat == 0)
    throw DegenerateEstimate("music_spectrum: estimated model order is 0 (recovered covariance is zero)");
  if (sp.k_hat >= mn)
    throw DegenerateEstimate("music_spectrum: model order " + std::to_string(sp.k_hat) +
                             " leaves no noise subspace; raise rank_ratio or lower k_max");

  // ||E_n^H a||^2 = ||a||^2 - ||E_s^H a||^2, E_s = leading k_hat eigenvectors.
  const CMatrix Es = eig.vectors.rightCols(sp.k_hat);
  const CMatrix EsH = Es.adjoint();
  sp.values.assign(static_cast<std::size_t>(sp.grid_phi) * sp.grid_psi, 0.0);
  const double floor = 1e-14 * mn;
  CVector a(mn);
  for (int ip = 0; ip < sp.grid_phi; ++ip) {
    const double phi = sp.phi(ip);
    for (int iq = 0; iq < sp.grid_psi; ++iq) {
      const double psi = sp.psi(iq);
      for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) a(n * M + m) = std::polar(1.0, 2.0 * kPi * wrap_unit(m * phi - n * psi));
      const double proj = (EsH * a).squaredNorm();
      const double resid = std::max(static_cast<double>(mn) - proj, floor);
      sp.values[static_cast<std::size_t>(ip) * sp.grid_psi + iq] = 1.0 / resid;
    }
  }
  return sp;
}

struct PeakPick {
  std::vector<Peak> peaks;
  int shortfall = 0;
};

/// Strict local maxima over the periodic 8-neighbourhood, strongest k_hat
/// kept, each refined by a parabolic fit of log-values along each axis.
inline PeakPick pick_peaks(const Spectrum& sp, int k_hat) {
  const int P = sp.grid_phi, Q = sp.grid_psi;
  auto at = [&](int i, int j) { return sp.at(((i % P) + P) % P, ((j % Q) + Q) % Q); };

  std::vector<Peak> cands;
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < Q; ++j) {
      const double v = at(i, j);
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di)
        for (int dj = -1; dj <= 1 && is_max; ++dj)
          if ((di != 0 || dj != 0) && !(v > at(i + di, j + dj))) is_max = false;
      if (!is_max) continue;

      auto refine = [](double lo, double mid, double hi) {
        const double a = std::log(lo), b = std::log(mid), c = std::log(hi);
        const double den = a - 2.0 * b + c;
        if (!(den < 0.0)) return 0.0;
        return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
      };
      Peak p;
      p.value = v;
      p.phi = wrap_unit((i + refine(at(i - 1, j), v, at(i + 1, j))) / P);
      p.psi = wrap_unit((j + refine(at(i, j - 1), v, at(i, j + 1))) / Q);
      cands.push_back(p);
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Peak& a, const Peak& b) { return a.value > b.value; });
  PeakPick out;
  const int keep = std::min<int>(k_hat, static_cast<int>(cands.size()));
  out.peaks.assign(cands.begin(), cands.begin() + keep);
  out.shortfall = std::max(0, k_hat - keep);
  return out;
}

struct AmplitudeFit {
  CVector alpha;
  bool ill_conditioned = false;  // ridge was needed to regularize the normal equations
};

/// min_alpha ||target - sum_k alpha_k a(phi_k, psi_k)|| via ridge-regularized
/// normal equations (ridge 1e-10).
inline AmplitudeFit fit_amplitudes(const CVector& target, const std::vector<Peak>& peaks, int M, int N) {
  const int K = static_cast<int>(peaks.size());
  if (target.size() != M * N) throw std::invalid_argument("fit_amplitudes: target must have length MN");
  if (K > M * N) throw std::invalid_argument("fit_amplitudes: more peaks than samples");
  AmplitudeFit fit;
  if (K == 0) {
    fit.alpha = CVector(0);
    return fit;
  }
  CMatrix A(M * N, K);
  for (int k = 0; k < K; ++k) A.col(k) = steering_atom(wrap_unit(peaks[k].phi), wrap_unit(peaks[k].psi), M, N);
  CMatrix gram = A.adjoint() * A;
  const double ridge = 1e-10;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<CMatrix> ldlt(gram);
  fit.alpha = ldlt.solve(A.adjoint() * target);
  const RVector d = ldlt.vectorD().real().cwiseAbs();
  fit.ill_conditioned = d.minCoeff() < 1e-8 * d.maxCoeff();
  return fit;
}

/// Delay and speed of a peak under the monostatic convention.
inline double peak_range(const Peak& p, const OfdmConfig& cfg) { return delay_to_range(p.psi / cfg.delta_f()); }
inline double peak_speed(const Peak& p, const OfdmConfig& cfg) {
  return doppler_to_speed(signed_frequency(p.phi) / cfg.T_bar(), cfg.f_c);
}

/// direct: near-zero delay and slow; clutter: slow; target: otherwise.
inline std::vector<Peak> classify_paths(std::vector<Peak> peaks, const OfdmConfig& cfg, const MusicParams& params) {
  const double psi_direct = params.psi_direct_for(cfg.N);
  for (auto& p : peaks) {
    const double speed = std::fabs(peak_speed(p, cfg));
    // Delay is measured to zero around the wrap so 0.999 counts as near zero.
    const double delay = wrapped_distance(p.psi, 0.0);
    if (speed < params.v_min)
      p.cls = delay <= psi_direct ? PathClass::direct : PathClass::clutter;
    else
      p.cls = PathClass::target;
  }
  return peaks;
}

/// Spectrum -> peaks -> amplitudes (fit against `fit_target`) -> classes.
inline EstimateReport estimate_paths(const BlockToeplitzCoeffs& U_hat, const CVector& fit_target,
                                     const OfdmConfig& cfg, const MusicParams& params, int k_expected = 0,
                                     bool keep_spectrum = false) {
  Spectrum sp = music_spectrum(U_hat, params, k_expected);
  PeakPick pick = pick_peaks(sp, sp.k_hat);
  const AmplitudeFit fit = fit_amplitudes(fit_target, pick.peaks, cfg.M, cfg.N);
  for (std::size_t k = 0; k < pick.peaks.size(); ++k) pick.peaks[k].alpha = fit.alpha(static_cast<Eigen::Index>(k));

  EstimateReport rep;
  rep.peaks = classify_paths(std::move(pick.peaks), cfg, params);
  rep.k_hat = static_cast<int>(rep.peaks.size());
  rep.shortfall = pick.shortfall;
  rep.ill_conditioned = fit.ill_conditioned;
  if (keep_spectrum) rep.spectrum = std::move(sp);
  return rep;
}

/// S^H (r - e): the observation with demodulation errors and symbols removed.
/// Unlike the solver's z it carries no regularization shrinkage, so it is the
/// default amplitude-fit target.
inline CVector debiased_response(const ReceivedData& d, const CVector& e_hat) {
  const CVector inv = d.s_hat.cwiseInverse();
  return inv.cwiseProduct(d.r - e_hat);
}

}  // namespace anm
