#pragma once

// Synthetic OFDM passive-radar returns.
//
// Received model on the M x N (block x subcarrier) grid:
//   r_m(n) = s_m(n) z_m(n) + v_m(n),  z_m(n) = sum_k alpha_k e^{i(2 pi m phi_k - 2 pi n psi_k)}
// with vectorization index n*M + m. The receiver only knows the demodulated
// symbols s_hat; the mismatch e = (s - s_hat) z is the sparse demodulation error.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anm/types.hpp"

namespace anm {

using Rng = std::mt19937_64;

struct OfdmConfig {
  int M = 8;             // blocks
  int N = 8;             // subcarriers per block
  double T = 200e-6;     // symbol window (s)
  double T_cp = 100e-6;  // cyclic prefix (s)
  double f_c = 2e9;      // carrier (Hz)

  double delta_f() const { return 1.0 / T; }
  double T_bar() const { return T + T_cp; }
  int size() const { return M * N; }

  void validate() const {
    if (M < 1 || N < 1) throw std::invalid_argument("OfdmConfig: M and N must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("OfdmConfig: T must be > 0");
    if (!(T_cp >= 0.0)) throw std::invalid_argument("OfdmConfig: T_cp must be >= 0");
    if (!(f_c > 0.0)) throw std::invalid_argument("OfdmConfig: f_c must be > 0");
  }
};

struct PathParams {
  double tau = 0.0;  // delay (s)
  double f = 0.0;    // Doppler (Hz)
  cplx A = 0.0;      // complex attenuation
  PathClass cls = PathClass::target;
};

struct NormalizedPath {
  double phi = 0.0;  // normalized Doppler in [0, 1)
  double psi = 0.0;  // normalized delay in [0, 1)
  cplx alpha = 0.0;
  PathClass cls = PathClass::target;
};

struct Scene {
  std::vector<PathParams> paths;
  std::uint64_t rng_seed = 0;
  double noise_sigma = 0.0;
  double ber = 0.0;

  void validate() const {
    if (!(ber >= 0.0 && ber <= 0.5)) throw std::invalid_argument("Scene: ber must lie in [0, 0.5]");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("Scene: noise_sigma must be >= 0");
    for (const auto& p : paths) {
      if (!(p.tau >= 0.0)) throw std::invalid_argument("Scene: path delay must be >= 0");
      if (p.cls == PathClass::direct && p.tau != 0.0)
        throw std::invalid_argument("Scene: direct path must have zero delay");
    }
  }
};

struct GroundTruth {
  CVector z;
  CVector e;
  std::vector<NormalizedPath> paths;
};

struct ReceivedData {
  CVector r;
  CVector s_hat;
  int M = 0;
  int N = 0;
  std::optional<GroundTruth> truth;

  int size() const { return M * N; }
};

// ---------------------------------------------------------------------------
// Symbols

/// Gray-coded QPSK: 00 -> (1+i), 01 -> (-1+i), 11 -> (-1-i), 10 -> (1-i), all / sqrt(2).
inline CVector qpsk_modulate(std::span<const std::uint8_t> bits, int count) {
  if (count < 0 || bits.size() != static_cast<std::size_t>(2 * count))
    throw std::invalid_argument("qpsk_modulate: expected " + std::to_string(2 * count) + " bits, got " +
                                std::to_string(bits.size()));
  const double a = 1.0 / std::sqrt(2.0);
  CVector out(count);
  for (int k = 0; k < count; ++k) {
    const bool b0 = bits[2 * k] != 0;
    const bool b1 = bits[2 * k + 1] != 0;
    const double re = b0 == b1 ? (b0 ? -a : a) : (b0 ? a : -a);
    const double im = b0 ? -a : a;
    out(k) = cplx(re, im);
  }
  return out;
}

inline std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = coin(rng) ? 1 : 0;
  return out;
}

/// Flips each bit independently with probability ber.
inline std::vector<std::uint8_t> corrupt_bits(std::span<const std::uint8_t> bits, double ber, Rng& rng) {
  if (!(ber >= 0.0 && ber <= 0.5)) throw std::invalid_argument("corrupt_bits: ber must lie in [0, 0.5]");
  std::vector<std::uint8_t> out(bits.begin(), bits.end());
  if (ber == 0.0) return out;
  std::bernoulli_distribution flip(ber);
  for (auto& b : out)
    if (flip(rng)) b ^= 1;
  return out;
}

// ---------------------------------------------------------------------------
// Atoms and responses

/// a(phi, psi) = conj(g(psi)) kron b(phi); entry n*M + m is e^{i2pi m phi} e^{-i2pi n psi}.
inline CVector steering_atom(double phi, double psi, int M, int N) {
  if (!(phi >= 0.0 && phi < 1.0 && psi >= 0.0 && psi < 1.0))
    throw std::invalid_argument("steering_atom: phi and psi must lie in [0, 1)");
  CVector out(M * N);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      // Reduce the phase argument before scaling by 2pi to keep it small.
      const double turns = wrap_unit(m * phi - n * psi);
      out(n * M + m) = std::polar(1.0, 2.0 * kPi * turns);
    }
  }
  return out;
}

inline CVector synthesize_response(const std::vector<NormalizedPath>& paths, int M, int N) {
  CVector z = CVector::Zero(M * N);
  for (const auto& p : paths) z += p.alpha * steering_atom(p.phi, p.psi, M, N);
  return z;
}

inline NormalizedPath physical_to_normalized(const PathParams& path, const OfdmConfig& cfg) {
  return {wrap_unit(path.f * cfg.T_bar()), wrap_unit(cfg.delta_f() * path.tau), path.A * cfg.T, path.cls};
}

/// Inverse of physical_to_normalized, taking phi in its signed branch
/// (-1/2, 1/2] and psi as a delay in [0, 1) resolution cells.
inline PathParams normalized_to_physical(const NormalizedPath& path, const OfdmConfig& cfg) {
  PathParams p;
  p.tau = wrap_unit(path.psi) / cfg.delta_f();
  p.f = signed_frequency(path.phi) / cfg.T_bar();
  p.A = path.alpha / cfg.T;
  p.cls = path.cls;
  return p;
}

inline std::vector<NormalizedPath> normalize_paths(const Scene& scene, const OfdmConfig& cfg) {
  std::vector<NormalizedPath> out;
  out.reserve(scene.paths.size());
  for (const auto& p : scene.paths) out.push_back(physical_to_normalized(p, cfg));
  return out;
}

/// Draws true symbols, demodulates them at the scene's BER, adds noise, and
/// returns r = vec(S .* Z + V) together with the estimated symbols.
inline ReceivedData synthesize_received(const Scene& scene, const OfdmConfig& cfg) {
  cfg.validate();
  scene.validate();
  const int mn = cfg.size();
  Rng rng(scene.rng_seed);

  const auto bits = random_bits(2 * static_cast<std::size_t>(mn), rng);
  const auto demod_bits = corrupt_bits(bits, scene.ber, rng);
  const CVector s = qpsk_modulate(bits, mn);
  const CVector s_hat = qpsk_modulate(demod_bits, mn);

  GroundTruth truth;
  truth.paths = normalize_paths(scene, cfg);
  truth.z = synthesize_response(truth.paths, cfg.M, cfg.N);

  CVector v = CVector::Zero(mn);
  if (scene.noise_sigma > 0.0) {
    // Per-entry variance sigma^2 split evenly between real and imaginary parts.
    std::normal_distribution<double> gauss(0.0, scene.noise_sigma / std::sqrt(2.0));
    for (int i = 0; i < mn; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v(i) = cplx(re, im);
    }
  }

  ReceivedData data;
  data.M = cfg.M;
  data.N = cfg.N;
  data.r = s.cwiseProduct(truth.z) + v;
  data.s_hat = s_hat;
  truth.e = (s - s_hat).cwiseProduct(truth.z);
  data.truth = std::move(truth);
  return data;
}

/// sigma giving SNR = ||z||^2 / (MN sigma^2) at the requested level.
inline double noise_sigma_for_snr(const CVector& z, double snr_db) {
  const double power = z.squaredNorm() / static_cast<double>(z.size());
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

// ---------------------------------------------------------------------------
// Random scenes

struct SceneRanges {
  double range_min = 0.0;  // m
  double range_max = 30e3;
  double target_speed_min = -148.0;  // m/s
  double target_speed_max = 148.0;
  double clutter_speed_min = -3.0;
  double clutter_speed_max = 3.0;
  // Magnitude intervals for the normalized amplitude alpha = A T.
  double target_amp_min = 0.5;
  double target_amp_max = 1.5;
  double clutter_amp_min = 0.5;
  double clutter_amp_max = 1.5;
  double direct_amp_factor = 10.0;  // direct |alpha| relative to the largest target
  bool include_direct = true;
  // Minimum wrapped distance, in both phi and psi, between any two targets
  // (and between a target and the direct path).
  double min_target_separation = 1e-6;
  int max_retries = 1000;
};

/// Monostatic conversions: tau = 2R/c, f = 2 v f_c / c.
inline double range_to_delay(double range_m) { return 2.0 * range_m / kSpeedOfLight; }
inline double speed_to_doppler(double v, double f_c) { return 2.0 * v * f_c / kSpeedOfLight; }
inline double delay_to_range(double tau) { return 0.5 * tau * kSpeedOfLight; }
inline double doppler_to_speed(double f, double f_c) { return 0.5 * f * kSpeedOfLight / f_c; }

namespace detail {

inline cplx draw_amplitude(double lo, double hi, double T, Rng& rng) {
  if (!(lo > 0.0 && hi >= lo)) throw std::invalid_argument("scene_random: amplitude interval must satisfy 0 < lo <= hi");
  std::uniform_real_distribution<double> log_mag(std::log(lo), std::log(hi));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double mag = std::exp(log_mag(rng));
  const double ph = phase(rng);
  return std::polar(mag / T, ph);
}

inline double draw_uniform(double lo, double hi, Rng& rng) {
  if (hi < lo) throw std::invalid_argument("scene_random: interval with hi < lo");
  if (hi == lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace detail

/// One direct path (optional), n_clutter clutter paths and n_targets target
/// paths with random range, speed, and amplitude.
inline Scene scene_random(int n_targets, int n_clutter, const SceneRanges& ranges, const OfdmConfig& cfg, Rng& rng) {
  if (n_targets < 0 || n_clutter < 0) throw std::invalid_argument("scene_random: counts must be >= 0");
  cfg.validate();
  Scene scene;
  std::vector<NormalizedPath> placed;  // targets and direct path, for separation checks

  auto collides = [&](const NormalizedPath& cand) {
    for (const auto& p : placed) {
      if (wrapped_distance(cand.phi, p.phi) < ranges.min_target_separation ||
          wrapped_distance(cand.psi, p.psi) < ranges.min_target_separation)
        return true;
    }
    return false;
  };

  std::vector<PathParams> targets;
  double max_target_amp = 0.0;
  for (int k = 0; k < n_targets; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < ranges.max_retries && !ok; ++attempt) {
      PathParams p;
      p.cls = PathClass::target;
      p.tau = range_to_delay(detail::draw_uniform(ranges.range_min, ranges.range_max, rng));
      p.f = speed_to_doppler(detail::draw_uniform(ranges.target_speed_min, ranges.target_speed_max, rng), cfg.f_c);
      p.A = detail::draw_amplitude(ranges.target_amp_min, ranges.target_amp_max, cfg.T, rng);
      const NormalizedPath np = physical_to_normalized(p, cfg);
      const NormalizedPath direct{0.0, 0.0, 0.0, PathClass::direct};
      const bool near_direct = ranges.include_direct &&
                               (wrapped_distance(np.phi, direct.phi) < ranges.min_target_separation ||
                                wrapped_distance(np.psi, direct.psi) < ranges.min_target_separation);
      if (near_direct || collides(np)) continue;
      placed.push_back(np);
      targets.push_back(p);
      max_target_amp = std::max(max_target_amp, std::abs(p.A));
      ok = true;
    }
    if (!ok)
      throw std::runtime_error("scene_random: could not place target " + std::to_string(k) + " after " +
                               std::to_string(ranges.max_retries) + " attempts");
  }

  if (ranges.include_direct) {
    PathParams d;
    d.cls = PathClass::direct;
    const double base = n_targets > 0 ? max_target_amp : ranges.target_amp_max / cfg.T;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    d.A = std::polar(ranges.direct_amp_factor * base, phase(rng));
    scene.paths.push_back(d);
  }
  for (int k = 0; k < n_clutter; ++k) {
    PathParams p;
    p.cls = PathClass::clutter;
    p.tau = range_to_delay(detail::draw_uniform(ranges.range_min, ranges.range_max, rng));
    p.f = speed_to_doppler(detail::draw_uniform(ranges.clutter_speed_min, ranges.clutter_speed_max, rng), cfg.f_c);
    p.A = detail::draw_amplitude(ranges.clutter_amp_min, ranges.clutter_amp_max, cfg.T, rng);
    scene.paths.push_back(p);
  }
  for (auto& t : targets) scene.paths.push_back(t);
  return scene;
}

}  // namespace anm
