#include <gtest/gtest.h>

#include "anm/scene.hpp"
#include "test_util.hpp"

using namespace anm;
using namespace anm::fixtures;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

std::vector<NormalizedPath> random_paths(int K, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NormalizedPath> out(K);
  for (auto& p : out) {
    p.phi = u(rng);
    p.psi = u(rng);
    p.alpha = cplx(u(rng) - 0.5, u(rng) - 0.5);
  }
  return out;
}

Scene small_scene(double ber, double sigma, std::uint64_t seed) {
  Scene s;
  s.rng_seed = seed;
  s.ber = ber;
  s.noise_sigma = sigma;
  s.paths.push_back({0.0, 0.0, cplx(2000.0, 0.0), PathClass::direct});
  s.paths.push_back({3e-5, 150.0, cplx(0.0, 5000.0), PathClass::target});
  s.paths.push_back({7e-5, -20.0, cplx(3000.0, 1000.0), PathClass::clutter});
  return s;
}
}  // namespace

TEST(Qpsk, GrayMapping) {
  const std::vector<std::uint8_t> bits{0, 0, 0, 1, 1, 1, 1, 0};
  const CVector s = qpsk_modulate(bits, 4);
  EXPECT_EQ(s(0), cplx(kInvSqrt2, kInvSqrt2));
  EXPECT_EQ(s(1), cplx(-kInvSqrt2, kInvSqrt2));
  EXPECT_EQ(s(2), cplx(-kInvSqrt2, -kInvSqrt2));
  EXPECT_EQ(s(3), cplx(kInvSqrt2, -kInvSqrt2));
}

TEST(Qpsk, UnitModulus) {
  Rng rng(1);
  const CVector s = qpsk_modulate(random_bits(200, rng), 100);
  for (auto x : s) EXPECT_NEAR(std::abs(x), 1.0, 1e-15);
}

TEST(Qpsk, RejectsLengthMismatch) {
  const std::vector<std::uint8_t> bits(5, 0);
  EXPECT_THROW(qpsk_modulate(bits, 3), std::invalid_argument);
}

TEST(CorruptBits, ZeroRateIsIdentity) {
  Rng rng(2);
  const auto bits = random_bits(1000, rng);
  EXPECT_EQ(corrupt_bits(bits, 0.0, rng), bits);
}

TEST(CorruptBits, HalfRateFlipsHalf) {
  Rng rng(3);
  const std::vector<std::uint8_t> bits(1000000, 0);
  const auto out = corrupt_bits(bits, 0.5, rng);
  const double frac = std::count(out.begin(), out.end(), 1) / 1e6;
  EXPECT_NEAR(frac, 0.5, 0.002);
}

TEST(CorruptBits, DeterministicPerSeed) {
  Rng a(4), b(4);
  const std::vector<std::uint8_t> bits(500, 1);
  EXPECT_EQ(corrupt_bits(bits, 0.2, a), corrupt_bits(bits, 0.2, b));
}

TEST(CorruptBits, RejectsBadRate) {
  Rng rng(5);
  const std::vector<std::uint8_t> bits(4, 0);
  EXPECT_THROW(corrupt_bits(bits, 0.6, rng), std::invalid_argument);
  EXPECT_THROW(corrupt_bits(bits, -0.1, rng), std::invalid_argument);
}

TEST(SteeringAtom, Examples) {
  EXPECT_TRUE(steering_atom(0.0, 0.0, 2, 2).isApprox(CVector::Ones(4)));
  const CVector a = steering_atom(0.5, 0.0, 2, 1);
  EXPECT_NEAR(std::abs(a(0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(1) + 1.0), 0.0, 1e-15);
}

TEST(SteeringAtom, RejectsOutOfRange) {
  EXPECT_THROW(steering_atom(1.0, 0.0, 2, 2), std::invalid_argument);
  EXPECT_THROW(steering_atom(0.0, -0.1, 2, 2), std::invalid_argument);
}

TEST(SteeringAtom, IsVecOfRankOneOuterProduct) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const double phi = u(rng), psi = u(rng);
    const int M = 3 + t % 4, N = 2 + t % 5;
    CVector b(M), g(N);
    for (int m = 0; m < M; ++m) b(m) = std::exp(cplx(0.0, 2.0 * kPi * m * phi));
    for (int n = 0; n < N; ++n) g(n) = std::exp(cplx(0.0, 2.0 * kPi * n * psi));
    const CMatrix outer = b * g.adjoint();
    const CVector a = steering_atom(phi, psi, M, N);
    EXPECT_LE((a - outer.reshaped()).cwiseAbs().maxCoeff(), 1e-12);
    for (auto x : a) EXPECT_NEAR(std::abs(x), 1.0, 1e-14);
  }
}

TEST(SynthesizeResponse, SimpleCases) {
  EXPECT_TRUE(synthesize_response({}, 3, 3).isZero());
  EXPECT_TRUE(synthesize_response({{0.0, 0.0, 1.0, PathClass::target}}, 3, 4).isApprox(CVector::Ones(12)));
  const std::vector<NormalizedPath> cancel{{0.3, 0.6, cplx(1, 2), PathClass::target},
                                           {0.3, 0.6, cplx(-1, -2), PathClass::target}};
  EXPECT_LE(synthesize_response(cancel, 4, 4).norm(), 1e-14);
}

// Oracle: literal triple loop over (m, n, k).
TEST(SynthesizeResponse, MatchesEntrywiseSum) {
  Rng rng(7);
  for (int t = 0; t < 12; ++t) {
    const int M = 1 + (t * 5) % 16, N = 1 + (t * 7) % 16, K = 1 + t % 8;
    const auto paths = random_paths(K, rng);
    const CVector z = synthesize_response(paths, M, N);
    CVector oracle = CVector::Zero(M * N);
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n)
        for (const auto& p : paths)
          oracle(n * M + m) += p.alpha * std::exp(cplx(0.0, 2.0 * kPi * m * p.phi - 2.0 * kPi * n * p.psi));
    EXPECT_LE((z - oracle).norm(), 1e-12 * (1.0 + oracle.norm()));
  }
}

TEST(PhysicalToNormalized, Examples) {
  OfdmConfig cfg;
  const auto zero = physical_to_normalized({0.0, 0.0, 1.0, PathClass::direct}, cfg);
  EXPECT_EQ(zero.phi, 0.0);
  EXPECT_EQ(zero.psi, 0.0);
  EXPECT_NEAR(physical_to_normalized({0.0, 1.0 / cfg.T_bar(), 1.0, PathClass::target}, cfg).phi, 0.0, 1e-12);
  const auto p = physical_to_normalized({0.0, 100.0, cplx(2.0, 0.0), PathClass::target}, cfg);
  EXPECT_NEAR(p.phi, 0.03, 1e-15);
  EXPECT_EQ(p.alpha, cplx(2.0 * cfg.T, 0.0));
  EXPECT_NEAR(physical_to_normalized({50e-6, 0.0, 1.0, PathClass::target}, cfg).psi, 0.25, 1e-15);
}

TEST(PhysicalToNormalized, NegativeDopplerWraps) {
  OfdmConfig cfg;
  EXPECT_NEAR(physical_to_normalized({0.0, -100.0, 1.0, PathClass::target}, cfg).phi, 0.97, 1e-12);
}

TEST(NormalizedToPhysical, RoundTrip) {
  OfdmConfig cfg;
  const PathParams p{4e-5, -123.0, cplx(100.0, -40.0), PathClass::clutter};
  const PathParams q = normalized_to_physical(physical_to_normalized(p, cfg), cfg);
  EXPECT_NEAR(q.tau, p.tau, 1e-15);
  EXPECT_NEAR(q.f, p.f, 1e-9);
  EXPECT_NEAR(std::abs(q.A - p.A), 0.0, 1e-9);
  EXPECT_EQ(q.cls, p.cls);
}

TEST(Units, MonostaticConversions) {
  EXPECT_NEAR(speed_to_doppler(-3.0, 2e9), -40.0, 1e-12);
  EXPECT_NEAR(range_to_delay(30e3), 2e-4, 1e-18);
  EXPECT_NEAR(doppler_to_speed(speed_to_doppler(17.0, 2e9), 2e9), 17.0, 1e-12);
  EXPECT_NEAR(delay_to_range(range_to_delay(1234.0)), 1234.0, 1e-9);
}

TEST(SynthesizeReceived, CleanDataHasNoErrors) {
  OfdmConfig cfg;
  const ReceivedData d = synthesize_received(small_scene(0.0, 0.0, 11), cfg);
  ASSERT_TRUE(d.truth.has_value());
  EXPECT_TRUE(d.truth->e.isZero());
  EXPECT_LE((d.r - d.s_hat.cwiseProduct(d.truth->z)).norm(), 1e-12);
  EXPECT_LE((d.r.cwiseProduct(d.s_hat.conjugate()) - d.truth->z).norm(), 1e-12 * d.truth->z.norm());
  for (auto s : d.s_hat) EXPECT_NEAR(std::abs(s), 1.0, 1e-15);
}

TEST(SynthesizeReceived, ErrorIdentityHoldsWithNoise) {
  OfdmConfig cfg;
  Scene sc = small_scene(0.1, 0.05, 12);
  const ReceivedData d = synthesize_received(sc, cfg);
  sc.noise_sigma = 0.0;
  const ReceivedData clean = synthesize_received(sc, cfg);
  // Noise is drawn after the symbols, so the noiseless run shares them.
  EXPECT_EQ(clean.s_hat, d.s_hat);
  const CVector v = d.r - clean.r;
  EXPECT_LE((d.r - d.s_hat.cwiseProduct(d.truth->z) - v - d.truth->e).norm(), 1e-12);
}

TEST(SynthesizeReceived, ErrorSupportIsSymbolMismatch) {
  OfdmConfig cfg;
  cfg.M = cfg.N = 12;
  const ReceivedData d = synthesize_received(small_scene(0.1, 0.0, 13), cfg);
  const CVector s = d.r.cwiseQuotient(d.truth->z);
  for (int i = 0; i < d.size(); ++i) {
    const bool mismatch = std::abs(s(i) - d.s_hat(i)) > 1e-9;
    EXPECT_EQ(std::abs(d.truth->e(i)) > 1e-12, mismatch) << i;
  }
}

TEST(SynthesizeReceived, ErrorFractionMatchesTwoBitFlips) {
  OfdmConfig cfg;
  cfg.M = cfg.N = 16;
  long nonzero = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ReceivedData d = synthesize_received(small_scene(0.1, 0.0, seed), cfg);
    for (auto x : d.truth->e) nonzero += std::abs(x) > 1e-12 ? 1 : 0;
    total += d.size();
  }
  EXPECT_NEAR(static_cast<double>(nonzero) / total, 1.0 - 0.9 * 0.9, 0.01);
}

TEST(SynthesizeReceived, Deterministic) {
  OfdmConfig cfg;
  const ReceivedData a = synthesize_received(small_scene(0.05, 0.1, 14), cfg);
  const ReceivedData b = synthesize_received(small_scene(0.05, 0.1, 14), cfg);
  EXPECT_EQ(a.r, b.r);
  EXPECT_EQ(a.s_hat, b.s_hat);
  EXPECT_EQ(a.truth->e, b.truth->e);
}

TEST(SynthesizeReceived, RejectsInvalidScene) {
  OfdmConfig cfg;
  Scene s = small_scene(0.7, 0.0, 1);
  EXPECT_THROW(synthesize_received(s, cfg), std::invalid_argument);
  s = small_scene(0.0, 0.0, 1);
  s.paths[0].tau = 1e-6;
  EXPECT_THROW(synthesize_received(s, cfg), std::invalid_argument);
}

TEST(NoiseSigma, MatchesSnrDefinition) {
  const CVector z = CVector::Constant(16, cplx(2.0, 0.0));
  const double sigma = noise_sigma_for_snr(z, 20.0);
  EXPECT_NEAR(z.squaredNorm() / (16.0 * sigma * sigma), 100.0, 1e-9);
}

TEST(SceneRandom, PaperCounts) {
  OfdmConfig cfg;
  cfg.M = 16;
  cfg.N = 50;
  Rng rng(15);
  const Scene s = scene_random(5, 100, SceneRanges{}, cfg, rng);
  ASSERT_EQ(s.paths.size(), 106u);
  int direct = 0, clutter = 0, target = 0;
  for (const auto& p : s.paths) {
    direct += p.cls == PathClass::direct;
    clutter += p.cls == PathClass::clutter;
    target += p.cls == PathClass::target;
  }
  EXPECT_EQ(direct, 1);
  EXPECT_EQ(clutter, 100);
  EXPECT_EQ(target, 5);
  EXPECT_NO_THROW(s.validate());
}

TEST(SceneRandom, EmptyGivesDirectOnly) {
  OfdmConfig cfg;
  Rng rng(16);
  const Scene s = scene_random(0, 0, SceneRanges{}, cfg, rng);
  ASSERT_EQ(s.paths.size(), 1u);
  EXPECT_EQ(s.paths[0].cls, PathClass::direct);
  EXPECT_EQ(s.paths[0].tau, 0.0);
  EXPECT_EQ(s.paths[0].f, 0.0);
}

TEST(SceneRandom, DrawsWithinRanges) {
  OfdmConfig cfg;
  SceneRanges r;
  Rng rng(17);
  const Scene s = scene_random(10, 30, r, cfg, rng);
  double max_target = 0.0;
  for (const auto& p : s.paths)
    if (p.cls == PathClass::target) max_target = std::max(max_target, std::abs(p.A));
  for (const auto& p : s.paths) {
    const double range = delay_to_range(p.tau), v = doppler_to_speed(p.f, cfg.f_c);
    const double mag = std::abs(p.A) * cfg.T;
    EXPECT_GE(range, r.range_min - 1e-9);
    EXPECT_LE(range, r.range_max + 1e-9);
    if (p.cls == PathClass::clutter) {
      EXPECT_LE(std::abs(v), 3.0 + 1e-9);
      EXPECT_GE(mag, r.clutter_amp_min - 1e-12);
      EXPECT_LE(mag, r.clutter_amp_max + 1e-12);
    } else if (p.cls == PathClass::target) {
      EXPECT_LE(std::abs(v), 148.0 + 1e-9);
      EXPECT_GE(mag, r.target_amp_min - 1e-12);
      EXPECT_LE(mag, r.target_amp_max + 1e-12);
    } else {
      EXPECT_NEAR(std::abs(p.A), r.direct_amp_factor * max_target, 1e-9 * std::abs(p.A));
    }
  }
}

TEST(SceneRandom, RespectsSeparationAndFailsWhenInfeasible) {
  OfdmConfig cfg;
  SceneRanges r;
  r.min_target_separation = 0.02;
  Rng rng(18);
  const Scene s = scene_random(4, 0, r, cfg, rng);
  const auto np = normalize_paths(s, cfg);
  for (std::size_t i = 0; i < np.size(); ++i)
    for (std::size_t j = i + 1; j < np.size(); ++j) {
      EXPECT_GE(wrapped_distance(np[i].phi, np[j].phi), 0.02);
      EXPECT_GE(wrapped_distance(np[i].psi, np[j].psi), 0.02);
    }
  r.min_target_separation = 0.4;
  r.max_retries = 50;
  EXPECT_THROW(scene_random(3, 0, r, cfg, rng), std::runtime_error);
}

TEST(SceneRandom, DeterministicPerSeed) {
  OfdmConfig cfg;
  Rng a(19), b(19);
  const Scene x = scene_random(3, 5, SceneRanges{}, cfg, a);
  const Scene y = scene_random(3, 5, SceneRanges{}, cfg, b);
  ASSERT_EQ(x.paths.size(), y.paths.size());
  for (std::size_t i = 0; i < x.paths.size(); ++i) {
    EXPECT_EQ(x.paths[i].tau, y.paths[i].tau);
    EXPECT_EQ(x.paths[i].f, y.paths[i].f);
    EXPECT_EQ(x.paths[i].A, y.paths[i].A);
  }
}
