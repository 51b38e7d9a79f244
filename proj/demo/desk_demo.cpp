// End-to-end run on a small noiseless scene: synthesize, solve with
// sGS-ADMM, extract paths with MUSIC and compare with the truth.

#include <iostream>

#include "anm/diagnostics.hpp"
#include "anm/music.hpp"
#include "anm/solver.hpp"

int main() {
  using namespace anm;
  OfdmConfig cfg;  // M = N = 8

  Scene scene;
  scene.rng_seed = 3;
  for (const NormalizedPath& p : {NormalizedPath{0.12, 0.20, {1.0, 0.0}, PathClass::target},
                                  NormalizedPath{0.45, 0.55, {0.0, 0.8}, PathClass::target},
                                  NormalizedPath{0.80, 0.85, {-0.6, 0.6}, PathClass::target}})
    scene.paths.push_back(normalized_to_physical(p, cfg));

  const ReceivedData data = synthesize_received(scene, cfg);
  SolverParams params;
  params.tol = 1e-4;
  const Solution sol = sgs_admm_solve(data, params);
  std::cout << to_string(sol.status) << " after " << sol.iterations << " iterations, eta_max "
            << sol.last_kkt()->eta_max << "\n";

  const EstimateReport rep = estimate_paths(sol.state.U, debiased_response(data, sol.state.e), cfg, MusicParams{},
                                            static_cast<int>(scene.paths.size()));
  for (const Peak& p : rep.peaks)
    std::cout << to_string(p.cls) << "  phi " << p.phi << "  psi " << p.psi << "  |alpha| " << std::abs(p.alpha)
              << "  range " << peak_range(p, cfg) << " m  speed " << peak_speed(p, cfg) << " m/s\n";

  const MatchTable mt = score_estimates(rep.peaks, data.truth->paths, 0.5 / cfg.M, 0.5 / cfg.N);
  std::cout << "matched " << mt.true_positives << " of " << data.truth->paths.size() << ", ghosts " << mt.ghosts
            << "\n";
  return mt.misses == 0 && mt.ghosts == 0 ? 0 : 1;
}
