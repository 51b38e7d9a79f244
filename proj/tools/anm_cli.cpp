// anm_cli: scene synthesis, solving, spectrum estimation, KKT reports and
// batch experiments. Exit codes: 0 ok, 2 config, 3 max_iter, 4 numeric,
// 5 degenerate estimate, 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "anm/diagnostics.hpp"
#include "anm/experiment.hpp"
#include "anm/io.hpp"
#include "anm/music.hpp"
#include "anm/solver.hpp"

namespace fs = std::filesystem;
using namespace anm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMaxIter = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitDegenerate = 5;

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::string algorithm = "sgs";
  bool algorithm_given = false;
  std::optional<double> tol;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
};

fs::path out_dir(const Options& o, const fs::path& fallback) {
  const fs::path dir = o.out.empty() ? fallback : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

json scene_file(const OfdmConfig& cfg, const Scene& scene) {
  return json{{"ofdm", to_json_value(cfg)}, {"scene", to_json_value(scene)}};
}

int cmd_synth(const Options& o) {
  if (o.config.empty()) throw ConfigError("synth needs --config");
  RunConfig rc = load_run_config(o.config);
  if (o.seed) rc.seed = *o.seed;
  Scene scene = rc.resolve_scene();
  if (o.seed) scene.rng_seed = *o.seed;
  const ReceivedData d = synthesize_received(scene, rc.ofdm);

  const fs::path dir = out_dir(o, "synth_out");
  const Provenance prov{fnv1a_hex(rc.text), std::to_string(scene.rng_seed)};
  write_received_csv(dir / "data.csv", d, prov);
  write_json_file(dir / "scene.json", scene_file(rc.ofdm, scene));
  write_json_file(dir / "truth.json", truth_to_json(*d.truth, scene, rc.ofdm));

  int counts[3] = {0, 0, 0};
  for (const auto& p : scene.paths) ++counts[static_cast<int>(p.cls)];
  std::cout << "paths " << scene.paths.size() << " (target " << counts[0] << ", clutter " << counts[1] << ", direct "
            << counts[2] << ")\n"
            << "M " << rc.ofdm.M << " N " << rc.ofdm.N << " ber " << fmt(scene.ber) << " noise_sigma "
            << fmt(scene.noise_sigma) << " seed " << scene.rng_seed << "\n"
            << "wrote " << (dir / "data.csv").string() << "\n";
  return 0;
}

struct LoadedData {
  OfdmConfig ofdm;
  ReceivedData data;
  std::uint64_t seed = 0;
  int k_expected = 0;
  std::string hash_text;
};

LoadedData load_data_dir(const fs::path& dir) {
  LoadedData out;
  const json sj = read_json_file(dir / "scene.json");
  try {
    out.ofdm = ofdm_from_json(sj.at("ofdm"));
    const Scene scene = scene_from_json(sj.at("scene"));
    out.seed = scene.rng_seed;
    out.k_expected = static_cast<int>(scene.paths.size());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene.json: ") + e.what());
  }
  out.data = read_received_csv(dir / "data.csv", out.ofdm.M, out.ofdm.N);
  out.hash_text = read_text_file(dir / "data.csv");
  return out;
}

int cmd_solve(const Options& o) {
  if (o.data.empty()) throw ConfigError("solve needs --data DIR (a synth output directory)");
  const fs::path data_dir = o.data;
  LoadedData ld = load_data_dir(data_dir);

  SolverParams params;
  std::string cfg_text;
  if (!o.config.empty()) {
    const RunConfig rc = load_run_config(o.config);
    params = rc.solver;
    cfg_text = rc.text;
  }
  if (o.tol) params.tol = *o.tol;
  if (o.steps) params.forced_steps = *o.steps;
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Algorithm alg;
  try {
    alg = algorithm_from_string(o.algorithm);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Solution sol = solve(alg, ld.data, params);
  const fs::path dir = out_dir(o, data_dir);
  const Provenance prov{fnv1a_hex(ld.hash_text + cfg_text + to_json_value(params).dump() + to_string(alg)),
                        std::to_string(ld.seed)};
  write_history_csv(dir / "history.csv", sol.history, prov);
  write_history_timing_csv(dir / "history.timing.csv", sol.history, prov);

  SolutionArchive arch;
  arch.ofdm = ld.ofdm;
  arch.data = ld.data;
  arch.data.truth.reset();
  arch.state = sol.state;
  arch.constants = sol.constants;
  arch.algorithm = alg;
  arch.status = sol.status;
  arch.iterations = sol.iterations;
  arch.k_expected = ld.k_expected;
  write_json_file(dir / "solution.json", to_json_value(arch));

  std::cout << to_string(alg) << " " << to_string(sol.status) << " after " << sol.iterations << " iterations";
  if (const KktReport* k = sol.last_kkt()) std::cout << ", eta_max " << fmt(k->eta_max) << ", obj " << fmt(k->objective);
  std::cout << "\n";
  if (!sol.message.empty()) std::cerr << sol.message << "\n";

  switch (sol.status) {
    case SolveStatus::converged: return 0;
    case SolveStatus::max_iter: return params.forced_steps ? 0 : kExitMaxIter;
    case SolveStatus::numeric_failure: return kExitNumeric;
  }
  return kExitNumeric;
}

SolutionArchive load_solution(const Options& o) {
  if (o.data.empty()) throw ConfigError("needs --data DIR containing solution.json");
  fs::path p = o.data;
  if (fs::is_directory(p)) p /= "solution.json";
  return archive_from_json(read_json_file(p));
}

int cmd_spectrum(const Options& o) {
  const SolutionArchive arch = load_solution(o);
  MusicParams mp;
  std::string cfg_text;
  if (!o.config.empty()) {
    const RunConfig rc = load_run_config(o.config);
    mp = rc.music;
    cfg_text = rc.text;
  }
  const EstimateReport rep = estimate_paths(arch.state.U, debiased_response(arch.data, arch.state.e), arch.ofdm, mp,
                                            arch.k_expected, true);
  const fs::path dir = out_dir(o, fs::is_directory(o.data) ? fs::path(o.data) : fs::path(o.data).parent_path());
  const Provenance prov{fnv1a_hex(to_json_value(arch).dump() + cfg_text), "none"};
  write_spectrum_csv(dir / "spectrum.csv", *rep.spectrum, prov);
  write_range_velocity_csv(dir / "range_velocity.csv", *rep.spectrum, arch.ofdm, prov);
  write_peaks_csv(dir / "peaks.csv", rep.peaks, arch.ofdm, prov);

  std::cout << "k_hat " << rep.k_hat << " targets " << rep.n_targets() << " clutter " << rep.count(PathClass::clutter)
            << " direct " << rep.count(PathClass::direct) << "\n";
  if (rep.ill_conditioned) std::cerr << "warning: amplitude fit is ill-conditioned (near-coincident peaks)\n";
  if (rep.shortfall > 0) std::cerr << "warning: " << rep.shortfall << " fewer spectral peaks than the model order\n";
  for (const auto& p : rep.peaks)
    std::cout << "  " << to_string(p.cls) << " range_m " << fmt(peak_range(p, arch.ofdm)) << " velocity_mps "
              << fmt(peak_speed(p, arch.ofdm)) << " |alpha| " << fmt(std::abs(p.alpha)) << "\n";
  return 0;
}

int cmd_kkt(const Options& o) {
  const SolutionArchive arch = load_solution(o);
  const double lam = arch.constants.lambda, mu = arch.constants.mu;
  const KktReport c = kkt_residuals(arch.state, arch.data, lam, mu, KktForm::consistent);
  const KktReport v = kkt_residuals(arch.state, arch.data, lam, mu, KktForm::verbatim);
  const fs::path dir = out_dir(o, fs::is_directory(o.data) ? fs::path(o.data) : fs::path(o.data).parent_path());
  const Provenance prov{fnv1a_hex(to_json_value(arch).dump()), "none"};
  CsvWriter w(dir / "kkt.csv", prov, {"form", "obj", "eta1", "eta2", "eta3", "eta4", "eta5", "eta6", "eta_max"});
  for (const auto& [name, k] : {std::pair<const char*, const KktReport&>{"consistent", c}, {"verbatim", v}}) {
    w.row({name, fmt(k.objective), fmt(k.eta1), fmt(k.eta2), fmt(k.eta3), fmt(k.eta4), fmt(k.eta5), fmt(k.eta6),
           fmt(k.eta_max)});
    std::cout << name << ": eta_max " << fmt(k.eta_max) << " (eta1 " << fmt(k.eta1) << ", eta2 " << fmt(k.eta2)
              << ", eta3 " << fmt(k.eta3) << ", eta4 " << fmt(k.eta4) << ", eta5 " << fmt(k.eta5) << ", eta6 "
              << fmt(k.eta6) << ")\n";
  }
  return 0;
}

int cmd_experiment(const Options& o) {
  if (o.config.empty()) throw ConfigError("experiment needs --config");
  ExperimentSpec spec = load_experiment(o.config);
  if (o.seed) spec.seeds = {*o.seed};
  if (o.tol) spec.tols = {*o.tol};
  if (o.steps) spec.steps = {*o.steps};
  if (o.algorithm_given) {
    try {
      spec.algorithms = {algorithm_from_string(o.algorithm)};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const ExperimentResult res = run_experiment(spec);
  const fs::path dir = o.out.empty() ? fs::path(spec.out) : fs::path(o.out);
  for (const auto& f : write_experiment(spec, res, dir)) std::cout << "wrote " << f.string() << "\n";
  int failures = 0;
  for (const auto* rows : {&res.steps_rows, &res.tol_rows})
    for (const auto& r : *rows) failures += r.status == SolveStatus::numeric_failure ? 1 : 0;
  if (failures > 0) std::cerr << failures << " cell(s) ended in numeric failure; see the note column\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atomic-norm delay-Doppler estimation for OFDM passive radar"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config path");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* synth = app.add_subcommand("synth", "generate a scene and its received data");
  add_common(synth);
  synth->add_option("--seed", o.seed, "override the scene seed");

  auto* solve_cmd = app.add_subcommand("solve", "run a solver on synthesized data");
  add_common(solve_cmd);
  solve_cmd->add_option("--data", o.data, "synth output directory")->required();
  solve_cmd->add_option("--algorithm", o.algorithm, "sgs | admm")->check(CLI::IsMember({"sgs", "sgs_admm", "admm"}));
  solve_cmd->add_option("--tol", o.tol, "KKT tolerance");
  solve_cmd->add_option("--steps", o.steps, "run exactly this many iterations");

  auto* exp = app.add_subcommand("experiment", "batch comparison tables");
  add_common(exp);
  auto* exp_alg = exp->add_option("--algorithm", o.algorithm, "restrict to one algorithm (sgs | admm)")
                      ->check(CLI::IsMember({"sgs", "sgs_admm", "admm"}));
  exp->add_option("--tol", o.tol, "single tolerance cell");
  exp->add_option("--steps", o.steps, "single fixed-step cell");
  exp->add_option("--seed", o.seed, "single seed");

  auto* spec_cmd = app.add_subcommand("spectrum", "MUSIC spectrum, peaks and classification");
  add_common(spec_cmd);
  spec_cmd->add_option("--data", o.data, "directory with solution.json, or the file")->required();

  auto* kkt_cmd = app.add_subcommand("kkt", "KKT residual report for a saved solution");
  add_common(kkt_cmd);
  kkt_cmd->add_option("--data", o.data, "directory with solution.json, or the file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  o.algorithm_given = exp_alg->count() > 0;

  try {
    if (*synth) return cmd_synth(o);
    if (*solve_cmd) return cmd_solve(o);
    if (*exp) return cmd_experiment(o);
    if (*spec_cmd) return cmd_spectrum(o);
    if (*kkt_cmd) return cmd_kkt(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DegenerateEstimate& e) {
    std::cerr << "degenerate estimate: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
