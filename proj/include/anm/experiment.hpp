#pragma once

// Batch comparison runs: every (seed, ber) dataset is solved by each
// algorithm in fixed-step mode and in tolerance mode, then estimated and
// scored. Cells run on a worker pool; rows are emitted in cell order, so the
// output does not depend on scheduling.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "anm/diagnostics.hpp"
#include "anm/io.hpp"
#include "anm/music.hpp"
#include "anm/solver.hpp"

namespace anm {

struct ExperimentSpec {
  OfdmConfig ofdm;
  std::optional<Scene> scene;
  std::optional<RandomSceneSpec> random;
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> bers;  // empty: the scene's own ber
  std::vector<double> tols;
  std::vector<int> steps;
  std::vector<Algorithm> algorithms{Algorithm::sgs_admm, Algorithm::admm};
  SolverParams solver;
  MusicParams music;
  // Per-axis match tolerance for scoring; negative selects half a resolution
  // cell (0.5/M, 0.5/N).
  double match_tol_phi = -1.0;
  double match_tol_psi = -1.0;
  int workers = 0;  // 0: hardware concurrency
  std::string out = "out";
  std::string text;

  void validate() const {
    if (!scene && !random) throw ConfigError("experiment needs a 'scene' or a 'random' section");
    if (algorithms.empty()) throw ConfigError("experiment needs at least one algorithm");
    if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
    if (tols.empty() && steps.empty()) throw ConfigError("experiment needs a 'tols' or a 'steps' list");
    for (double b : bers)
      if (!(b >= 0.0 && b <= 0.5)) throw ConfigError("ber values must lie in [0, 0.5]");
    for (double t : tols)
      if (!(t > 0.0)) throw ConfigError("tol values must be > 0");
    for (int s : steps)
      if (s < 1) throw ConfigError("step counts must be >= 1");
  }
};

inline ExperimentSpec experiment_from_json(const json& j, std::string text = {}) {
  if (!j.is_object()) throw ConfigError("experiment spec root must be a JSON object");
  ExperimentSpec s;
  s.text = text.empty() ? j.dump() : std::move(text);
  if (j.contains("ofdm")) s.ofdm = ofdm_from_json(j.at("ofdm"));
  if (j.contains("scene")) s.scene = scene_from_json(j.at("scene"));
  if (j.contains("random")) s.random = random_spec_from_json(j.at("random"));
  s.seeds = get_or(j, "seeds", s.seeds);
  s.bers = get_or(j, "bers", s.bers);
  s.tols = get_or(j, "tols", s.tols);
  s.steps = get_or(j, "steps", s.steps);
  if (j.contains("algorithms")) {
    s.algorithms.clear();
    for (const auto& a : j.at("algorithms")) {
      try {
        s.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (j.contains("solver")) s.solver = solver_params_from_json(j.at("solver"));
  if (j.contains("music")) s.music = music_params_from_json(j.at("music"));
  s.match_tol_phi = get_or(j, "match_tol_phi", s.match_tol_phi);
  s.match_tol_psi = get_or(j, "match_tol_psi", s.match_tol_psi);
  s.workers = get_or(j, "workers", s.workers);
  s.out = get_or(j, "out", s.out);
  s.validate();
  return s;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return experiment_from_json(json::parse(text), text);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

enum class CellMode { steps, tol };

inline std::string to_string(CellMode m) { return m == CellMode::steps ? "steps" : "tol"; }

struct CellResult {
  std::uint64_t seed = 0;
  double ber = 0.0;
  CellMode mode = CellMode::tol;
  double tol_or_step = 0.0;
  Algorithm algorithm = Algorithm::sgs_admm;
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  double eta_max = 0.0;
  double objective = 0.0;
  int n_tar = -1;  // -1 when estimation failed
  int k_hat = 0;
  int true_positives = 0;
  int misses = 0;
  int ghosts = 0;
  std::string note;
  double seconds = 0.0;  // wall time, reported only in the timing sidecar
};

/// Dataset for one (seed, ber) pair.
inline Scene experiment_scene(const ExperimentSpec& spec, std::uint64_t seed, std::optional<double> ber) {
  Scene s = spec.scene ? *spec.scene : realize_scene(*spec.random, spec.ofdm, seed);
  s.rng_seed = seed;
  if (ber) s.ber = *ber;
  return s;
}

/// Solve + MUSIC + scoring for one cell.
inline CellResult run_cell(const ExperimentSpec& spec, const ReceivedData& data, std::size_t k_expected,
                           CellResult cell) {
  SolverParams params = spec.solver;
  if (cell.mode == CellMode::steps) {
    params.forced_steps = static_cast<int>(cell.tol_or_step);
  } else {
    params.forced_steps.reset();
    params.tol = cell.tol_or_step;
  }
  const auto start = std::chrono::steady_clock::now();
  const Solution sol = solve(cell.algorithm, data, params);
  cell.status = sol.status;
  cell.iterations = sol.iterations;
  if (const KktReport* k = sol.last_kkt()) {
    cell.eta_max = k->eta_max;
    cell.objective = k->objective;
  } else {
    cell.eta_max = std::numeric_limits<double>::quiet_NaN();
    cell.objective = std::numeric_limits<double>::quiet_NaN();
  }
  cell.note = sol.message;

  if (sol.status != SolveStatus::numeric_failure) {
    try {
      const OfdmConfig& cfg = spec.ofdm;
      const EstimateReport rep = estimate_paths(sol.state.U, debiased_response(data, sol.state.e), cfg, spec.music,
                                                static_cast<int>(k_expected));
      cell.n_tar = rep.n_targets();
      cell.k_hat = rep.k_hat;
      std::vector<Peak> est;
      for (const auto& p : rep.peaks)
        if (p.cls == PathClass::target) est.push_back(p);
      std::vector<NormalizedPath> tru;
      for (const auto& p : data.truth->paths)
        if (p.cls == PathClass::target) tru.push_back(p);
      const double tp = spec.match_tol_phi < 0.0 ? 0.5 / cfg.M : spec.match_tol_phi;
      const double tq = spec.match_tol_psi < 0.0 ? 0.5 / cfg.N : spec.match_tol_psi;
      const MatchTable mt = score_estimates(est, tru, tp, tq);
      cell.true_positives = mt.true_positives;
      cell.misses = mt.misses;
      cell.ghosts = mt.ghosts;
    } catch (const DegenerateEstimate& e) {
      cell.note = e.what();
    } catch (const NumericError& e) {
      cell.note = e.what();
    }
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

struct ExperimentResult {
  std::vector<CellResult> steps_rows;  // Table 1 analogue
  std::vector<CellResult> tol_rows;    // Table 2 analogue
};

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  struct DataKey {
    std::uint64_t seed;
    std::optional<double> ber;
  };
  std::vector<DataKey> keys;
  for (auto seed : spec.seeds) {
    if (spec.bers.empty())
      keys.push_back({seed, std::nullopt});
    else
      for (double b : spec.bers) keys.push_back({seed, b});
  }

  struct Job {
    std::size_t data_index;
    CellResult cell;
  };
  std::vector<Job> jobs;
  std::vector<Scene> scenes;
  for (std::size_t di = 0; di < keys.size(); ++di) {
    scenes.push_back(experiment_scene(spec, keys[di].seed, keys[di].ber));
    for (int st : spec.steps)
      for (auto alg : spec.algorithms) {
        CellResult c;
        c.seed = keys[di].seed;
        c.ber = scenes.back().ber;
        c.mode = CellMode::steps;
        c.tol_or_step = st;
        c.algorithm = alg;
        jobs.push_back({di, c});
      }
    for (double tol : spec.tols)
      for (auto alg : spec.algorithms) {
        CellResult c;
        c.seed = keys[di].seed;
        c.ber = scenes.back().ber;
        c.mode = CellMode::tol;
        c.tol_or_step = tol;
        c.algorithm = alg;
        jobs.push_back({di, c});
      }
  }

  std::vector<ReceivedData> datasets(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) datasets[i] = synthesize_received(scenes[i], spec.ofdm);

  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& job = jobs[i];
        results[i] = run_cell(spec, datasets[job.data_index], scenes[job.data_index].paths.size(), job.cell);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  unsigned n_workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers) : std::thread::hardware_concurrency();
  n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult out;
  for (auto& r : results) (r.mode == CellMode::steps ? out.steps_rows : out.tol_rows).push_back(r);
  return out;
}

inline std::string seeds_label(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? ";" : "") + std::to_string(seeds[i]);
  return s;
}

/// Commas and newlines in free-text notes would break the CSV.
inline std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

inline void write_table(const std::filesystem::path& path, const std::vector<CellResult>& rows, const Provenance& prov) {
  CsvWriter w(path, prov,
              {"seed", "ber", "mode", "tol_or_step", "algorithm", "status", "iters", "eta_max", "obj", "n_tar",
               "k_hat", "tp", "misses", "ghosts", "note"});
  for (const auto& r : rows)
    w.row({std::to_string(r.seed), fmt(r.ber), to_string(r.mode), fmt(r.tol_or_step), to_string(r.algorithm),
           to_string(r.status), std::to_string(r.iterations), fmt(r.eta_max), fmt(r.objective), std::to_string(r.n_tar),
           std::to_string(r.k_hat), std::to_string(r.true_positives), std::to_string(r.misses),
           std::to_string(r.ghosts), csv_safe(r.note)});
}

inline void write_table_timing(const std::filesystem::path& path, const std::vector<CellResult>& rows,
                               const Provenance& prov) {
  CsvWriter w(path, prov, {"seed", "ber", "mode", "tol_or_step", "algorithm", "time_s"});
  for (const auto& r : rows)
    w.row({std::to_string(r.seed), fmt(r.ber), to_string(r.mode), fmt(r.tol_or_step), to_string(r.algorithm),
           fmt(r.seconds)});
}

/// table1.csv (fixed steps) and table2.csv (tolerance), each with a
/// *.timing.csv sidecar. Returns the files written.
inline std::vector<std::filesystem::path> write_experiment(const ExperimentSpec& spec, const ExperimentResult& res,
                                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Provenance prov{fnv1a_hex(spec.text), seeds_label(spec.seeds)};
  std::vector<std::filesystem::path> files;
  auto emit = [&](const std::vector<CellResult>& rows, const std::string& stem) {
    if (rows.empty()) return;
    files.push_back(dir / (stem + ".csv"));
    write_table(files.back(), rows, prov);
    files.push_back(dir / (stem + ".timing.csv"));
    write_table_timing(files.back(), rows, prov);
  };
  emit(res.steps_rows, "table1");
  emit(res.tol_rows, "table2");
  return files;
}

}  // namespace anm
