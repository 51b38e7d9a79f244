#pragma once

// JSON configuration, CSV emission, and the solver state archive.
//
// Every CSV starts with one provenance comment line ("# ...") followed by a
// header row. Data rows depend only on inputs; wall-clock values go to
// separate *.timing.csv files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anm/music.hpp"
#include "anm/report.hpp"
#include "anm/scene.hpp"
#include "anm/solver.hpp"
#include "anm/state.hpp"

namespace anm {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Formatting

inline std::string fmt(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

/// FNV-1a 64-bit, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Provenance {
  std::string config_hash = "none";
  std::string seed = "none";

  std::string line() const {
    return std::string("# anm ") + kVersion + " config_fnv1a=" + config_hash + " seed=" + seed;
  }
};

/// Minimal CSV writer: provenance line, header, rows of preformatted cells.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out_.imbue(std::locale::classic());
    out_ << prov.line() << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Rows of a CSV file with comment lines and the header removed.
inline std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path,
                                                          std::vector<std::string>* header = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!seen_header) {
      seen_header = true;
      if (header) *header = cells;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline double parse_double(const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double x = 0.0;
  is >> x;
  if (is.fail()) throw ConfigError("malformed number '" + s + "'");
  return x;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// JSON conversions. Complex numbers are [re, im].

inline json to_json_value(cplx c) { return json::array({c.real(), c.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ConfigError("complex value must be [re, im]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json to_json_value(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json_value(v(i)));
  return a;
}

inline CVector cvector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("complex vector must be an array of [re, im]");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

/// Column-major flattening with explicit dimensions.
inline json to_json_value(const CMatrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", to_json_value(CVector(m.reshaped()))}};
}

inline CMatrix cmatrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const CVector flat = cvector_from_json(j.at("data"));
  if (flat.size() != rows * cols) throw ConfigError("matrix data length does not match its dimensions");
  return flat.reshaped(rows, cols);
}

// Read helpers that turn nlohmann type errors into ConfigError with the key.
template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T get_req(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline json to_json_value(const OfdmConfig& c) {
  return json{{"M", c.M}, {"N", c.N}, {"T", c.T}, {"T_cp", c.T_cp}, {"f_c", c.f_c}};
}

inline OfdmConfig ofdm_from_json(const json& j) {
  OfdmConfig c;
  c.M = get_or(j, "M", c.M);
  c.N = get_or(j, "N", c.N);
  c.T = get_or(j, "T", c.T);
  c.T_cp = get_or(j, "T_cp", c.T_cp);
  c.f_c = get_or(j, "f_c", c.f_c);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline json to_json_value(const PathParams& p) {
  return json{{"tau", p.tau}, {"f", p.f}, {"A", to_json_value(p.A)}, {"class", to_string(p.cls)}};
}

inline PathParams path_from_json(const json& j) {
  PathParams p;
  p.tau = get_or(j, "tau", 0.0);
  p.f = get_or(j, "f", 0.0);
  if (j.contains("A")) p.A = complex_from_json(j.at("A"));
  try {
    p.cls = path_class_from_string(get_or<std::string>(j, "class", "target"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline json to_json_value(const Scene& s) {
  json paths = json::array();
  for (const auto& p : s.paths) paths.push_back(to_json_value(p));
  return json{{"paths", paths}, {"rng_seed", s.rng_seed}, {"noise_sigma", s.noise_sigma}, {"ber", s.ber}};
}

inline Scene scene_from_json(const json& j) {
  Scene s;
  if (j.contains("paths")) {
    if (!j.at("paths").is_array()) throw ConfigError("'paths' must be an array");
    for (const auto& p : j.at("paths")) s.paths.push_back(path_from_json(p));
  }
  s.rng_seed = get_or<std::uint64_t>(j, "rng_seed", 0);
  s.noise_sigma = get_or(j, "noise_sigma", 0.0);
  s.ber = get_or(j, "ber", 0.0);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline json to_json_value(const SceneRanges& r) {
  return json{{"range_min", r.range_min},
              {"range_max", r.range_max},
              {"target_speed_min", r.target_speed_min},
              {"target_speed_max", r.target_speed_max},
              {"clutter_speed_min", r.clutter_speed_min},
              {"clutter_speed_max", r.clutter_speed_max},
              {"target_amp_min", r.target_amp_min},
              {"target_amp_max", r.target_amp_max},
              {"clutter_amp_min", r.clutter_amp_min},
              {"clutter_amp_max", r.clutter_amp_max},
              {"direct_amp_factor", r.direct_amp_factor},
              {"include_direct", r.include_direct},
              {"min_target_separation", r.min_target_separation},
              {"max_retries", r.max_retries}};
}

inline SceneRanges ranges_from_json(const json& j) {
  SceneRanges r;
  r.range_min = get_or(j, "range_min", r.range_min);
  r.range_max = get_or(j, "range_max", r.range_max);
  r.target_speed_min = get_or(j, "target_speed_min", r.target_speed_min);
  r.target_speed_max = get_or(j, "target_speed_max", r.target_speed_max);
  r.clutter_speed_min = get_or(j, "clutter_speed_min", r.clutter_speed_min);
  r.clutter_speed_max = get_or(j, "clutter_speed_max", r.clutter_speed_max);
  r.target_amp_min = get_or(j, "target_amp_min", r.target_amp_min);
  r.target_amp_max = get_or(j, "target_amp_max", r.target_amp_max);
  r.clutter_amp_min = get_or(j, "clutter_amp_min", r.clutter_amp_min);
  r.clutter_amp_max = get_or(j, "clutter_amp_max", r.clutter_amp_max);
  r.direct_amp_factor = get_or(j, "direct_amp_factor", r.direct_amp_factor);
  r.include_direct = get_or(j, "include_direct", r.include_direct);
  r.min_target_separation = get_or(j, "min_target_separation", r.min_target_separation);
  r.max_retries = get_or(j, "max_retries", r.max_retries);
  return r;
}

inline json to_json_value(const SolverParams& p) {
  json j{{"rho", p.rho},         {"varrho", p.varrho},     {"sigma_reg", p.sigma_reg},
         {"tol", p.tol},         {"max_iter", p.max_iter}, {"check_every", p.check_every},
         {"kkt_form", p.kkt_form == KktForm::verbatim ? "verbatim" : "consistent"}};
  if (p.lambda) j["lambda"] = *p.lambda;
  if (p.mu) j["mu"] = *p.mu;
  if (p.forced_steps) j["forced_steps"] = *p.forced_steps;
  return j;
}

inline SolverParams solver_params_from_json(const json& j) {
  SolverParams p;
  p.rho = get_or(j, "rho", p.rho);
  p.varrho = get_or(j, "varrho", p.varrho);
  p.sigma_reg = get_or(j, "sigma_reg", p.sigma_reg);
  if (j.contains("lambda") && !j.at("lambda").is_null()) p.lambda = get_req<double>(j, "lambda");
  if (j.contains("mu") && !j.at("mu").is_null()) p.mu = get_req<double>(j, "mu");
  p.tol = get_or(j, "tol", p.tol);
  p.max_iter = get_or(j, "max_iter", p.max_iter);
  p.check_every = get_or(j, "check_every", p.check_every);
  if (j.contains("forced_steps") && !j.at("forced_steps").is_null()) p.forced_steps = get_req<int>(j, "forced_steps");
  const auto form = get_or<std::string>(j, "kkt_form", "consistent");
  if (form == "consistent")
    p.kkt_form = KktForm::consistent;
  else if (form == "verbatim")
    p.kkt_form = KktForm::verbatim;
  else
    throw ConfigError("kkt_form must be 'consistent' or 'verbatim'");
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline json to_json_value(const MusicParams& p) {
  return json{{"grid_phi", p.grid_phi}, {"grid_psi", p.grid_psi}, {"rank_ratio", p.rank_ratio},
              {"k_max", p.k_max},       {"v_min", p.v_min},       {"psi_direct", p.psi_direct},
              {"zero_floor", p.zero_floor}};
}

inline MusicParams music_params_from_json(const json& j) {
  MusicParams p;
  p.grid_phi = get_or(j, "grid_phi", p.grid_phi);
  p.grid_psi = get_or(j, "grid_psi", p.grid_psi);
  p.rank_ratio = get_or(j, "rank_ratio", p.rank_ratio);
  p.k_max = get_or(j, "k_max", p.k_max);
  p.v_min = get_or(j, "v_min", p.v_min);
  p.psi_direct = get_or(j, "psi_direct", p.psi_direct);
  p.zero_floor = get_or(j, "zero_floor", p.zero_floor);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Run configuration shared by synth/solve/spectrum

/// Random-scene recipe: a scene is drawn from `seed`, which also seeds the
/// symbol, bit-error and noise draws.
struct RandomSceneSpec {
  int n_targets = 3;
  int n_clutter = 10;
  SceneRanges ranges;
  double noise_sigma = 0.0;
  double ber = 0.0;
};

inline RandomSceneSpec random_spec_from_json(const json& j) {
  RandomSceneSpec r;
  r.n_targets = get_or(j, "n_targets", r.n_targets);
  r.n_clutter = get_or(j, "n_clutter", r.n_clutter);
  if (j.contains("ranges")) r.ranges = ranges_from_json(j.at("ranges"));
  r.noise_sigma = get_or(j, "noise_sigma", r.noise_sigma);
  r.ber = get_or(j, "ber", r.ber);
  if (r.n_targets < 0 || r.n_clutter < 0) throw ConfigError("n_targets and n_clutter must be >= 0");
  if (!(r.ber >= 0.0 && r.ber <= 0.5)) throw ConfigError("ber must lie in [0, 0.5]");
  if (!(r.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  return r;
}

inline json to_json_value(const RandomSceneSpec& r) {
  return json{{"n_targets", r.n_targets}, {"n_clutter", r.n_clutter}, {"ranges", to_json_value(r.ranges)},
              {"noise_sigma", r.noise_sigma}, {"ber", r.ber}};
}

/// Draws a random scene; the data seed equals the scene seed.
inline Scene realize_scene(const RandomSceneSpec& spec, const OfdmConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Scene s = scene_random(spec.n_targets, spec.n_clutter, spec.ranges, cfg, rng);
  s.rng_seed = seed;
  s.noise_sigma = spec.noise_sigma;
  s.ber = spec.ber;
  return s;
}

struct RunConfig {
  OfdmConfig ofdm;
  std::optional<Scene> scene;
  std::optional<RandomSceneSpec> random;
  std::uint64_t seed = 1;
  SolverParams solver;
  MusicParams music;
  std::string text;  // raw config, hashed for provenance

  /// The explicit scene, or a random draw at `seed`.
  Scene resolve_scene() const {
    if (scene) return *scene;
    if (random) return realize_scene(*random, ofdm, seed);
    throw ConfigError("config needs a 'scene' or a 'random' section");
  }

  Provenance provenance() const { return {fnv1a_hex(text), std::to_string(seed)}; }
};

inline RunConfig run_config_from_json(const json& j, std::string text = {}) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig c;
  c.text = text.empty() ? j.dump() : std::move(text);
  if (j.contains("ofdm")) c.ofdm = ofdm_from_json(j.at("ofdm"));
  if (j.contains("scene")) c.scene = scene_from_json(j.at("scene"));
  if (j.contains("random")) c.random = random_spec_from_json(j.at("random"));
  c.seed = get_or<std::uint64_t>(j, "seed", c.scene ? c.scene->rng_seed : 1);
  if (j.contains("solver")) c.solver = solver_params_from_json(j.at("solver"));
  if (j.contains("music")) c.music = music_params_from_json(j.at("music"));
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return run_config_from_json(json::parse(text), text);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Received data and truth

inline void write_received_csv(const std::filesystem::path& path, const ReceivedData& d, const Provenance& prov) {
  CsvWriter w(path, prov, {"index", "re_r", "im_r", "re_shat", "im_shat"});
  for (int i = 0; i < d.size(); ++i)
    w.row({std::to_string(i), fmt(d.r(i).real()), fmt(d.r(i).imag()), fmt(d.s_hat(i).real()),
           fmt(d.s_hat(i).imag())});
}

inline ReceivedData read_received_csv(const std::filesystem::path& path, int M, int N) {
  std::vector<std::string> header;
  const auto rows = read_csv_rows(path, &header);
  if (header != std::vector<std::string>{"index", "re_r", "im_r", "re_shat", "im_shat"})
    throw ConfigError("'" + path.string() + "' does not have the received-data header");
  if (static_cast<int>(rows.size()) != M * N)
    throw ConfigError("'" + path.string() + "' has " + std::to_string(rows.size()) + " rows, expected M*N = " +
                      std::to_string(M * N));
  ReceivedData d;
  d.M = M;
  d.N = N;
  d.r.resize(M * N);
  d.s_hat.resize(M * N);
  for (const auto& row : rows) {
    if (row.size() != 5) throw ConfigError("malformed row in '" + path.string() + "'");
    const int i = static_cast<int>(parse_double(row[0]));
    if (i < 0 || i >= M * N) throw ConfigError("index out of range in '" + path.string() + "'");
    d.r(i) = {parse_double(row[1]), parse_double(row[2])};
    d.s_hat(i) = {parse_double(row[3]), parse_double(row[4])};
  }
  return d;
}

inline json to_json_value(const NormalizedPath& p) {
  return json{{"phi", p.phi}, {"psi", p.psi}, {"alpha", to_json_value(p.alpha)}, {"class", to_string(p.cls)}};
}

inline NormalizedPath normalized_path_from_json(const json& j) {
  NormalizedPath p;
  p.phi = get_req<double>(j, "phi");
  p.psi = get_req<double>(j, "psi");
  p.alpha = complex_from_json(j.at("alpha"));
  p.cls = path_class_from_string(get_req<std::string>(j, "class"));
  return p;
}

inline json truth_to_json(const GroundTruth& t, const Scene& scene, const OfdmConfig& cfg) {
  json paths = json::array();
  for (const auto& p : t.paths) paths.push_back(to_json_value(p));
  return json{{"ofdm", to_json_value(cfg)},
              {"scene", to_json_value(scene)},
              {"normalized_paths", paths},
              {"z_true", to_json_value(t.z)},
              {"e_true", to_json_value(t.e)}};
}

inline GroundTruth truth_from_json(const json& j) {
  GroundTruth t;
  for (const auto& p : j.at("normalized_paths")) t.paths.push_back(normalized_path_from_json(p));
  t.z = cvector_from_json(j.at("z_true"));
  t.e = cvector_from_json(j.at("e_true"));
  return t;
}

// ---------------------------------------------------------------------------
// Solver history and state archive

inline void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRecord>& history,
                              const Provenance& prov) {
  CsvWriter w(path, prov, {"iter", "obj", "eta1", "eta2", "eta3", "eta4", "eta5", "eta6", "eta_max"});
  for (const auto& h : history)
    w.row({std::to_string(h.iter), fmt(h.kkt.objective), fmt(h.kkt.eta1), fmt(h.kkt.eta2), fmt(h.kkt.eta3),
           fmt(h.kkt.eta4), fmt(h.kkt.eta5), fmt(h.kkt.eta6), fmt(h.kkt.eta_max)});
}

inline void write_history_timing_csv(const std::filesystem::path& path, const std::vector<HistoryRecord>& history,
                                     const Provenance& prov) {
  CsvWriter w(path, prov, {"iter", "seconds"});
  for (const auto& h : history) w.row({std::to_string(h.iter), fmt(h.seconds)});
}

inline json to_json_value(const SolverState& s) {
  return json{{"M", s.M()},
              {"N", s.N()},
              {"e", to_json_value(s.e)},
              {"g", to_json_value(s.g)},
              {"z", to_json_value(s.z)},
              {"eps", s.eps},
              {"U", to_json_value(s.U.raw())},
              {"Theta", to_json_value(s.Theta)},
              {"beta", to_json_value(s.beta)},
              {"Gamma", to_json_value(s.Gamma)}};
}

inline SolverState state_from_json(const json& j) {
  try {
    const int M = get_req<int>(j, "M"), N = get_req<int>(j, "N");
    SolverState s;
    s.U = BlockToeplitzCoeffs(M, N, cmatrix_from_json(j.at("U")));
    s.e = cvector_from_json(j.at("e"));
    s.g = cvector_from_json(j.at("g"));
    s.z = cvector_from_json(j.at("z"));
    s.eps = get_req<double>(j, "eps");
    s.Theta = cmatrix_from_json(j.at("Theta"));
    s.beta = cvector_from_json(j.at("beta"));
    s.Gamma = cmatrix_from_json(j.at("Gamma"));
    const int mn = M * N;
    if (s.e.size() != mn || s.g.size() != mn || s.z.size() != mn || s.beta.size() != mn ||
        s.Theta.rows() != mn + 1 || s.Theta.cols() != mn + 1 || s.Gamma.rows() != mn + 1 || s.Gamma.cols() != mn + 1)
      throw ConfigError("state archive blocks have inconsistent dimensions");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed state archive: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed state archive: ") + e.what());
  }
}

/// Everything the spectrum and kkt commands need, in one file.
struct SolutionArchive {
  OfdmConfig ofdm;
  ReceivedData data;  // r and s_hat; no truth
  SolverState state;
  IterationConstants constants;
  Algorithm algorithm = Algorithm::sgs_admm;
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
  int k_expected = 0;  // number of true paths when known, 0 otherwise
};

inline json to_json_value(const SolutionArchive& a) {
  return json{{"version", kVersion},
              {"ofdm", to_json_value(a.ofdm)},
              {"r", to_json_value(a.data.r)},
              {"s_hat", to_json_value(a.data.s_hat)},
              {"state", to_json_value(a.state)},
              {"rho", a.constants.rho},
              {"varrho", a.constants.varrho},
              {"lambda", a.constants.lambda},
              {"mu", a.constants.mu},
              {"algorithm", to_string(a.algorithm)},
              {"status", to_string(a.status)},
              {"iterations", a.iterations},
              {"k_expected", a.k_expected}};
}

inline SolutionArchive archive_from_json(const json& j) {
  SolutionArchive a;
  try {
    a.ofdm = ofdm_from_json(j.at("ofdm"));
    a.data.M = a.ofdm.M;
    a.data.N = a.ofdm.N;
    a.data.r = cvector_from_json(j.at("r"));
    a.data.s_hat = cvector_from_json(j.at("s_hat"));
    a.state = state_from_json(j.at("state"));
    a.constants.rho = get_req<double>(j, "rho");
    a.constants.varrho = get_req<double>(j, "varrho");
    a.constants.lambda = get_req<double>(j, "lambda");
    a.constants.mu = get_req<double>(j, "mu");
    a.algorithm = algorithm_from_string(get_req<std::string>(j, "algorithm"));
    const auto st = get_req<std::string>(j, "status");
    a.status = st == "converged" ? SolveStatus::converged
               : st == "max_iter" ? SolveStatus::max_iter
                                  : SolveStatus::numeric_failure;
    a.iterations = get_req<int>(j, "iterations");
    a.k_expected = get_or(j, "k_expected", 0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed solution archive: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed solution archive: ") + e.what());
  }
  if (a.data.r.size() != a.ofdm.size() || a.data.s_hat.size() != a.ofdm.size())
    throw ConfigError("solution archive data length does not match M*N");
  check_dims(a.state, a.data);
  return a;
}

// ---------------------------------------------------------------------------
// Spectrum and peaks

inline void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& sp, const Provenance& prov) {
  CsvWriter w(path, prov, {"phi", "psi", "value"});
  for (int i = 0; i < sp.grid_phi; ++i)
    for (int j = 0; j < sp.grid_psi; ++j) w.row({fmt(sp.phi(i)), fmt(sp.psi(j)), fmt(sp.at(i, j))});
}

/// Long-form (range, velocity, value), velocity from the signed Doppler branch.
inline void write_range_velocity_csv(const std::filesystem::path& path, const Spectrum& sp, const OfdmConfig& cfg,
                                     const Provenance& prov) {
  CsvWriter w(path, prov, {"range_m", "velocity_mps", "value"});
  for (int i = 0; i < sp.grid_phi; ++i) {
    Peak probe;
    probe.phi = sp.phi(i);
    const double v = peak_speed(probe, cfg);
    for (int j = 0; j < sp.grid_psi; ++j) {
      probe.psi = sp.psi(j);
      w.row({fmt(peak_range(probe, cfg)), fmt(v), fmt(sp.at(i, j))});
    }
  }
}

inline void write_peaks_csv(const std::filesystem::path& path, const std::vector<Peak>& peaks, const OfdmConfig& cfg,
                            const Provenance& prov) {
  CsvWriter w(path, prov,
              {"phi", "psi", "re_alpha", "im_alpha", "range_m", "velocity_mps", "class", "spectrum_value"});
  for (const auto& p : peaks)
    w.row({fmt(p.phi), fmt(p.psi), fmt(p.alpha.real()), fmt(p.alpha.imag()), fmt(peak_range(p, cfg)),
           fmt(peak_speed(p, cfg)), to_string(p.cls), fmt(p.value)});
}

}  // namespace anm
