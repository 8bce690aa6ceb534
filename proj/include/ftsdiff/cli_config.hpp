#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftsdiff/csv.hpp"
#include "ftsdiff/errors.hpp"
#include "ftsdiff/hypothesis.hpp"
#include "ftsdiff/pivot.hpp"
#include "ftsdiff/rng.hpp"
#include "ftsdiff/simlab.hpp"

namespace fts::cli {

using Json = nlohmann::ordered_json;

// Everything a run needs, resolved from flags (or reloaded from a result
// file). A result file embeds the resolved config, and rerunning from that
// embedded config reproduces the result byte for byte.
struct RunConfig {
  // estimation
  std::string window = "daniell";
  double bandwidth_exp = 1.0 / 3.0;
  double bandwidth_fixed = 0.0;  // 0 means: use the power law
  double band_lo = 0.0;
  double band_hi = M_PI;
  int n_freq = 64;
  std::string basis = "fourier";
  int basis_dim = 21;
  // hypothesis
  std::string hypothesis = "operator";
  int component = 1;
  double delta = 0.0;
  double alpha = 0.05;
  int nu_n = 20;
  bool dependent = false;
  // pivot
  long pivot_paths = 50000;
  long pivot_steps = 10000;
  // scenario / experiment
  std::string scenario = "bb-shift";
  double param = 0.0;
  std::vector<double> params;
  std::vector<long> lengths;
  long length = 256;
  int reps = 500;
  double delta_boundary = std::numeric_limits<double>::quiet_NaN();
  int grid_points = 1000;
  // separable
  std::string sep_basis = "auto";
  std::string sep_dims = "";
  std::string pairs = "";
  bool detrend = false;
  // io / misc
  std::vector<std::string> inputs;
  std::string input_x, input_y;
  std::string out;
  std::string cache_dir;
  std::uint64_t seed = 20220211;
  int threads = 0;
  int dump_ops = 0;

  WindowSpec window_spec() const { return WindowSpec::by_name(window); }

  BandwidthRule bandwidth_rule() const {
    if (bandwidth_fixed > 0.0) return BandwidthRule::fixed(bandwidth_fixed);
    return BandwidthRule::power_law(bandwidth_exp);
  }

  EstimationConfig estimation() const {
    EstimationConfig est;
    est.window = window_spec();
    est.bandwidth = bandwidth_rule();
    est.n_freq = n_freq;
    return est;
  }

  HypothesisKind hypothesis_kind() const {
    if (hypothesis == "operator") return HypothesisKind::operator_norm;
    if (hypothesis == "projector") return HypothesisKind::eigenprojector;
    if (hypothesis == "eigenvalue") return HypothesisKind::eigenvalue;
    throw config_error("--hypothesis must be operator, projector or eigenvalue");
  }

  HypothesisSpec hypothesis_spec() const {
    HypothesisSpec h;
    h.kind = hypothesis_kind();
    h.component = component;
    h.threshold = delta;
    h.band_lo = band_lo;
    h.band_hi = band_hi;
    h.alpha = alpha;
    h.nu_n = nu_n;
    h.dependence =
        dependent ? DependenceMode::dependent : DependenceMode::independent;
    h.validate();
    return h;
  }

  BasisSpec basis_spec() const {
    if (basis == "fourier") return BasisSpec::fourier(basis_dim);
    if (basis == "bspline") return BasisSpec::bspline(basis_dim);
    throw config_error("--basis must be fourier or bspline");
  }

  // Field-level validation; violations exit with code 2.
  void validate() const {
    require_config(band_lo >= 0.0 && band_hi <= M_PI + 1e-12 &&
                       band_lo <= band_hi,
                   "--band must satisfy 0 <= a <= b <= pi");
    require_config(n_freq >= 1, "--nfreq must be >= 1");
    require_config(nu_n >= 3, "--nu-n must be >= 3");
    require_config(alpha > 0.0 && alpha < 1.0, "--alpha must lie in (0,1)");
    require_config(delta >= 0.0, "--delta must be >= 0");
    require_config(component >= 1, "--k must be >= 1");
    require_config(pivot_paths >= 1000, "--pivot-paths must be >= 1000");
    require_config(pivot_steps >= nu_n && pivot_steps % nu_n == 0,
                   "--pivot-steps must be a positive multiple of --nu-n");
    require_config(basis_dim >= 1, "--basis-dim must be >= 1");
    require_config(threads >= 0, "--threads must be >= 0");
    require_config(reps >= 50, "--reps must be >= 50");
    require_config(grid_points >= 16, "--grid-points must be >= 16");
    require_config(length >= 8, "--length must be >= 8");
    window_spec();
    bandwidth_rule();
  }

  // Config fields are serialized at full precision (results are rounded,
  // inputs are not): reloading the embedded config must reproduce the run
  // bit for bit, and e.g. rounding band_hi = pi would shift the grid.
  Json to_json() const {
    Json j;
    j["window"] = window;
    j["bandwidth_exp"] = bandwidth_exp;
    j["bandwidth_fixed"] = bandwidth_fixed;
    j["band_lo"] = band_lo;
    j["band_hi"] = band_hi;
    j["n_freq"] = n_freq;
    j["basis"] = basis;
    j["basis_dim"] = basis_dim;
    j["hypothesis"] = hypothesis;
    j["k"] = component;
    j["delta"] = delta;
    j["alpha"] = alpha;
    j["nu_n"] = nu_n;
    j["dependent"] = dependent;
    j["pivot_paths"] = pivot_paths;
    j["pivot_steps"] = pivot_steps;
    j["scenario"] = scenario;
    j["param"] = param;
    j["params"] = params;
    j["lengths"] = lengths;
    j["length"] = length;
    j["reps"] = reps;
    if (std::isfinite(delta_boundary)) j["delta_boundary"] = delta_boundary;
    j["grid_points"] = grid_points;
    j["sep_basis"] = sep_basis;
    j["sep_dims"] = sep_dims;
    j["pairs"] = pairs;
    j["detrend"] = detrend;
    j["inputs"] = inputs;
    j["input_x"] = input_x;
    j["input_y"] = input_y;
    j["seed"] = seed;
    j["dump_ops"] = dump_ops;
    return j;
  }

  static RunConfig from_json(const Json& j) {
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("window", c.window);
    get("bandwidth_exp", c.bandwidth_exp);
    get("bandwidth_fixed", c.bandwidth_fixed);
    get("band_lo", c.band_lo);
    get("band_hi", c.band_hi);
    get("n_freq", c.n_freq);
    get("basis", c.basis);
    get("basis_dim", c.basis_dim);
    get("hypothesis", c.hypothesis);
    get("k", c.component);
    get("delta", c.delta);
    get("alpha", c.alpha);
    get("nu_n", c.nu_n);
    get("dependent", c.dependent);
    get("pivot_paths", c.pivot_paths);
    get("pivot_steps", c.pivot_steps);
    get("scenario", c.scenario);
    get("param", c.param);
    get("params", c.params);
    get("lengths", c.lengths);
    get("length", c.length);
    get("reps", c.reps);
    if (j.contains("delta_boundary"))
      c.delta_boundary = j.at("delta_boundary").get<double>();
    get("grid_points", c.grid_points);
    get("sep_basis", c.sep_basis);
    get("sep_dims", c.sep_dims);
    get("pairs", c.pairs);
    get("detrend", c.detrend);
    get("inputs", c.inputs);
    get("input_x", c.input_x);
    get("input_y", c.input_y);
    get("seed", c.seed);
    get("dump_ops", c.dump_ops);
    return c;
  }
};

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw io_error("cannot parse config file " + path + ": " + e.what());
  }
  if (j.contains("config")) j = j.at("config");
  try {
    return RunConfig::from_json(j);
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid config file field: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pivot cache: a self-describing text file, one draw per line after a JSON
// header recording all parameters. %.17g round-trips doubles exactly, so a
// cache hit reproduces the simulated sample bit for bit.

inline std::string pivot_cache_name(int nu_n, long n_paths, long n_steps,
                                    std::uint64_t seed) {
  std::ostringstream name;
  name << "pivot_n" << nu_n << "_p" << n_paths << "_s" << n_steps << "_x"
       << std::hex << seed << ".txt";
  return name.str();
}

inline void write_pivot_cache(const std::string& path,
                              const PivotSample& sample) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write pivot cache: " + path);
  Json header;
  header["nu_n"] = sample.nu_n;
  header["n_paths"] = sample.n_paths;
  header["n_steps"] = sample.n_steps;
  header["seed"] = sample.seed;
  out << "# ftsdiff pivot cache v1\n" << header.dump() << "\n";
  char buf[40];
  for (double d : sample.draws) {
    std::snprintf(buf, sizeof(buf), "%.17g", d);
    out << buf << '\n';
  }
  if (!out) throw io_error("failed writing pivot cache: " + path);
}

inline std::optional<PivotSample> load_pivot_cache(const std::string& path,
                                                   int nu_n, long n_paths,
                                                   long n_steps,
                                                   std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "# ftsdiff pivot cache v1")
    return std::nullopt;
  if (!std::getline(in, line)) return std::nullopt;
  PivotSample sample;
  try {
    Json header = Json::parse(line);
    sample.nu_n = header.at("nu_n").get<int>();
    sample.n_paths = header.at("n_paths").get<long>();
    sample.n_steps = header.at("n_steps").get<long>();
    sample.seed = header.at("seed").get<std::uint64_t>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (sample.nu_n != nu_n || sample.n_paths != n_paths ||
      sample.n_steps != n_steps || sample.seed != seed)
    return std::nullopt;
  sample.draws.reserve(static_cast<std::size_t>(sample.n_paths));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      if (used == 0 || !std::isfinite(v)) return std::nullopt;
      sample.draws.push_back(v);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (static_cast<long>(sample.draws.size()) != sample.n_paths)
    return std::nullopt;
  return sample;
}

struct PivotHandle {
  PivotSample sample;
  bool cache_hit = false;
};

// All pivot randomness flows from the run seed through the "pivot" stream.
inline std::uint64_t pivot_stream_seed(std::uint64_t run_seed) {
  return derive_seed(run_seed, "pivot");
}

inline PivotHandle ensure_pivot(const RunConfig& cfg, std::ostream& log) {
  const std::uint64_t seed = pivot_stream_seed(cfg.seed);
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    const auto path =
        std::filesystem::path(cfg.cache_dir) /
        pivot_cache_name(cfg.nu_n, cfg.pivot_paths, cfg.pivot_steps, seed);
    const bool existed = std::filesystem::exists(path);
    auto cached = load_pivot_cache(path.string(), cfg.nu_n, cfg.pivot_paths,
                                   cfg.pivot_steps, seed);
    if (cached) return PivotHandle{std::move(*cached), true};
    if (existed)
      log << "warning: pivot cache " << path.string()
          << " unreadable or stale; regenerating\n";
    auto sample = simulate_pivot(cfg.nu_n, cfg.pivot_paths, cfg.pivot_steps,
                                 seed);
    write_pivot_cache(path.string(), sample);
    return PivotHandle{std::move(sample), false};
  }
  return PivotHandle{
      simulate_pivot(cfg.nu_n, cfg.pivot_paths, cfg.pivot_steps, seed), false};
}

inline Json json_number(double x) {
  // JSON has no +-inf; the degenerate statistic sentinels become strings.
  if (std::isinf(x)) return Json(x > 0 ? "+inf" : "-inf");
  return Json(round_sig12(x));
}

inline Json test_result_json(const TestResult& r) {
  Json j;
  j["hypothesis"] = to_string(r.kind);
  j["k"] = r.component;
  j["decision"] = to_string(r.decision);
  j["degenerate"] = r.degenerate;
  j["statistic"] = json_number(r.statistic);
  j["p_value"] = round_sig12(r.p_value);
  j["distance"] = round_sig12(r.distance);
  j["distance_integral"] = round_sig12(r.distance_integral);
  j["self_normalizer"] = round_sig12(r.self_norm);
  j["delta"] = round_sig12(r.threshold);
  j["quantile"] = round_sig12(r.quantile);
  j["alpha"] = round_sig12(r.alpha);
  j["band"] = {round_sig12(r.band_lo), round_sig12(r.band_hi)};
  j["nu_n"] = r.nu_n;
  j["length_x"] = r.length_x;
  j["length_y"] = r.length_y;
  j["bandwidth_x"] = round_sig12(r.bandwidth_x);
  j["bandwidth_y"] = round_sig12(r.bandwidth_y);
  j["pivot_seed"] = r.pivot_seed;
  j["pivot_paths"] = r.pivot_paths;
  // distance and delta are squared Hilbert-Schmidt (or squared eigenvalue)
  // distances averaged over the band; distance_integral is the raw band
  // integral.
  j["units"] = "band-averaged squared distance per unit frequency";
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace fts::cli
