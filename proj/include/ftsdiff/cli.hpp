#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ftsdiff/cli_config.hpp"
#include "ftsdiff/ftsdiff.hpp"

namespace fts::cli {

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open output file: " + path);
  out << text;
  if (!out) throw io_error("failed writing " + path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline FunctionalSeries load_series(const std::string& path,
                                    const RunConfig& cfg, std::ostream& log) {
  const CsvTable table = read_csv(path);
  const auto basis = cfg.basis_spec();
  require_config(table.values.cols() >= basis.dimension,
                 "input " + path + " has fewer grid points than --basis-dim");
  const Eigen::VectorXd grid =
      table.grid ? *table.grid
                 : basis.default_grid(static_cast<int>(table.values.cols()));
  if (table.values.rows() < 2) throw io_error("input too short: " + path);
  auto projection = project_to_basis(table.values, basis, grid);
  log << "loaded " << path << ": T=" << projection.series.length()
      << " d=" << basis.dimension
      << " round-trip error=" << format_sig12(projection.round_trip_rel_error)
      << "\n";
  return center(projection.series);
}

// --- gen -------------------------------------------------------------------

inline int cmd_gen(const RunConfig& cfg) {
  cfg.validate();
  require_config(!cfg.out.empty(), "--out is required for gen");
  const std::uint64_t seed = derive_seed(cfg.seed, "generation");
  if (cfg.scenario == "separable") {
    std::array<int, 3> axes_sizes{8, 8, 6};
    if (!cfg.sep_dims.empty()) {
      char c1 = 0, c2 = 0;
      std::istringstream ss(cfg.sep_dims);
      if (!(ss >> axes_sizes[0] >> c1 >> axes_sizes[1] >> c2 >>
            axes_sizes[2]) ||
          c1 != ':' || c2 != ':')
        throw config_error("--sep-dim must look like g1:g2:g3");
    }
    // param selects a direction whose shapes get unitarily mixed (0 = none).
    auto series = gen_separable_series(cfg.length, axes_sizes, seed,
                                       static_cast<int>(cfg.param));
    write_csv(cfg.out, series.data());
    Json axes;
    axes["axes"] = {series.sizes()[0], series.sizes()[1], series.sizes()[2]};
    write_json_file(cfg.out + ".axes.json", axes);
    std::cout << "wrote " << cfg.out << " (separable, T=" << cfg.length
              << ", axes " << axes_sizes[0] << "x" << axes_sizes[1] << "x"
              << axes_sizes[2] << ")\n";
    return 0;
  }
  const auto spec = ScenarioSpec::make(scenario_by_name(cfg.scenario),
                                       cfg.length, cfg.param, seed);
  Eigen::VectorXd grid =
      Eigen::VectorXd::LinSpaced(cfg.grid_points, 0.0, 1.0);
  Eigen::MatrixXd raw;
  if (spec.id == ScenarioId::bb_shift || spec.id == ScenarioId::bb_amplitude) {
    raw = gen_bb_raw(spec.length, spec.dimension,
                     spec.id == ScenarioId::bb_shift ? spec.param : 0.0,
                     spec.id == ScenarioId::bb_amplitude
                         ? std::pow(1.2, spec.param)
                         : 1.0,
                     seed, cfg.grid_points);
  } else {
    const auto series = generate_scenario(spec, false, seed);
    raw = reconstruct(series, grid);
  }
  write_csv(cfg.out, raw, grid);
  std::cout << "wrote " << cfg.out << " (" << cfg.scenario
            << ", param=" << format_sig12(cfg.param) << ", T=" << cfg.length
            << ")\n";
  return 0;
}

// --- estimate ---------------------------------------------------------------

inline int cmd_estimate(const RunConfig& cfg) {
  cfg.validate();
  const std::string input = cfg.input_x;
  require_config(!input.empty(), "--input is required");
  require_config(!cfg.out.empty(), "--out is required for estimate");
  const auto series = load_series(input, cfg, std::cerr);
  const auto est = cfg.estimation();
  const auto surface =
      spectral_surface(series, cfg.band_lo, cfg.band_hi, cfg.n_freq, {1.0},
                       est.window, est.bandwidth);
  const int k = std::min<int>(std::max(cfg.component, 3), series.dimension());
  const auto& row = surface.ops.front();

  Eigen::MatrixXd hs(static_cast<Eigen::Index>(row.size()), 2);
  Eigen::MatrixXd eigs(static_cast<Eigen::Index>(row.size()), k + 1);
  double mean_top = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    hs(idx, 0) = surface.freqs[i];
    hs(idx, 1) = hs_norm_sq(row[i]);
    const auto es = eigensystem(row[i], k);
    eigs(idx, 0) = surface.freqs[i];
    for (int j = 0; j < k; ++j) eigs(idx, j + 1) = es.eigenvalues[j];
    mean_top += es.eigenvalues[0];
  }
  mean_top /= static_cast<double>(row.size());

  std::string eig_header = "omega";
  for (int j = 1; j <= k; ++j) eig_header += ",lambda" + std::to_string(j);
  write_csv(cfg.out + ".hsnorm.csv", hs, {}, "omega,hs_norm_sq");
  write_csv(cfg.out + ".eigs.csv", eigs, {}, eig_header);

  Json summary;
  summary["input"] = input;
  summary["length"] = series.length();
  summary["bandwidth"] = round_sig12(surface.bandwidth);
  summary["mean_leading_eigenvalue"] = round_sig12(mean_top);
  summary["files"] = {cfg.out + ".hsnorm.csv", cfg.out + ".eigs.csv"};
  if (cfg.dump_ops) {
    Json ops = Json::array();
    for (std::size_t i = 0; i < row.size(); ++i) {
      Json op;
      op["omega"] = round_sig12(surface.freqs[i]);
      Json re = Json::array(), im = Json::array();
      for (Eigen::Index r = 0; r < row[i].entries.rows(); ++r) {
        Json rrow = Json::array(), irow = Json::array();
        for (Eigen::Index c = 0; c < row[i].entries.cols(); ++c) {
          rrow.push_back(round_sig12(row[i].entries(r, c).real()));
          irow.push_back(round_sig12(row[i].entries(r, c).imag()));
        }
        re.push_back(rrow);
        im.push_back(irow);
      }
      op["real"] = re;
      op["imag"] = im;
      ops.push_back(op);
    }
    write_json_file(cfg.out + ".ops.json", ops);
    summary["files"].push_back(cfg.out + ".ops.json");
  }
  summary["config"] = cfg.to_json();
  write_json_file(cfg.out + ".summary.json", summary);
  std::cout << "estimate: T=" << series.length()
            << " b=" << format_sig12(surface.bandwidth)
            << " mean leading eigenvalue=" << format_sig12(mean_top) << "\n";
  return 0;
}

// --- test --------------------------------------------------------------------

inline int cmd_test(const RunConfig& cfg) {
  cfg.validate();
  require_config(!cfg.input_x.empty() && !cfg.input_y.empty(),
                 "--input-x and --input-y are required");
  const auto hyp = cfg.hypothesis_spec();
  const auto x = load_series(cfg.input_x, cfg, std::cerr);
  const auto y = load_series(cfg.input_y, cfg, std::cerr);
  const auto pivot = ensure_pivot(cfg, std::cerr);
  const auto result = relevant_test(x, y, hyp, pivot.sample, cfg.estimation());

  std::cout << "hypothesis   " << to_string(result.kind);
  if (result.kind != HypothesisKind::operator_norm)
    std::cout << " (k=" << result.component << ")";
  std::cout << "\nband         [" << format_sig12(result.band_lo) << ", "
            << format_sig12(result.band_hi) << "]"
            << "\ndistance     " << format_sig12(result.distance)
            << "   delta " << format_sig12(result.threshold)
            << "\nstatistic    "
            << (std::isinf(result.statistic)
                    ? (result.statistic > 0 ? "+inf" : "-inf")
                    : format_sig12(result.statistic))
            << "   q(1-alpha) " << format_sig12(result.quantile)
            << "\np-value      " << format_sig12(result.p_value)
            << "\ndecision     " << to_string(result.decision)
            << (result.degenerate ? " (degenerate)" : "") << "\n";
  for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";

  if (!cfg.out.empty()) {
    Json j = test_result_json(result);
    j["config"] = cfg.to_json();
    write_json_file(cfg.out, j);
  }
  return 0;
}

// --- pivot -------------------------------------------------------------------

inline int cmd_pivot(const RunConfig& cfg, const std::vector<double>& alphas) {
  cfg.validate();
  for (double a : alphas)
    require_config(a > 0.0 && a < 1.0, "--alpha must lie in (0,1)");
  const auto pivot = ensure_pivot(cfg, std::cerr);
  std::cout << (pivot.cache_hit ? "pivot cache hit" : "pivot sample generated")
            << ": nu_n=" << cfg.nu_n << " paths=" << cfg.pivot_paths
            << " steps=" << cfg.pivot_steps << "\n";
  Json table = Json::array();
  for (double a : alphas) {
    const double q = quantile(pivot.sample, 1.0 - a);
    std::cout << "q(1-" << format_sig12(a) << ") = " << format_sig12(q)
              << "\n";
    Json row;
    row["alpha"] = round_sig12(a);
    row["quantile"] = round_sig12(q);
    table.push_back(row);
  }
  if (!cfg.out.empty()) {
    Json j;
    j["quantiles"] = table;
    j["cache_hit"] = pivot.cache_hit;
    j["config"] = cfg.to_json();
    write_json_file(cfg.out, j);
  }
  return 0;
}

// --- experiment ---------------------------------------------------------------

namespace detail {

inline std::string config_hash(const Json& j) {
  // FNV-1a over the dumped config; names the resume file.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : j.dump()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::ostringstream s;
  s << std::hex << h;
  return s.str();
}

inline Json row_json(const ExperimentRow& row) {
  Json j;
  j["scenario"] = to_string(row.id);
  j["param"] = round_sig12(row.param);
  j["length"] = row.length;
  j["reps"] = row.reps;
  j["rejections"] = row.rejections;
  j["rate"] = round_sig12(row.rate);
  j["std_error"] = round_sig12(row.std_error);
  j["failed"] = row.failed;
  if (row.failed) j["error"] = row.error;
  return j;
}

}  // namespace detail

inline int cmd_experiment(const RunConfig& cfg) {
  cfg.validate();
  require_config(!cfg.out.empty(), "--out is required for experiment");
  const auto id = scenario_by_name(cfg.scenario);
  std::vector<double> params = cfg.params;
  if (params.empty()) params = {cfg.param};
  std::vector<long> lengths = cfg.lengths;
  if (lengths.empty()) lengths = {cfg.length};

  HypothesisSpec hyp = cfg.hypothesis_spec();
  if (std::isfinite(cfg.delta_boundary)) {
    // Threshold from the population oracle at the requested boundary value.
    hyp.threshold = population_threshold(
        ScenarioSpec::make(id, lengths.front(), cfg.delta_boundary, 0),
        hyp.kind, hyp.component, hyp.band_lo, hyp.band_hi, cfg.n_freq);
    std::cerr << "delta from oracle at param=" << format_sig12(cfg.delta_boundary)
              << ": " << format_sig12(hyp.threshold) << "\n";
  }

  std::vector<ScenarioSpec> grid;
  for (long t : lengths)
    for (double p : params) grid.push_back(ScenarioSpec::make(id, t, p, 0));

  const std::uint64_t master = derive_seed(cfg.seed, "experiment");
  const auto pivot = ensure_pivot(cfg, std::cerr);

  // Per-point resume state lives in the cache dir, keyed by the resolved
  // config (outputs and threads do not affect results and are excluded).
  Json key = cfg.to_json();
  key.erase("inputs");
  key.erase("input_x");
  key.erase("input_y");
  if (std::isfinite(cfg.delta_boundary))
    key["delta"] = round_sig12(hyp.threshold);
  std::string progress_path;
  std::map<std::size_t, ExperimentRow> done;
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    progress_path = (std::filesystem::path(cfg.cache_dir) /
                     ("experiment_" + detail::config_hash(key) + ".progress"))
                        .string();
    std::ifstream in(progress_path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        Json j = Json::parse(line);
        ExperimentRow row;
        row.id = scenario_by_name(j.at("row").at("scenario").get<std::string>());
        row.param = j.at("row").at("param").get<double>();
        row.length = j.at("row").at("length").get<long>();
        row.reps = j.at("row").at("reps").get<int>();
        row.rejections = j.at("row").at("rejections").get<int>();
        row.rate = j.at("row").at("rate").get<double>();
        row.std_error = j.at("row").at("std_error").get<double>();
        row.failed = j.at("row").at("failed").get<bool>();
        if (row.failed) row.error = j.at("row").at("error").get<std::string>();
        done[j.at("point").get<std::size_t>()] = row;
      } catch (const std::exception&) {
        // Unreadable progress lines are dropped; their points rerun.
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.hypothesis = hyp;
  report.master_seed = master;
  report.reps = cfg.reps;
  int succeeded = 0;
  std::ofstream progress;
  if (!progress_path.empty())
    progress.open(progress_path, std::ios::app);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ExperimentRow row;
    auto hit = done.find(i);
    if (hit != done.end()) {
      row = hit->second;
      std::cerr << "point " << i << " restored from progress file\n";
    } else {
      try {
        row = experiment_point(grid[i], hyp, cfg.estimation(), cfg.reps,
                               pivot.sample, master, i);
      } catch (const std::exception& e) {
        row.id = grid[i].id;
        row.param = grid[i].param;
        row.length = grid[i].length;
        row.reps = cfg.reps;
        row.failed = true;
        row.error = e.what();
      }
      if (progress.is_open()) {
        Json j;
        j["point"] = i;
        j["row"] = detail::row_json(row);
        progress << j.dump() << "\n" << std::flush;
      }
    }
    if (!row.failed) ++succeeded;
    report.rows.push_back(row);
    std::cerr << "point " << i << "/" << grid.size() << " "
              << to_string(row.id) << " param=" << format_sig12(row.param)
              << " T=" << row.length
              << (row.failed ? " FAILED: " + row.error
                             : " rate=" + format_sig12(row.rate))
              << "\n";
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  // CSV: one row per grid point.
  std::ostringstream csv;
  csv << "scenario,param,length,reps,rejections,rate,std_error,failed\n";
  for (const auto& row : report.rows) {
    csv << to_string(row.id) << ',' << format_sig12(row.param) << ','
        << row.length << ',' << row.reps << ',' << row.rejections << ','
        << format_sig12(row.rate) << ',' << format_sig12(row.std_error) << ','
        << (row.failed ? 1 : 0) << "\n";
  }
  write_text_file(cfg.out + ".csv", csv.str());

  Json j;
  Json rows = Json::array();
  for (const auto& row : report.rows) rows.push_back(detail::row_json(row));
  j["rows"] = rows;
  j["delta"] = round_sig12(hyp.threshold);
  j["master_seed"] = master;
  j["config"] = cfg.to_json();
  write_json_file(cfg.out + ".json", j);
  std::cerr << "experiment finished in "
            << format_sig12(report.runtime_seconds) << " s\n";
  std::cout << "experiment: " << succeeded << "/" << grid.size()
            << " grid points succeeded; report at " << cfg.out << ".csv\n";
  return succeeded > 0 ? 0 : 3;
}

// --- separable -----------------------------------------------------------------

namespace detail {

inline std::array<int, 3> parse_dims(const std::string& text,
                                     const std::array<int, 3>& sizes,
                                     const std::string& sep_basis) {
  std::array<int, 3> dims{};
  if (!text.empty()) {
    int parsed[3];
    char c1, c2;
    std::istringstream ss(text);
    if (ss >> parsed[0] >> c1 >> parsed[1] >> c2 >> parsed[2] && c1 == ':' &&
        c2 == ':') {
      for (int i = 0; i < 3; ++i) dims[static_cast<std::size_t>(i)] = parsed[i];
      return dims;
    }
    throw config_error("--sep-dim must look like d1:d2:d3");
  }
  for (int i = 0; i < 3; ++i) {
    const int g = sizes[static_cast<std::size_t>(i)];
    dims[static_cast<std::size_t>(i)] =
        sep_basis == "raw-grid" ? g : std::min(g, 8);
  }
  return dims;
}

inline SeparableSeries3D load_separable(const std::string& path,
                                        const RunConfig& cfg) {
  const std::string sidecar = path + ".axes.json";
  std::ifstream meta(sidecar);
  if (!meta)
    throw config_error("axis metadata missing: expected sidecar " + sidecar);
  std::array<int, 3> sizes{};
  try {
    Json j;
    meta >> j;
    const auto axes = j.at("axes");
    for (int i = 0; i < 3; ++i)
      sizes[static_cast<std::size_t>(i)] = axes.at(i).get<int>();
  } catch (const std::exception& e) {
    throw config_error("unreadable axis metadata in " + sidecar + ": " +
                       e.what());
  }
  const CsvTable table = read_csv(path);
  std::string basis_kind = cfg.sep_basis;
  if (basis_kind == "auto")
    basis_kind = *std::min_element(sizes.begin(), sizes.end()) >= 4
                     ? "bspline"
                     : "raw-grid";
  const auto dims = parse_dims(cfg.sep_dims, sizes, basis_kind);
  std::array<BasisSpec, 3> bases = [&] {
    std::array<BasisSpec, 3> out{BasisSpec::raw_grid(sizes[0]),
                                 BasisSpec::raw_grid(sizes[1]),
                                 BasisSpec::raw_grid(sizes[2])};
    for (int i = 0; i < 3; ++i) {
      const auto u = static_cast<std::size_t>(i);
      require_config(dims[u] >= 1 && dims[u] <= sizes[u],
                     "--sep-dim entries must lie in [1, axis size]");
      if (basis_kind == "bspline")
        out[u] = BasisSpec::bspline(dims[u]);
      else if (basis_kind == "raw-grid")
        out[u] = BasisSpec::raw_grid(sizes[u]);
      else
        throw config_error("--sep-basis must be bspline, raw-grid or auto");
    }
    return out;
  }();
  SeparableSeries3D series(table.values, sizes, bases);
  if (cfg.detrend) return detrend_cubic(series);
  return series;
}

inline std::vector<std::pair<int, int>> parse_pairs(const std::string& text,
                                                    int subjects) {
  std::vector<std::pair<int, int>> pairs;
  if (text.empty()) {
    for (int i = 1; i <= subjects; ++i)
      for (int j = i + 1; j <= subjects; ++j) pairs.push_back({i, j});
    return pairs;
  }
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int a = 0, b = 0;
    char c = 0;
    std::istringstream ps(item);
    if (!(ps >> a >> c >> b) || c != ':')
      throw config_error("--pairs must look like 1:2,1:3");
    require_config(a >= 1 && b >= 1 && a <= subjects && b <= subjects &&
                       a != b,
                   "--pairs indices must name distinct subjects");
    if (a > b) std::swap(a, b);
    pairs.push_back({a, b});
  }
  return pairs;
}

}  // namespace detail

inline int cmd_separable(const RunConfig& cfg) {
  cfg.validate();
  require_config(cfg.inputs.size() >= 2,
                 "separable needs at least two --input files");
  require_config(!cfg.out.empty(), "--out is required for separable");
  const auto hyp = cfg.hypothesis_spec();
  const auto pairs =
      detail::parse_pairs(cfg.pairs, static_cast<int>(cfg.inputs.size()));
  const auto pivot = ensure_pivot(cfg, std::cerr);

  const auto fractions = hyp.fraction_grid();
  const auto est = cfg.estimation();
  std::vector<DirectionalSurfaces> surfaces;
  std::vector<Eigen::Index> lengths;
  for (const auto& path : cfg.inputs) {
    auto series = detail::load_separable(path, cfg);
    lengths.push_back(series.length());
    surfaces.push_back(separable_surfaces(series, cfg.band_lo, cfg.band_hi,
                                          cfg.n_freq, fractions, est.window,
                                          est.bandwidth));
    std::cerr << "loaded subject " << surfaces.size() << " from " << path
              << " (T=" << series.length() << ")\n";
  }

  // Per-direction full-sample summary and the merged eigenvalue table with
  // floor(T^(1/3)) components per direction.
  std::ostringstream dir_csv;
  dir_csv << "subject,direction,omega,hs_norm_sq\n";
  std::ostringstream kron_csv;
  kron_csv << "subject,rank,mean_value\n";
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    const auto& surf = surfaces[s];
    const std::size_t last = surf.dirs[0].fractions.size() - 1;
    for (int dir = 0; dir < 3; ++dir) {
      const auto& se = surf.dirs[static_cast<std::size_t>(dir)];
      for (std::size_t wi = 0; wi < se.freqs.size(); ++wi)
        dir_csv << (s + 1) << ',' << (dir + 1) << ','
                << format_sig12(se.freqs[wi]) << ','
                << format_sig12(hs_norm_sq(se.ops[last][wi])) << "\n";
    }
    const double t13 = std::floor(
        std::cbrt(static_cast<double>(lengths[s])) + 1e-9);
    std::array<int, 3> per_dir{};
    int top_n = 1;
    for (int dir = 0; dir < 3; ++dir) {
      const auto u = static_cast<std::size_t>(dir);
      per_dir[u] = std::min<int>(
          static_cast<int>(surf.dirs[u].ops[last][0].dim()),
          std::max(1, static_cast<int>(t13)));
      top_n *= per_dir[u];
    }
    std::vector<double> mean_values(static_cast<std::size_t>(top_n), 0.0);
    for (std::size_t wi = 0; wi < surf.dirs[0].freqs.size(); ++wi) {
      std::array<EigenSystem, 3> es;
      for (int dir = 0; dir < 3; ++dir) {
        const auto u = static_cast<std::size_t>(dir);
        es[u] = eigensystem(surf.dirs[u].ops[last][wi], per_dir[u]);
      }
      const auto merged = kronecker_eigensystem(es[0], es[1], es[2], top_n);
      for (int r = 0; r < top_n; ++r)
        mean_values[static_cast<std::size_t>(r)] +=
            merged.values[static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < top_n; ++r)
      kron_csv << (s + 1) << ',' << (r + 1) << ','
               << format_sig12(mean_values[static_cast<std::size_t>(r)] /
                               static_cast<double>(surf.dirs[0].freqs.size()))
               << "\n";
  }
  write_text_file(cfg.out + ".directional.csv", dir_csv.str());
  write_text_file(cfg.out + ".kron.csv", kron_csv.str());

  // Pairwise tests; the p-value matrix prints as an upper triangle.
  const int n = static_cast<int>(cfg.inputs.size());
  std::vector<std::vector<double>> pmat(
      static_cast<std::size_t>(n),
      std::vector<double>(static_cast<std::size_t>(n),
                          std::numeric_limits<double>::quiet_NaN()));
  Json tests = Json::array();
  for (const auto& [a, b] : pairs) {
    const auto result =
        relevant_test_separable(surfaces[static_cast<std::size_t>(a - 1)],
                                surfaces[static_cast<std::size_t>(b - 1)], hyp,
                                pivot.sample);
    pmat[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] =
        result.p_value;
    Json entry = test_result_json(result);
    entry["pair"] = {a, b};
    tests.push_back(entry);
  }

  std::ostringstream mat_csv;
  mat_csv << "subject";
  for (int j = 2; j <= n; ++j) mat_csv << ',' << j;
  mat_csv << "\n";
  std::cout << "p-values (" << to_string(hyp.kind) << ", delta="
            << format_sig12(hyp.threshold) << "):\n      ";
  for (int j = 2; j <= n; ++j) std::cout << "      " << j;
  std::cout << "\n";
  for (int i = 1; i <= n - 1; ++i) {
    mat_csv << i;
    std::cout << "  " << i << "  ";
    for (int j = 2; j <= n; ++j) {
      const double p =
          pmat[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      mat_csv << ',';
      if (j > i && !std::isnan(p)) {
        mat_csv << format_sig12(p);
        char buf[16];
        std::snprintf(buf, sizeof(buf), " %6.3f", p);
        std::cout << buf;
      } else {
        std::cout << "       ";
      }
    }
    mat_csv << "\n";
    std::cout << "\n";
  }
  write_text_file(cfg.out + ".pvalues.csv", mat_csv.str());

  Json j;
  j["tests"] = tests;
  j["files"] = {cfg.out + ".directional.csv", cfg.out + ".kron.csv",
                cfg.out + ".pvalues.csv"};
  j["config"] = cfg.to_json();
  write_json_file(cfg.out + ".json", j);
  return 0;
}

// --- entry point ----------------------------------------------------------------

inline int dispatch(const std::string& command, RunConfig& cfg,
                    const std::vector<double>& alphas) {
  if (cfg.threads > 0) max_threads() = cfg.threads;
  if (command == "gen") return cmd_gen(cfg);
  if (command == "estimate") return cmd_estimate(cfg);
  if (command == "test") return cmd_test(cfg);
  if (command == "pivot") return cmd_pivot(cfg, alphas);
  if (command == "experiment") return cmd_experiment(cfg);
  if (command == "separable") return cmd_separable(cfg);
  throw config_error("unknown command: " + command);
}

inline int run_cli(int argc, char** argv) {
  CLI::App app{
      "ftsdiff: relevant-difference tests for the second-order frequency "
      "domain structure of two functional time series"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string band_text, config_file;
  std::vector<double> alphas;

  auto add_common = [&](CLI::App* sub, bool with_pivot = true) {
    sub->add_option("--band", band_text, "frequency band a:b (default 0:pi)");
    sub->add_option("--window", cfg.window,
                    "lag window: daniell|bartlett|parzen");
    sub->add_option("--bandwidth-exp", cfg.bandwidth_exp,
                    "bandwidth exponent: b = T^-exp");
    sub->add_option("--bandwidth", cfg.bandwidth_fixed,
                    "fixed bandwidth (overrides --bandwidth-exp)");
    sub->add_option("--nfreq", cfg.n_freq, "frequency grid size");
    sub->add_option("--nu-n", cfg.nu_n, "self-normalization grid size n");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--threads", cfg.threads, "worker cap (0 = hardware)");
    sub->add_option("--out", cfg.out, "output path (or prefix)");
    sub->add_option("--cache-dir", cfg.cache_dir, "cache directory");
    sub->add_option("--config", config_file,
                    "load a result/config JSON; other flags are ignored "
                    "except --out, --threads, --cache-dir");
    if (with_pivot) {
      sub->add_option("--pivot-paths", cfg.pivot_paths,
                      "Monte Carlo paths for the pivot law");
      sub->add_option("--pivot-steps", cfg.pivot_steps,
                      "Brownian steps per path");
    }
  };
  auto add_hypothesis = [&](CLI::App* sub) {
    sub->add_option("--hypothesis", cfg.hypothesis,
                    "operator|projector|eigenvalue");
    sub->add_option("--k", cfg.component, "eigen component index");
    sub->add_option("--delta", cfg.delta, "relevance threshold (band-averaged)");
    sub->add_option("--alpha", cfg.alpha, "test level");
    sub->add_flag("--dependent", cfg.dependent,
                  "the two samples are dependent (requires T1 = T2)");
  };
  auto add_basis = [&](CLI::App* sub) {
    sub->add_option("--basis", cfg.basis, "projection basis: fourier|bspline");
    sub->add_option("--basis-dim", cfg.basis_dim, "basis dimension");
  };

  auto* gen = app.add_subcommand("gen", "generate scenario data as CSV");
  gen->add_option("--scenario", cfg.scenario,
                  "bb-shift|bb-amplitude|ar-shift|ar-dependence|separable");
  gen->add_option("--param", cfg.param, "scenario parameter");
  gen->add_option("--length", cfg.length, "sample length T");
  gen->add_option("--grid-points", cfg.grid_points, "grid resolution");
  gen->add_option("--sep-dim", cfg.sep_dims,
                  "separable axis sizes g1:g2:g3 (separable only)");
  add_common(gen, false);

  auto* est = app.add_subcommand("estimate", "spectral summary of one sample");
  est->add_option("--input", cfg.input_x, "input CSV (rows = time)");
  est->add_option("--k", cfg.component, "eigenvalues reported per frequency");
  est->add_flag("--dump-ops", cfg.dump_ops, "also dump raw operators as JSON");
  add_basis(est);
  add_common(est, false);

  auto* test = app.add_subcommand("test", "relevant-difference test");
  test->add_option("--input-x", cfg.input_x, "first sample CSV");
  test->add_option("--input-y", cfg.input_y, "second sample CSV");
  add_hypothesis(test);
  add_basis(test);
  add_common(test);

  auto* pivot = app.add_subcommand("pivot", "pivot-law quantile table");
  pivot->add_option("--alpha", alphas, "levels to report (repeatable)");
  add_common(pivot);

  auto* exp = app.add_subcommand("experiment", "empirical rejection rates");
  exp->add_option("--scenario", cfg.scenario,
                  "bb-shift|bb-amplitude|ar-shift|ar-dependence");
  exp->add_option("--params", cfg.params, "scenario parameter grid");
  exp->add_option("--lengths", cfg.lengths, "sample length grid");
  exp->add_option("--reps", cfg.reps, "replications per grid point");
  exp->add_option("--delta-boundary", cfg.delta_boundary,
                  "derive --delta from the population oracle at this "
                  "parameter value");
  add_hypothesis(exp);
  add_common(exp);

  auto* sep = app.add_subcommand("separable",
                                 "pairwise tests for 3-D separable samples");
  sep->add_option("--input", cfg.inputs,
                  "subject CSV (repeat; needs <file>.axes.json sidecar)");
  sep->add_option("--sep-basis", cfg.sep_basis, "bspline|raw-grid|auto");
  sep->add_option("--sep-dim", cfg.sep_dims, "per-direction dims d1:d2:d3");
  sep->add_flag("--detrend", cfg.detrend,
                "remove a cubic trend from every voxel series");
  sep->add_option("--pairs", cfg.pairs, "pair list like 1:2,1:3 (default all)");
  add_hypothesis(sep);
  add_common(sep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    if (!config_file.empty()) {
      const std::string out = cfg.out;
      const std::string cache = cfg.cache_dir;
      const int threads = cfg.threads;
      cfg = load_config_file(config_file);
      cfg.out = out;
      if (!cache.empty()) cfg.cache_dir = cache;
      cfg.threads = threads;
    } else if (!band_text.empty()) {
      double lo = 0.0, hi = 0.0;
      char c = 0;
      std::istringstream ss(band_text);
      if (!(ss >> lo >> c >> hi) || c != ':')
        throw config_error("--band must look like a:b, e.g. 0:3.14159");
      cfg.band_lo = lo;
      cfg.band_hi = hi;
    }
    if (alphas.empty()) alphas = {cfg.alpha};
    return dispatch(command, cfg, alphas);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace fts::cli
