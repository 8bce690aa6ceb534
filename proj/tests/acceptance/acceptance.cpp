// Acceptance suite: the shipping gate. Each test case checks one numbered
// criterion end to end at its stated tolerance and prints a PASS/FAIL line.

#include <catch2/catch_amalgamated.hpp>

#include "ftsdiff/ftsdiff.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fts;

namespace {

EstimationConfig default_est() { return EstimationConfig{}; }

PivotSample shared_pivot() {
  static PivotSample pivot = simulate_pivot(20, 50000, 2000, 2021);
  return pivot;
}

}  // namespace

TEST_CASE("criterion 1: boundary level in the amplitude scenario") {
  bool ok = true;
  const double delta = population_threshold(
      ScenarioId::bb_amplitude, 0.0, 3.0, HypothesisKind::operator_norm, 1);
  ACHECK(ok, std::abs(delta - 0.044) / 0.044 < 0.10);
  HypothesisSpec hyp;
  hyp.kind = HypothesisKind::operator_norm;
  hyp.threshold = delta;
  hyp.alpha = 0.05;
  hyp.nu_n = 20;
  const auto row = experiment_point(
      ScenarioSpec::make(ScenarioId::bb_amplitude, 256, 3.0, 0), hyp,
      default_est(), 500, shared_pivot(), 910, 0);
  ACHECK(ok, row.rate >= 0.02);
  ACHECK(ok, row.rate <= 0.10);
  acceptance::report(1, "boundary rejection rate in [0.02, 0.10] "
                        "(observed " + format_sig12(row.rate) + ")", ok);
}

TEST_CASE("criterion 2: interior of the null in the shift scenario") {
  bool ok = true;
  const double delta = population_threshold(
      ScenarioId::bb_shift, 0.0, 0.05, HypothesisKind::operator_norm, 1);
  HypothesisSpec hyp;
  hyp.kind = HypothesisKind::operator_norm;
  hyp.threshold = delta;
  hyp.alpha = 0.05;
  hyp.nu_n = 20;
  std::string rates;
  for (long t : {128L, 256L}) {
    const auto row = experiment_point(
        ScenarioSpec::make(ScenarioId::bb_shift, t, 0.02, 0), hyp,
        default_est(), 500, shared_pivot(), 911, static_cast<std::uint64_t>(t));
    const double bound = 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / 500.0);
    ACHECK(ok, row.rate <= bound);
    rates += " T=" + std::to_string(t) + ":" + format_sig12(row.rate);
  }
  acceptance::report(2, "null-interior rejection below 0.05 + 2SE" + rates,
                     ok);
}

TEST_CASE("criterion 3: power for the projector tests") {
  bool ok = true;
  HypothesisSpec hyp;
  hyp.kind = HypothesisKind::eigenprojector;
  hyp.component = 1;
  hyp.threshold = 0.89;
  hyp.alpha = 0.05;
  hyp.nu_n = 20;
  const auto power_row = experiment_point(
      ScenarioSpec::make(ScenarioId::ar_shift, 256, 0.25, 0), hyp,
      default_est(), 500, shared_pivot(), 912, 0);
  ACHECK(ok, power_row.rate >= 0.8);

  // Third projector across the jump: the population distance is 0 below
  // the eigenvalue crossing (near 0.126) and 2 above it, so with a small
  // positive threshold the test is level-like below 0.150 and rejects
  // almost surely above it.
  hyp.component = 3;
  hyp.threshold = 0.1;
  const auto below = experiment_point(
      ScenarioSpec::make(ScenarioId::ar_shift, 256, 0.05, 0), hyp,
      default_est(), 200, shared_pivot(), 913, 1);
  const auto above = experiment_point(
      ScenarioSpec::make(ScenarioId::ar_shift, 256, 0.20, 0), hyp,
      default_est(), 200, shared_pivot(), 913, 2);
  ACHECK(ok, below.rate <= 0.10);
  ACHECK(ok, above.rate >= 0.90);
  // Zero-threshold framing far beyond the jump: rejection is certain.
  hyp.threshold = 0.0;
  const auto zero = experiment_point(
      ScenarioSpec::make(ScenarioId::ar_shift, 256, 0.20, 0), hyp,
      default_est(), 100, shared_pivot(), 913, 3);
  ACHECK(ok, zero.rate >= 0.95);
  acceptance::report(3, "projector power (k=1 at 0.25: " +
                        format_sig12(power_row.rate) + "; k=3 jump " +
                        format_sig12(below.rate) + " -> " +
                        format_sig12(above.rate) + ")", ok);
}

TEST_CASE("criterion 4: spectral estimator accuracy on flat spectra") {
  bool ok = true;
  const int d = 21;
  const int reps = 100;
  const auto basis = BasisSpec::fourier(d);
  const Eigen::VectorXd grid = basis.default_grid(1000);
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(1000, 1000);
  for (int k = 1; k <= d; ++k) {
    Eigen::VectorXd f(1000);
    for (int g = 0; g < 1000; ++g)
      f[g] = std::sqrt(2.0) * std::sin(M_PI * k * grid[g]);
    kernel += f * f.transpose() / (M_PI * k * M_PI * k);
  }
  const Eigen::MatrixXd design = basis.evaluate(grid);
  const Eigen::MatrixXd proj =
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(design).solve(
          Eigen::MatrixXd::Identity(1000, 1000));
  const Eigen::MatrixXcd pop =
      (proj * kernel * proj.transpose()).cast<std::complex<double>>();
  const double pop_norm = pop.norm();

  // Interior frequencies; at omega in {0, pi} every lag-window estimator
  // doubles its variance (the complex phases collapse to +-1), which is
  // held to the looser factor-sqrt(2) bound below.
  const std::vector<double> freqs{0.5, 1.1, 1.7, 2.3, 2.6, 0.0, M_PI};
  const std::size_t interior = 5;
  std::vector<double> err(freqs.size(), 0.0);
  std::vector<double> top(reps, 0.0);
  std::vector<std::vector<double>> errs(
      static_cast<std::size_t>(reps),
      std::vector<double>(freqs.size(), 0.0));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    const auto series =
        gen_bb_series(512, d, 0.0, 1.0, derive_seed(914, "acc4", r));
    const double b = std::pow(512.0, -1.0 / 3.0);
    for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
      const auto op = sequential_estimate(series, 1.0, freqs[fi],
                                          WindowSpec::daniell(), b);
      errs[r][fi] = (op.entries - pop).norm() / pop_norm;
      if (fi == 1) top[r] = eigensystem(op, 1).eigenvalues[0];
    }
  });
  for (std::size_t fi = 0; fi < freqs.size(); ++fi) {
    for (int r = 0; r < reps; ++r) err[fi] += errs[static_cast<std::size_t>(r)][fi];
    err[fi] /= reps;
    UNSCOPED_INFO("freq " << freqs[fi] << ": mean rel err " << err[fi]);
    ACHECK(ok, err[fi] <= (fi < interior ? 0.20 : 0.20 * std::sqrt(2.0)));
  }
  double mean_top = 0.0;
  for (double v : top) mean_top += v;
  mean_top /= reps;
  const double target = 1.0 / (M_PI * M_PI);
  ACHECK(ok, std::abs(mean_top - target) / target <= 0.15);
  acceptance::report(4, "mean relative HS error <= 20% per frequency, "
                        "leading eigenvalue within 15% of 1/pi^2 (" +
                        format_sig12(mean_top) + ")", ok);
}

TEST_CASE("criterion 5: lag-sum and naive double-sum estimators coincide") {
  bool ok = true;
  Xoshiro256pp rng(915);
  const auto windows = {WindowSpec::daniell(), WindowSpec::bartlett(),
                        WindowSpec::parzen()};
  double worst = 0.0;
  int instance = 0;
  while (instance < 200) {
    for (const auto& window : windows) {
      if (instance >= 200) break;
      const Eigen::Index t =
          8 + static_cast<Eigen::Index>(rng.next_unit() * 56);
      const int d = 2 + static_cast<int>(rng.next_unit() * 3);
      const Eigen::MatrixXd x = oracles::random_matrix(t, d, rng);
      const FunctionalSeries series(
          x, BasisSpec::fourier(d));
      const double b = 0.05 + 0.9 * rng.next_unit();
      const double eta = 0.3 + 0.7 * rng.next_unit();
      const double omega = M_PI * rng.next_unit();
      const Eigen::Index m = subsample_length(eta, t);
      if (m < 2) continue;
      const auto fast = sequential_estimate(series, eta, omega, window, b);
      const auto slow = oracles::naive_double_sum(x, m, omega, window, b);
      worst = std::max(worst,
                       (fast.entries - slow).cwiseAbs().maxCoeff());
      ++instance;
    }
  }
  ACHECK(ok, worst <= 1e-10);
  acceptance::report(5, "max entrywise deviation " + format_sig12(worst) +
                        " <= 1e-10 over 200 instances", ok);
}

TEST_CASE("criterion 6: pivot law properties") {
  bool ok = true;
  const auto a = simulate_pivot(20, 100000, 10000, 916);
  const auto b = simulate_pivot(20, 100000, 10000, 917);
  const double q95a = quantile(a, 0.95);
  const double q95b = quantile(b, 0.95);
  const double median = quantile(a, 0.5);
  ACHECK(ok, std::abs(median) <= 0.02 * q95a);
  ACHECK(ok, std::abs(q95a - q95b) / q95a < 0.02);
  const double golden = 9.883;  // three 1e6-path runs of the oracle sampler
  ACHECK(ok, std::abs(q95a - golden) / golden < 0.02);
  acceptance::report(6, "pivot median/reproducibility/golden checks "
                        "(q95 = " + format_sig12(q95a) + ")", ok);
}

TEST_CASE("criterion 7: projector distance invariance suite") {
  bool ok = true;
  Xoshiro256pp rng(918);
  double worst_change = 0.0;
  bool in_range = true;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 3 + static_cast<int>(rng.next_unit() * 5);
    auto ex = eigensystem(
        OperatorMatrix{oracles::random_hermitian(d, rng), 0.0}, 2);
    auto ey = eigensystem(
        OperatorMatrix{oracles::random_hermitian(d, rng), 0.0}, 2);
    for (int k = 1; k <= 2; ++k) {
      const double base = projector_distance_sq(ex, ey, k);
      in_range = in_range && base >= 0.0 && base <= 2.0;
      auto rx = ex;
      auto ry = ey;
      rx.vectors.col(k - 1) *= std::polar(1.0, 2 * M_PI * rng.next_unit());
      ry.vectors.col(k - 1) *= std::polar(1.0, 2 * M_PI * rng.next_unit());
      worst_change = std::max(
          worst_change,
          std::abs(projector_distance_sq(rx, ry, k) - base));
    }
  }
  ACHECK(ok, worst_change <= 1e-10);
  ACHECK(ok, in_range);
  acceptance::report(7, "phase invariance (worst change " +
                        format_sig12(worst_change) +
                        ") and range [0, 2] over 1000 pairs", ok);
}

TEST_CASE("criterion 8: separable pipeline against brute force") {
  bool ok = true;
  const Eigen::Index t = 64;
  const auto field = gen_separable_series(t, {4, 4, 4}, 919, 0);
  const auto window = WindowSpec::daniell();
  const double b = std::pow(static_cast<double>(t), -1.0 / 3.0);
  double worst = 0.0;
  for (int dir = 1; dir <= 3; ++dir) {
    const double cell = 1.0 / field.sizes()[dir - 1];
    for (double eta : {0.5, 1.0}) {
      const Eigen::Index m = subsample_length(eta, t);
      for (double omega : {0.0, 0.9, 2.2}) {
        const auto fast = directional_sequential_estimate(field, dir, eta,
                                                          omega, window, b);
        const auto slow = oracles::brute_force_directional(field, dir, m,
                                                           omega, window, b);
        worst = std::max(
            worst, (fast.entries / cell - slow).cwiseAbs().maxCoeff());
      }
    }
  }
  ACHECK(ok, worst <= 1e-8);

  // Kronecker merge: exact agreement with the full product enumeration.
  const auto surfaces = separable_surfaces(field, 0.0, M_PI, 5, {0.5, 1.0},
                                           window, BandwidthRule::power_law());
  bool merge_exact = true;
  for (std::size_t wi = 0; wi < surfaces.dirs[0].freqs.size(); ++wi) {
    std::array<EigenSystem, 3> es;
    for (int i = 0; i < 3; ++i)
      es[static_cast<std::size_t>(i)] = eigensystem(
          surfaces.dirs[static_cast<std::size_t>(i)].ops[1][wi], 4);
    const auto merged = kronecker_eigensystem(es[0], es[1], es[2], 64);
    const auto expected = oracles::all_products_sorted(
        es[0].eigenvalues, es[1].eigenvalues, es[2].eigenvalues);
    for (std::size_t i = 0; i < expected.size(); ++i)
      merge_exact = merge_exact && merged.values[i] == expected[i];
  }
  ACHECK(ok, merge_exact);
  acceptance::report(8, "directional estimates within " + format_sig12(worst) +
                        " of brute force; kronecker merge exact", ok);
}

TEST_CASE("criterion 9: degenerate handling through the CLI") {
  bool ok = true;
  const auto dir = acceptance::work_dir("criterion9");
  const auto csv = (dir / "same.csv").string();
  auto gen = acceptance::run_cli(
      "gen --scenario bb-shift --param 0 --length 80 --seed 5 --out " + csv,
      dir, "gen");
  ACHECK(ok, gen.exit_code == 0);
  for (double delta : {1e-4, 0.05, 1.0, 50.0}) {
    const auto out = (dir / ("res" + format_sig12(delta) + ".json")).string();
    auto r = acceptance::run_cli(
        "test --input-x " + csv + " --input-y " + csv + " --delta " +
            format_sig12(delta) +
            " --pivot-paths 2000 --pivot-steps 2000 --seed 3 --out " + out,
        dir, "test" + format_sig12(delta));
    ACHECK(ok, r.exit_code == 0);
    ACHECK(ok, r.out.find("decision     accept (degenerate)") !=
                   std::string::npos);
    const auto json = acceptance::slurp(out);
    ACHECK(ok, json.find("\"p_value\": 1") != std::string::npos);
    ACHECK(ok, json.find("\"degenerate\": true") != std::string::npos);
    ACHECK(ok, json.find("\"decision\": \"accept\"") != std::string::npos);
  }
  acceptance::report(9, "identical inputs: accept, p = 1, degenerate flag, "
                        "exit 0 for all tested deltas", ok);
}

TEST_CASE("criterion 10: byte-reproducible subcommands across worker counts") {
  bool ok = true;
  const auto base = acceptance::work_dir("criterion10");
  // Shared input data, generated once.
  const auto xcsv = (base / "x.csv").string();
  const auto ycsv = (base / "y.csv").string();
  const auto sepcsv = (base / "s.csv").string();
  acceptance::run_cli("gen --scenario bb-shift --param 0 --length 80 "
                      "--grid-points 200 --basis-dim 8 --seed 7 --out " +
                          xcsv, base, "genx");
  acceptance::run_cli("gen --scenario bb-shift --param 0.08 --length 80 "
                      "--grid-points 200 --seed 8 --out " + ycsv, base,
                      "geny");
  acceptance::run_cli("gen --scenario separable --sep-dim 4:4:4 --length 48 "
                      "--seed 9 --out " + sepcsv, base, "gens");

  struct Variant {
    std::string name;
    std::string args;           // without --threads/--out/--cache-dir
    std::vector<std::string> outputs;  // produced files, relative to prefix
  };
  const std::vector<Variant> variants{
      {"gen",
       "gen --scenario ar-dependence --param 0.4 --length 64 --grid-points "
       "64 --seed 21",
       {""}},
      {"estimate",
       "estimate --input " + xcsv + " --basis-dim 8 --nfreq 9 --seed 22",
       {".hsnorm.csv", ".eigs.csv", ".summary.json"}},
      {"test",
       "test --input-x " + xcsv + " --input-y " + ycsv +
           " --basis-dim 8 --nfreq 9 --nu-n 10 --delta 0.01 --pivot-paths "
           "2000 --pivot-steps 2000 --seed 23",
       {""}},
      {"pivot",
       "pivot --pivot-paths 4000 --pivot-steps 2000 --alpha 0.05 --alpha 0.1 "
       "--seed 24",
       {""}},
      {"experiment",
       "experiment --scenario bb-amplitude --params 0 --params 3 --lengths "
       "64 --reps 50 --delta 0.05 --nfreq 9 --nu-n 10 --pivot-paths 2000 "
       "--pivot-steps 2000 --seed 25",
       {".csv", ".json"}},
      {"separable",
       "separable --input " + sepcsv + " --input " + sepcsv +
           " --sep-basis raw-grid --nfreq 5 --nu-n 8 --delta 0.01 "
           "--pivot-paths 2000 --pivot-steps 2000 --seed 26",
       {".directional.csv", ".kron.csv", ".pvalues.csv", ".json"}},
  };

  for (const auto& variant : variants) {
    // Same output and cache paths for every worker count; the work area is
    // wiped between runs so each run regenerates everything from the seed.
    const auto dir = base / (variant.name + "-run");
    std::vector<std::string> signatures;
    for (int threads : {1, 4, 8}) {
      std::filesystem::remove_all(dir);
      std::filesystem::create_directories(dir);
      const auto prefix = (dir / "out").string();
      const auto cache = (dir / "cache").string();
      const auto r = acceptance::run_cli(
          variant.args + " --threads " + std::to_string(threads) + " --out " +
              prefix + " --cache-dir " + cache,
          dir, variant.name);
      std::string sig = "exit=" + std::to_string(r.exit_code) + "\n" + r.out;
      for (const auto& suffix : variant.outputs)
        sig += "\n--- " + suffix + "\n" + acceptance::slurp(prefix + suffix);
      signatures.push_back(std::move(sig));
    }
    const bool same = signatures[1] == signatures[0] &&
                      signatures[2] == signatures[0];
    if (!same)
      UNSCOPED_INFO("subcommand not reproducible: " << variant.name);
    ACHECK(ok, same);
  }
  acceptance::report(10, "gen/estimate/test/pivot/experiment/separable "
                         "byte-identical with 1, 4 and 8 workers", ok);
}
