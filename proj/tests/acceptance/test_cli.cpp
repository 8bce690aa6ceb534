// Command-level behavior: exit codes, file formats, caching, resume and the
// config round trip, driven through the real binary.

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "ftsdiff/cli_config.hpp"
#include "ftsdiff/ftsdiff.hpp"
#include "support.hpp"

using acceptance::run_cli;
using acceptance::slurp;
using acceptance::work_dir;

namespace {

// Column means of a CSV written by the CLI (skips # and header lines).
std::vector<double> csv_column_means(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::vector<double> sums;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || std::isalpha(line[0])) continue;
    std::istringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (sums.size() <= c) sums.push_back(0.0);
      sums[c] += std::stod(cell);
      ++c;
    }
    ++rows;
  }
  for (auto& s : sums) s /= static_cast<double>(rows);
  return sums;
}

}  // namespace

TEST_CASE("estimate recovers the flat-spectrum leading eigenvalue") {
  const auto dir = work_dir("cli-estimate");
  const auto csv = (dir / "bb.csv").string();
  REQUIRE(run_cli("gen --scenario bb-shift --param 0 --length 512 --seed 41 "
                  "--out " + csv, dir, "gen").exit_code == 0);
  const auto prefix = (dir / "est").string();
  const auto r = run_cli(
      "estimate --input " + csv + " --nfreq 17 --out " + prefix, dir, "est");
  REQUIRE(r.exit_code == 0);
  const auto means = csv_column_means(prefix + ".eigs.csv");
  REQUIRE(means.size() >= 2);
  const double target = 1.0 / (M_PI * M_PI);
  CHECK(std::abs(means[1] - target) / target < 0.15);
  // Deterministic rerun: byte-identical outputs.
  const auto first = slurp(prefix + ".eigs.csv");
  const auto r2 = run_cli(
      "estimate --input " + csv + " --nfreq 17 --out " + prefix, dir, "est2");
  CHECK(r2.exit_code == 0);
  CHECK(slurp(prefix + ".eigs.csv") == first);
  CHECK(r2.out == r.out);
}

TEST_CASE("empty input files exit with the io code") {
  const auto dir = work_dir("cli-empty");
  const auto csv = (dir / "empty.csv").string();
  std::ofstream(csv) << "";
  const auto r = run_cli("estimate --input " + csv + " --out " +
                             (dir / "x").string(), dir, "est");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("no rows") != std::string::npos);
}

TEST_CASE("exit codes follow the io/config/numerical contract") {
  const auto dir = work_dir("cli-exitcodes");
  // io: missing file.
  CHECK(run_cli("estimate --input " + (dir / "missing.csv").string() +
                    " --out " + (dir / "o").string(),
                dir, "io").exit_code == 1);
  // config: malformed band.
  const auto csv = (dir / "d.csv").string();
  REQUIRE(run_cli("gen --scenario ar-dependence --param 0 --length 64 "
                  "--grid-points 32 --seed 1 --out " + csv, dir,
                  "gen").exit_code == 0);
  CHECK(run_cli("estimate --input " + csv + " --band 2:1 --out " +
                    (dir / "o").string(),
                dir, "cfg").exit_code == 2);
  CHECK(run_cli("estimate --input " + csv + " --nfreq 0 --out " +
                    (dir / "o").string(),
                dir, "cfg2").exit_code == 2);
  // numerical: degenerate grid makes the basis unidentifiable.
  {
    std::ofstream bad((dir / "bad.csv").string());
    bad << "# grid: 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 "
           "0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5 0.5\n";
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 24; ++c) bad << (c ? "," : "") << 1.0 + r + c;
      bad << "\n";
    }
  }
  const auto r = run_cli("estimate --input " + (dir / "bad.csv").string() +
                             " --basis-dim 4 --out " + (dir / "o").string(),
                         dir, "num");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("basis not identifiable") != std::string::npos);
}

TEST_CASE("dependent mode rejects unequal sample lengths with exit 2") {
  const auto dir = work_dir("cli-dependent");
  const auto x = (dir / "x.csv").string();
  const auto y = (dir / "y.csv").string();
  REQUIRE(run_cli("gen --scenario bb-shift --param 0 --length 80 --seed 1 "
                  "--out " + x, dir, "genx").exit_code == 0);
  REQUIRE(run_cli("gen --scenario bb-shift --param 0 --length 96 --seed 2 "
                  "--out " + y, dir, "geny").exit_code == 0);
  const auto r = run_cli(
      "test --input-x " + x + " --input-y " + y +
          " --dependent --delta 0.1 --nu-n 10 --pivot-paths 2000 "
          "--pivot-steps 2000 --seed 3",
      dir, "test");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("equal sample lengths") != std::string::npos);
}

TEST_CASE("band flags restrict the integration range") {
  const auto dir = work_dir("cli-band");
  const auto x = (dir / "x.csv").string();
  const auto y = (dir / "y.csv").string();
  REQUIRE(run_cli("gen --scenario bb-shift --param 0 --length 96 --seed 4 "
                  "--out " + x, dir, "genx").exit_code == 0);
  REQUIRE(run_cli("gen --scenario bb-shift --param 0.1 --length 96 --seed 5 "
                  "--out " + y, dir, "geny").exit_code == 0);
  const auto out = (dir / "res.json").string();
  const auto r = run_cli(
      "test --input-x " + x + " --input-y " + y +
          " --band 0:1.5708 --delta 0.001 --nu-n 10 --nfreq 17 "
          "--pivot-paths 2000 --pivot-steps 2000 --seed 6 --out " + out,
      dir, "test");
  REQUIRE(r.exit_code == 0);
  const auto json = slurp(out);
  CHECK(json.find("\"band\"") != std::string::npos);
  CHECK(json.find("1.5708") != std::string::npos);
  // Single-frequency band: point-evaluation convention.
  const auto r2 = run_cli(
      "test --input-x " + x + " --input-y " + y +
          " --band 0:0 --nfreq 1 --delta 0.001 --nu-n 10 --pivot-paths 2000 "
          "--pivot-steps 2000 --seed 6",
      dir, "point");
  CHECK(r2.exit_code == 0);
}

TEST_CASE("pivot caching avoids resimulation and reports quantiles") {
  const auto dir = work_dir("cli-pivot");
  const auto cache = (dir / "cache").string();
  const std::string args =
      "pivot --pivot-paths 100000 --pivot-steps 2000 --alpha 0.05 --alpha "
      "0.5 --seed 7 --cache-dir " + cache;
  const auto first = run_cli(args, dir, "p1");
  REQUIRE(first.exit_code == 0);
  CHECK(first.out.find("pivot sample generated") != std::string::npos);
  const auto second = run_cli(args, dir, "p2");
  REQUIRE(second.exit_code == 0);
  CHECK(second.out.find("pivot cache hit") != std::string::npos);

  // q(0.95) within 2% of the independent-oracle golden value; q(0.5) near 0.
  double q95 = 0.0, q50 = 1e9;
  std::istringstream ss(second.out);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("q(1-0.05)", 0) == 0) q95 = std::stod(line.substr(12));
    if (line.rfind("q(1-0.5)", 0) == 0) q50 = std::stod(line.substr(11));
  }
  CHECK(std::abs(q95 - 9.883) / 9.883 < 0.02);
  CHECK(std::abs(q50) < 0.02 * q95);

  // Corrupt cache: regenerated with a warning, same result.
  {
    std::ofstream corrupt(
        (std::filesystem::path(cache) /
         fts::cli::pivot_cache_name(20, 100000, 2000,
                                    fts::cli::pivot_stream_seed(7)))
            .string());
    corrupt << "garbage\n";
  }
  const auto third = run_cli(args, dir, "p3");
  REQUIRE(third.exit_code == 0);
  CHECK(third.err.find("regenerating") != std::string::npos);
  CHECK(third.out.find("pivot sample generated") != std::string::npos);
  // Identical quantiles after regeneration.
  CHECK(third.out.substr(third.out.find("q(1-")) ==
        second.out.substr(second.out.find("q(1-")));
}

TEST_CASE("experiment reports rates with binomial standard errors") {
  const auto dir = work_dir("cli-exp");
  const auto out = (dir / "report").string();
  const auto r = run_cli(
      "experiment --scenario bb-amplitude --params 3 --lengths 64 --reps 50 "
      "--delta 0.05 --nfreq 9 --nu-n 10 --pivot-paths 2000 --pivot-steps "
      "2000 --seed 8 --out " + out,
      dir, "exp");
  REQUIRE(r.exit_code == 0);
  const auto csv = slurp(out + ".csv");
  std::istringstream ss(csv);
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  CHECK(header ==
        "scenario,param,length,reps,rejections,rate,std_error,failed");
  std::vector<std::string> cells;
  std::istringstream rs(row);
  std::string cell;
  while (std::getline(rs, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 8);
  const double rate = std::stod(cells[5]);
  const double se = std::stod(cells[6]);
  CHECK(std::stoi(cells[3]) == 50);
  CHECK(se == Catch::Approx(std::sqrt(rate * (1 - rate) / 50)).margin(1e-9));
}

TEST_CASE("experiment sweeps are monotone and resume identically") {
  const auto dir = work_dir("cli-exp-resume");
  const auto out = (dir / "sweep").string();
  const auto cache = (dir / "cache").string();
  const std::string args =
      "experiment --scenario bb-shift --params 0 --params 0.05 --params 0.10 "
      "--lengths 128 --reps 150 --delta-boundary 0.05 --nfreq 33 --nu-n 20 "
      "--pivot-paths 20000 --pivot-steps 2000 --seed 9 --cache-dir " + cache +
      " --out " + out;
  const auto first = run_cli(args, dir, "e1");
  REQUIRE(first.exit_code == 0);
  const auto csv = slurp(out + ".csv");
  // Rejection rates rise with the shift parameter (up to noise).
  std::istringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  std::vector<double> rates, ses;
  while (std::getline(ss, line)) {
    std::istringstream rs(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(rs, cell, ',')) cells.push_back(cell);
    rates.push_back(std::stod(cells[5]));
    ses.push_back(std::stod(cells[6]));
  }
  REQUIRE(rates.size() == 3);
  CHECK(rates[0] <= rates[1] + 2 * std::max(ses[0], ses[1]));
  CHECK(rates[1] <= rates[2] + 2 * std::max(ses[1], ses[2]));
  CHECK(rates[2] > rates[0]);

  // Rerun: every point restores from the progress file, bytes unchanged.
  const auto second = run_cli(args, dir, "e2");
  REQUIRE(second.exit_code == 0);
  CHECK(second.err.find("restored from progress file") != std::string::npos);
  CHECK(slurp(out + ".csv") == csv);
}

TEST_CASE("experiment records failing grid points and exits 0 when some "
          "succeed") {
  const auto dir = work_dir("cli-exp-partial");
  const auto out = (dir / "partial").string();
  // T = 32 cannot support nu_n = 20 (floor(32/20) < 2): that point fails,
  // the T = 64 point succeeds.
  const auto r = run_cli(
      "experiment --scenario bb-amplitude --params 0 --lengths 32 --lengths "
      "64 --reps 50 --delta 0.05 --nfreq 9 --nu-n 20 --pivot-paths 2000 "
      "--pivot-steps 2000 --seed 10 --out " + out,
      dir, "exp");
  CHECK(r.exit_code == 0);
  const auto csv = slurp(out + ".csv");
  CHECK(csv.find(",1\n") != std::string::npos);  // failed flag set
  CHECK(csv.find(",0\n") != std::string::npos);  // and a successful row
  const auto json = slurp(out + ".json");
  CHECK(json.find("window too short") != std::string::npos);
}

TEST_CASE("test results embed a config that reproduces them") {
  const auto dir = work_dir("cli-roundtrip");
  const auto x = (dir / "x.csv").string();
  const auto y = (dir / "y.csv").string();
  REQUIRE(run_cli("gen --scenario ar-dependence --param 0.4 --length 96 "
                  "--seed 11 --out " + x, dir, "genx").exit_code == 0);
  REQUIRE(run_cli("gen --scenario ar-dependence --param 0 --length 96 "
                  "--seed 12 --out " + y, dir, "geny").exit_code == 0);
  const auto out1 = (dir / "r1.json").string();
  const auto out2 = (dir / "r2.json").string();
  const auto r1 = run_cli(
      "test --input-x " + x + " --input-y " + y +
          " --basis-dim 5 --hypothesis eigenvalue --k 1 --delta 0.01 "
          "--nu-n 10 --nfreq 9 --pivot-paths 2000 --pivot-steps 2000 "
          "--seed 13 --out " + out1,
      dir, "t1");
  REQUIRE(r1.exit_code == 0);
  const auto r2 = run_cli("test --config " + out1 + " --out " + out2, dir,
                          "t2");
  REQUIRE(r2.exit_code == 0);
  CHECK(r2.out == r1.out);
  CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("separable pairs: identical subjects never show differences") {
  const auto dir = work_dir("cli-sep-same");
  const auto s = (dir / "subject.csv").string();
  REQUIRE(run_cli("gen --scenario separable --sep-dim 4:4:4 --length 64 "
                  "--seed 14 --out " + s, dir, "gen").exit_code == 0);
  const auto out = (dir / "sep").string();
  const auto r = run_cli(
      "separable --input " + s + " --input " + s + " --input " + s +
          " --sep-basis raw-grid --delta 0.001 --nu-n 8 --nfreq 5 "
          "--pivot-paths 2000 --pivot-steps 2000 --seed 15 --out " + out,
      dir, "sep");
  REQUIRE(r.exit_code == 0);
  const auto pvals = slurp(out + ".pvalues.csv");
  // Upper triangle of a 3x3 matrix: (1,2), (1,3), (2,3) all p = 1.
  CHECK(pvals == "subject,2,3\n1,1,1\n2,,1\n");
}

TEST_CASE("separable pipeline distinguishes eigenvector changes from "
          "eigenvalue changes") {
  const auto dir = work_dir("cli-sep-mix");
  const auto a = (dir / "a.csv").string();
  const auto b = (dir / "b.csv").string();
  // Same seed: identical scores; subject b has direction-1 shapes rotated,
  // which moves eigenvectors but not eigenvalues.
  REQUIRE(run_cli("gen --scenario separable --param 0 --sep-dim 4:4:4 "
                  "--length 384 --seed 16 --out " + a, dir, "gena").exit_code ==
          0);
  REQUIRE(run_cli("gen --scenario separable --param 1 --sep-dim 4:4:4 "
                  "--length 384 --seed 16 --out " + b, dir, "genb").exit_code ==
          0);
  auto p_of = [&](const std::string& hypothesis, int k, double delta,
                  const std::string& tag) {
    const auto out = (dir / tag).string();
    const auto r = run_cli(
        "separable --input " + a + " --input " + b + " --sep-basis raw-grid "
            "--hypothesis " + hypothesis + " --k " + std::to_string(k) +
            " --delta " + fts::format_sig12(delta) +
            " --nu-n 8 --nfreq 5 --pivot-paths 4000 --pivot-steps 2000 "
            "--seed 17 --out " + out,
        dir, tag);
    REQUIRE(r.exit_code == 0);
    const auto json = slurp(out + ".json");
    const auto pos = json.find("\"p_value\": ");
    REQUIRE(pos != std::string::npos);
    return std::stod(json.substr(pos + 11));
  };
  // Direction-1 top eigenvector rotates by 45 degrees: projector distance 1.
  CHECK(p_of("projector", 1, 0.3, "proj") < 0.05);
  // Product-operator Hilbert-Schmidt norms are tiny in absolute terms (each
  // direction contributes a (2pi)^-1 and a voxel quadrature weight), so the
  // operator and eigenvalue thresholds live on the 1e-16 scale here.
  CHECK(p_of("operator", 1, 1e-16, "op") < 0.05);
  // Eigenvalues are untouched by the rotation: far inside the null.
  CHECK(p_of("eigenvalue", 1, 1e-16, "eig") > 0.5);
}
