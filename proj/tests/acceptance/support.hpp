#pragma once

#include <catch2/catch_amalgamated.hpp>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace acceptance {

// One visible PASS/FAIL line per criterion, then the hard gate.
inline void report(int criterion, const std::string& name, bool ok) {
  std::printf("[criterion %d] %s: %s\n", criterion, ok ? "PASS" : "FAIL",
              name.c_str());
  std::fflush(stdout);
  REQUIRE(ok);
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::filesystem::path work_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ftsdiff-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI binary with stdout/stderr captured to files.
inline RunResult run_cli(const std::string& args,
                         const std::filesystem::path& dir,
                         const std::string& tag) {
  const auto out_path = dir / (tag + ".stdout");
  const auto err_path = dir / (tag + ".stderr");
  const std::string cmd = std::string(FTSDIFF_BIN) + " " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

}  // namespace acceptance

#define ACHECK(ok, cond)        \
  do {                          \
    const bool a_c = (cond);    \
    CHECK(a_c);                 \
    ok = ok && a_c;             \
  } while (0)
