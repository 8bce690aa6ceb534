#pragma once

#include <stdexcept>
#include <string>

namespace fts {

// Error taxonomy mirrors the CLI exit-code contract:
// io_error -> 1, config_error -> 2, numeric_error -> 3.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct config_error : std::invalid_argument {
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw config_error(msg);
}

inline void require_numeric(bool cond, const std::string& msg) {
  if (!cond) throw numeric_error(msg);
}

}  // namespace fts
