#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <string>

#include "ftsdiff/errors.hpp"

namespace fts {

enum class WindowKind { daniell, bartlett, parzen, custom };

inline std::string to_string(WindowKind k) {
  switch (k) {
    case WindowKind::daniell: return "daniell";
    case WindowKind::bartlett: return "bartlett";
    case WindowKind::parzen: return "parzen";
    case WindowKind::custom: return "custom";
  }
  return "?";
}

// Lag window w: even, bounded, w(0) = 1, with kappa = integral of w^2.
struct WindowSpec {
  WindowKind kind = WindowKind::daniell;
  std::function<double(double)> evaluator;
  double kappa = 1.0;
  // Custom windows are accepted as-is; evenness/boundedness are the
  // caller's responsibility and results carry this flag.
  bool unchecked = false;

  double operator()(double x) const { return evaluator(x); }

  static WindowSpec daniell() {
    WindowSpec w;
    w.kind = WindowKind::daniell;
    w.kappa = 1.0;
    w.evaluator = [](double x) {
      if (x == 0.0) return 1.0;
      const double px = M_PI * x;
      return std::sin(px) / px;
    };
    return w;
  }

  static WindowSpec bartlett() {
    WindowSpec w;
    w.kind = WindowKind::bartlett;
    w.kappa = 2.0 / 3.0;
    w.evaluator = [](double x) { return std::max(0.0, 1.0 - std::abs(x)); };
    return w;
  }

  static WindowSpec parzen() {
    WindowSpec w;
    w.kind = WindowKind::parzen;
    w.kappa = 151.0 / 280.0;
    w.evaluator = [](double x) {
      const double a = std::abs(x);
      if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
      if (a <= 1.0) {
        const double u = 1.0 - a;
        return 2.0 * u * u * u;
      }
      return 0.0;
    };
    return w;
  }

  static WindowSpec custom(std::function<double(double)> evaluator,
                           double kappa) {
    require_config(static_cast<bool>(evaluator), "custom window needs an evaluator");
    require_config(kappa > 0.0 && std::isfinite(kappa),
                   "custom window needs finite positive kappa");
    require_config(std::abs(evaluator(0.0) - 1.0) <= 1e-12,
                   "window must satisfy w(0) = 1");
    WindowSpec w;
    w.kind = WindowKind::custom;
    w.kappa = kappa;
    w.evaluator = std::move(evaluator);
    w.unchecked = true;
    return w;
  }

  static WindowSpec by_name(const std::string& name) {
    if (name == "daniell") return daniell();
    if (name == "bartlett") return bartlett();
    if (name == "parzen") return parzen();
    throw config_error("unknown window kind: " + name);
  }
};

// Bandwidth b as a function of sample length: power law b = T^(-exponent)
// or a fixed value. Valid bandwidths lie in (0, 1] with b*T >= 4.
struct BandwidthRule {
  enum class Kind { power_law, fixed } kind = Kind::power_law;
  double exponent = 1.0 / 3.0;
  double fixed_value = 0.0;

  static BandwidthRule power_law(double exponent = 1.0 / 3.0) {
    require_config(exponent > 0.0 && exponent < 1.0,
                   "bandwidth exponent must lie in (0,1)");
    BandwidthRule r;
    r.kind = Kind::power_law;
    r.exponent = exponent;
    return r;
  }

  static BandwidthRule fixed(double value) {
    BandwidthRule r;
    r.kind = Kind::fixed;
    r.fixed_value = value;
    return r;
  }

  double bandwidth(Eigen::Index sample_length) const {
    const double t = static_cast<double>(sample_length);
    const double b = kind == Kind::power_law ? std::pow(t, -exponent)
                                             : fixed_value;
    require_config(b > 0.0 && b <= 1.0, "bandwidth must lie in (0,1]");
    require_config(b * t >= 4.0,
                   "bandwidth too small: b*T must be at least 4");
    return b;
  }
};

}  // namespace fts
