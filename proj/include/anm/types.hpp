#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace anm {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
// Rounded value; range/Doppler conversions in this library use 3e8 m/s.
inline constexpr double kSpeedOfLight = 3e8;
inline constexpr double kGoldenRatio = 1.6180339887498949;

/// Raised when an iterate or decomposition produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an estimate is structurally impossible (e.g. no noise subspace).
class DegenerateEstimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or out-of-range configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PathClass { target, clutter, direct };

inline std::string to_string(PathClass c) {
  switch (c) {
    case PathClass::target: return "target";
    case PathClass::clutter: return "clutter";
    case PathClass::direct: return "direct";
  }
  return "target";
}

inline PathClass path_class_from_string(const std::string& s) {
  if (s == "target") return PathClass::target;
  if (s == "clutter") return PathClass::clutter;
  if (s == "direct") return PathClass::direct;
  throw std::invalid_argument("unknown path class '" + s + "'");
}

/// Maps x into [0, 1).
inline double wrap_unit(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w = 0.0;
  return w;
}

/// Distance between two points on the unit circle [0, 1).
inline double wrapped_distance(double a, double b) {
  double d = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

/// Maps [0, 1) onto (-1/2, 1/2].
inline double signed_frequency(double x) {
  double w = wrap_unit(x);
  return w > 0.5 ? w - 1.0 : w;
}

inline bool all_finite(const CMatrix& m) { return m.allFinite(); }

}  // namespace anm
