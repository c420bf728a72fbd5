#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccps {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Merton inversion exceeded its iteration budget without meeting tolerance.
struct NoConvergenceError : Error {
  using Error::Error;
};

/// No (assets, asset_vol) with assets above the barrier matches the
/// observation; the member is effectively in default at observation time.
struct NoSolutionError : Error {
  using Error::Error;
};

/// Requested network density exceeds what the marginals can support.
struct UnreachableDensityError : Error {
  using Error::Error;
};

/// Fire-sale demand reached or exceeded the total interbank volume.
struct LiquidityExhaustionError : Error {
  using Error::Error;
};

/// A member with zero equity participates in the exposure network.
struct SingularEquityError : Error {
  using Error::Error;
};

/// Malformed input file (missing column, non-numeric field, broken identity).
struct SchemaError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
};

/// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool approx_rel(double a, double b, double rel_tol, double abs_floor = 0.0) {
  double diff = a > b ? a - b : b - a;
  double scale = std::max(a < 0 ? -a : a, b < 0 ? -b : b);
  return diff <= rel_tol * scale + abs_floor;
}

}  // namespace ccps
