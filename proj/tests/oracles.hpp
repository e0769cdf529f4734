#pragma once

// Reference computations kept independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace gq::oracle {

/// Expand -> snap -> soft reconstruction error, written from the formulas.
inline std::vector<int> centroid_codes(int bits, double mu) {
  const int m = 1 << bits;
  std::vector<int> codes(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double z = -1.0 + 2.0 * j / (m - 1);
    const double e = (z < 0 ? -1.0 : 1.0) * (std::pow(1.0 + mu, std::fabs(z)) - 1.0) / mu;
    codes[static_cast<std::size_t>(j)] =
        std::clamp(static_cast<int>(std::lround(128.0 * e)), -128, 127);
  }
  // Boundary poles land exactly on +-1 in exact arithmetic.
  codes.front() = -128;
  codes.back() = 127;
  return codes;
}

inline double soft_error(std::span<const double> w_norm, const std::vector<int>& codes,
                         double alpha) {
  double total = 0.0;
  for (double w : w_norm) {
    double best = 1e300;
    for (int k : codes) best = std::min(best, std::fabs(w - k / 128.0));
    double num = 0.0, den = 0.0;
    for (int k : codes) {
      const double e = std::exp(-alpha * (std::fabs(w - k / 128.0) - best));
      num += e * (k / 128.0);
      den += e;
    }
    total += (num / den - w) * (num / den - w);
  }
  return std::sqrt(total);
}

/// Soft reconstruction of a single weight in extended precision, so central
/// differences stay accurate where the derivative is tiny.
inline long double soft_value(long double w, std::span<const double> z, long double alpha) {
  long double best = 1e300L;
  for (double c : z) best = std::min(best, std::fabs(w - c));
  long double num = 0.0L, den = 0.0L;
  for (double c : z) {
    const long double e = std::exp(-alpha * (std::fabs(w - c) - best));
    num += e * c;
    den += e;
  }
  return num / den;
}

inline double central_difference(double w, std::span<const double> z, double alpha) {
  const long double h = 1e-7L;
  return static_cast<double>((soft_value(w + h, z, alpha) - soft_value(w - h, z, alpha)) /
                             (2.0L * h));
}

/// Objective in mu for one tensor, memoized on the code vector.
class MuGrid {
 public:
  MuGrid(std::span<const double> w, int bits, double alpha) : bits_(bits), alpha_(alpha) {
    double scale = 0.0;
    for (double v : w) scale = std::max(scale, std::fabs(v));
    for (double v : w) w_.push_back(v / scale);
  }

  double operator()(double mu) {
    const auto codes = centroid_codes(bits_, mu);
    auto it = memo_.find(codes);
    if (it != memo_.end()) return it->second;
    const double f = soft_error(w_, codes, alpha_);
    memo_.emplace(codes, f);
    return f;
  }

  /// Minimum over `points` log-spaced mu values in [lo, hi].
  double exhaustive_min(double lo, double hi, int points) {
    double best = 1e300;
    for (int i = 0; i < points; ++i) {
      const double u = std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1);
      best = std::min(best, (*this)(std::exp(u)));
    }
    return best;
  }

 private:
  int bits_;
  double alpha_;
  std::vector<double> w_;
  std::map<std::vector<int>, double> memo_;
};

}  // namespace gq::oracle
