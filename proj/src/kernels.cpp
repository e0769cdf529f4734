#include "gq/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gq::kernels {

double soft_row(double w, std::span<const double> z, double alpha,
                std::span<double> probs) {
  // Exponents are shifted by the nearest centroid's distance so the largest
  // term is exactly exp(0) = 1.
  double min_dist = std::abs(w - z[0]);
  for (std::size_t j = 1; j < z.size(); ++j) {
    min_dist = std::min(min_dist, std::abs(w - z[j]));
  }
  double denom = 0.0;
  double numer = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double e = std::exp(-alpha * (std::abs(w - z[j]) - min_dist));
    denom += e;
    numer += z[j] * e;
    if (!probs.empty()) probs[j] = e;
  }
  if (!probs.empty()) {
    for (std::size_t j = 0; j < z.size(); ++j) probs[j] /= denom;
  }
  return numer / denom;
}

std::uint32_t nearest_index(double w, std::span<const double> z) {
  std::uint32_t best = 0;
  double best_dist = std::abs(w - z[0]);
  for (std::size_t j = 1; j < z.size(); ++j) {
    const double d = std::abs(w - z[j]);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

namespace {

double block_error(std::span<const double> w, std::span<const double> z,
                   double alpha, std::size_t block) {
  const std::size_t lo = block * kReductionBlock;
  const std::size_t hi = std::min(w.size(), lo + kReductionBlock);
  double acc = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double r = soft_row(w[i], z, alpha) - w[i];
    acc += r * r;
  }
  return acc;
}

std::size_t block_count(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace

namespace serial {

void soft_assign(std::span<const double> w, std::span<const double> z,
                 double alpha, std::span<double> probs) {
  const std::size_t m = z.size();
  for (std::size_t i = 0; i < w.size(); ++i) {
    soft_row(w[i], z, alpha, probs.subspan(i * m, m));
  }
}

void soft_quantize(std::span<const double> w, std::span<const double> z,
                   double alpha, std::span<double> out) {
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = soft_row(w[i], z, alpha);
}

void hard_quantize(std::span<const double> w, std::span<const double> z,
                   std::span<double> values, std::span<std::uint32_t> indices) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    indices[i] = nearest_index(w[i], z);
    values[i] = z[indices[i]];
  }
}

double soft_squared_error(std::span<const double> w, std::span<const double> z,
                          double alpha) {
  double total = 0.0;
  for (std::size_t b = 0; b < block_count(w.size()); ++b) {
    total += block_error(w, z, alpha, b);
  }
  return total;
}

}  // namespace serial

namespace parallel {

void soft_assign(std::span<const double> w, std::span<const double> z,
                 double alpha, std::span<double> probs) {
  const std::size_t m = z.size();
  const auto n = static_cast<std::ptrdiff_t>(w.size());
#pragma omp parallel for schedule(static) if (w.size() >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    soft_row(w[row], z, alpha, probs.subspan(row * m, m));
  }
}

void soft_quantize(std::span<const double> w, std::span<const double> z,
                   double alpha, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(w.size());
#pragma omp parallel for schedule(static) if (w.size() >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        soft_row(w[static_cast<std::size_t>(i)], z, alpha);
  }
}

void hard_quantize(std::span<const double> w, std::span<const double> z,
                   std::span<double> values, std::span<std::uint32_t> indices) {
  const auto n = static_cast<std::ptrdiff_t>(w.size());
#pragma omp parallel for schedule(static) if (w.size() >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    indices[row] = nearest_index(w[row], z);
    values[row] = z[indices[row]];
  }
}

double soft_squared_error(std::span<const double> w, std::span<const double> z,
                          double alpha) {
  const std::size_t blocks = block_count(w.size());
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (w.size() >= kParallelThreshold)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    partial[static_cast<std::size_t>(b)] =
        block_error(w, z, alpha, static_cast<std::size_t>(b));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace parallel

void set_max_threads(int threads) {
#ifdef _OPENMP
  static const int runtime_default = omp_get_max_threads();
  omp_set_num_threads(threads > 0 ? threads : runtime_default);
#else
  (void)threads;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace gq::kernels
