#pragma once

// Data-parallel inner loops of the quantizer. Each operation exists twice:
// `serial` is the reference implementation kept for testing, `parallel`
// spreads rows over OpenMP threads. Every row is computed by the same code in
// the same order, so both produce bit-identical results at any thread count.

#include <cstddef>
#include <cstdint>
#include <span>

namespace gq::kernels {

// Rows below this size stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = 4096;

// Partial sums are accumulated over fixed blocks, then the block sums are
// added in order. The result never depends on the thread count.
inline constexpr std::size_t kReductionBlock = 1024;

/// Soft projection of a single weight: sum_j z_j * softmax(-alpha |w - z_j|).
/// When `probs` is non-empty it receives the row of the assignment matrix.
double soft_row(double w, std::span<const double> z, double alpha,
                std::span<double> probs = {});

/// Nearest centroid; ties go to the lower index.
std::uint32_t nearest_index(double w, std::span<const double> z);

namespace serial {

void soft_assign(std::span<const double> w, std::span<const double> z,
                 double alpha, std::span<double> probs);
void soft_quantize(std::span<const double> w, std::span<const double> z,
                   double alpha, std::span<double> out);
void hard_quantize(std::span<const double> w, std::span<const double> z,
                   std::span<double> values, std::span<std::uint32_t> indices);
/// sum_i (soft_row(w_i) - w_i)^2
double soft_squared_error(std::span<const double> w, std::span<const double> z,
                          double alpha);

}  // namespace serial

namespace parallel {

void soft_assign(std::span<const double> w, std::span<const double> z,
                 double alpha, std::span<double> probs);
void soft_quantize(std::span<const double> w, std::span<const double> z,
                   double alpha, std::span<double> out);
void hard_quantize(std::span<const double> w, std::span<const double> z,
                   std::span<double> values, std::span<std::uint32_t> indices);
double soft_squared_error(std::span<const double> w, std::span<const double> z,
                          double alpha);

}  // namespace parallel

/// Caps the OpenMP team size; 0 restores the runtime default.
void set_max_threads(int threads);
int max_threads();

}  // namespace gq::kernels
