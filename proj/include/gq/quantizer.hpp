#pragma once

// Soft-to-hard weight quantization onto mu-law warped centroids that are
// snapped to the INT8 grid k/128.
//
// All centroid math happens in normalized weight space [-1, 1]. A tensor is
// normalized by its own max |w| (the codebook scale) and dequantized back as
// scale * k / 128.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gq {

inline constexpr int kMinBitDepth = 1;
inline constexpr int kMaxBitDepth = 8;
inline constexpr double kMaxAlpha = 1e6;
inline constexpr int kGridCodeMin = -128;
inline constexpr int kGridCodeMax = 127;

/// Ordered centroids in normalized weight space with m = 2^bit_depth.
struct CentroidVector {
  std::vector<double> values;
  int bit_depth = 0;

  std::size_t size() const { return values.size(); }
};

enum class MuLawMode {
  /// sgn(z) ((1+mu)^|z| - 1) / mu; fixes 0 and +-1.
  standard,
  /// Denominator (1+mu) instead of mu; +-1 maps to +-mu/(1+mu).
  paper_verbatim,
};

struct MuLawConfig {
  double mu = 8.0;
  MuLawMode mode = MuLawMode::standard;
};

/// Linear temperature ramp from alpha_start at s_start to alpha_end at s_end.
struct AnnealSchedule {
  double alpha_start = 10.0;
  double alpha_end = 400.0;
  std::int64_t s_start = 0;
  std::int64_t s_end = 1;
};

/// Row-major n x m soft assignment probabilities.
struct AssignmentMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> probs;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(probs).subspan(i * cols, cols);
  }
  double at(std::size_t i, std::size_t j) const { return probs[i * cols + j]; }
};

/// Per-kernel quantization alphabet. Entry j dequantizes to
/// scale * grid_codes[j] / 128.
struct CentroidCodebook {
  int bit_depth = 0;
  double mu = 0.0;
  std::vector<std::int8_t> grid_codes;
  float scale = 0.0f;
  int effective_distinct = 0;

  std::size_t size() const { return grid_codes.size(); }
  float centroid(std::size_t j) const;
  std::vector<float> centroids() const;

  bool operator==(const CentroidCodebook&) const = default;
};

/// scale * k / 128 rounded once to float. A zero scale always yields +0.
float dequantize_code(float scale, int code);

/// piece_sweep evaluates every constant-code piece of the objective in the
/// search range (the log grid only seeds the piece enumeration);
/// golden_section is the plain grid search plus golden-section refinement.
enum class MuSearchMethod { piece_sweep, golden_section };

struct MuSearchConfig {
  double mu_min = 0.125;
  double mu_max = 256.0;
  int grid_points = 89;
  /// Golden-section stops once the bracket is this narrow in ln(mu).
  double log_tolerance = 1e-3;
  MuLawMode mode = MuLawMode::standard;
  MuSearchMethod method = MuSearchMethod::piece_sweep;
};

/// Either a fixed mu or a per-call refit via fit_mu.
struct MuPolicy {
  std::optional<double> fixed_mu;
  MuSearchConfig search{};

  static MuPolicy fixed(double mu) { return MuPolicy{mu, {}}; }
  static MuPolicy refit(MuSearchConfig search = {}) {
    return MuPolicy{std::nullopt, search};
  }
  bool is_fixed() const { return fixed_mu.has_value(); }
};

struct SnappedCentroids {
  std::vector<std::int8_t> codes;
  CentroidVector snapped;
};

struct HardQuantized {
  std::vector<double> values;
  std::vector<std::uint32_t> indices;
};

struct QuantizedTensor {
  std::vector<float> values;
  CentroidCodebook codebook;
  /// Codebook index per element; filled only for hard quantization.
  std::vector<std::uint32_t> indices;
};

// -- centroid construction --------------------------------------------------

CentroidVector build_linear_centroids(int bit_depth);
double mulaw_expand_value(double z, const MuLawConfig& cfg);
CentroidVector mulaw_expand(const CentroidVector& z, const MuLawConfig& cfg);
SnappedCentroids snap_to_int8_grid(const CentroidVector& z);

/// Linear centroids, mu-law expanded, then snapped: the full alphabet for a
/// given bit depth and mu.
SnappedCentroids build_centroids(int bit_depth, const MuLawConfig& cfg);

// -- assignment ---------------------------------------------------------------

double anneal_alpha(const AnnealSchedule& sched, std::int64_t step);

AssignmentMatrix soft_assign(std::span<const double> w, const CentroidVector& z,
                             double alpha);
std::vector<double> soft_quantize(std::span<const double> w,
                                  const CentroidVector& z, double alpha);
/// d(soft_quantize)/dw at a single point.
double soft_quantize_jacobian(double w, const CentroidVector& z, double alpha);
HardQuantized hard_quantize(std::span<const double> w, const CentroidVector& z);

// -- mu fitting -------------------------------------------------------------

/// ||soft_quantize(w / max|w|, centroids(mu)) - w / max|w|||_2
double mu_objective(std::span<const double> w, int bit_depth, double alpha,
                    double mu, MuLawMode mode);

double fit_mu(std::span<const double> w, int bit_depth, double alpha,
              const MuSearchConfig& search = {});

// -- tensors ------------------------------------------------------------------

QuantizedTensor quantize_tensor(std::span<const float> t, int bit_depth,
                                double alpha, const MuPolicy& mu_policy,
                                bool hard,
                                MuLawMode mode = MuLawMode::standard);

/// Hard projection onto an existing codebook. Returns the input unchanged if
/// it already lies on the codebook.
QuantizedTensor project_onto_codebook(std::span<const float> t,
                                      const CentroidCodebook& codebook);

/// Recovers codebook indices for values that lie exactly on the codebook;
/// duplicates resolve to the lowest index. Throws InvalidTensor otherwise.
std::vector<std::uint32_t> indices_for_values(std::span<const float> values,
                                              const CentroidCodebook& codebook);

}  // namespace gq
