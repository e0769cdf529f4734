#pragma once

// Per-kernel quantization statistics (distinct values in use, weight
// boundary, error, SQNR) and box-plot summaries over groups of kernels.

#include <cstdint>
#include <functional>
#include <limits>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "gq/quantizer.hpp"

namespace gq {

enum class KernelKind { dense, mhsa, conv, other };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

/// Written in place of +inf (exact representation) and -inf in CSV/JSON.
inline constexpr double kSqnrExactSentinel = 999.0;

struct KernelStats {
  std::string name;
  KernelKind kind = KernelKind::other;
  float weight_min = 0.0f;
  float weight_max = 0.0f;
  int distinct_values_used = 0;
  int bit_depth = 0;
  double quant_error_l2 = 0.0;
  /// +inf when the quantized tensor equals the original.
  double sqnr_db = 0.0;
};

/// First matching pattern wins; unmatched names are `other`.
struct KindRule {
  std::string pattern;
  KernelKind kind;
};

class KindClassifier {
 public:
  KindClassifier();  // default name patterns
  explicit KindClassifier(std::vector<KindRule> rules);

  KernelKind classify(const std::string& name) const;

 private:
  std::vector<std::pair<std::regex, KernelKind>> rules_;
};

KernelStats kernel_stats(std::string name, KernelKind kind,
                         std::span<const float> original,
                         std::span<const float> quantized,
                         const CentroidCodebook& codebook);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

struct GroupSummary {
  std::string group;
  std::size_t kernels = 0;
  BoxStats distinct;
  BoxStats weight_min;
  BoxStats weight_max;
  BoxStats boundary_width;
};

using GroupKey = std::function<std::string(const KernelStats&)>;
GroupKey group_by_kind();

/// One summary per group, in first-seen order.
std::vector<GroupSummary> allocation_report(const std::vector<KernelStats>& stats,
                                            const GroupKey& grouping = group_by_kind());

struct MuBenefit {
  double error_linear = 0.0;
  double error_mulaw_fitted = 0.0;
  double fitted_mu = 0.0;
};

/// Hard-quantization error with near-identity centroids vs fit_mu centroids.
MuBenefit mu_benefit(std::span<const float> t, int bit_depth, double alpha);

/// mu used for the "linear" side of mu_benefit.
inline constexpr double kNearIdentityMu = 1e-6;

std::string stats_csv(const std::vector<KernelStats>& stats);
std::string stats_json(const std::vector<KernelStats>& stats);
std::string summary_csv(const std::vector<GroupSummary>& groups);
std::string summary_json(const std::vector<GroupSummary>& groups);

}  // namespace gq
