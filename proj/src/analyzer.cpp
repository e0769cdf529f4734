#include "gq/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "format.hpp"
#include "gq/error.hpp"

namespace gq {

namespace {

double serializable_sqnr(double sqnr) {
  if (std::isinf(sqnr)) return sqnr > 0 ? kSqnrExactSentinel : -kSqnrExactSentinel;
  return sqnr;
}

double hard_error(std::span<const float> t, const CentroidCodebook& codebook) {
  const auto q = project_onto_codebook(t, codebook);
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = static_cast<double>(t[i]) - q.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

CentroidCodebook codebook_for(std::span<const float> t, int bit_depth, double mu) {
  return quantize_tensor(t, bit_depth, 1.0, MuPolicy::fixed(mu), true).codebook;
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::dense: return "dense";
    case KernelKind::mhsa: return "mhsa";
    case KernelKind::conv: return "conv";
    case KernelKind::other: return "other";
  }
  return "other";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "dense") return KernelKind::dense;
  if (s == "mhsa") return KernelKind::mhsa;
  if (s == "conv") return KernelKind::conv;
  if (s == "other") return KernelKind::other;
  throw Error(ErrorCode::InvalidConfig, "unknown kernel kind '" + s + "'");
}

KindClassifier::KindClassifier()
    : KindClassifier({{"mhsa|attn|attention|query|key|value", KernelKind::mhsa},
                      {"conv|depthwise|pointwise|subsampl", KernelKind::conv},
                      {"dense|ffn|ff_|feed|proj|fc|lstm|joint|kernel", KernelKind::dense}}) {}

KindClassifier::KindClassifier(std::vector<KindRule> rules) {
  for (auto& r : rules) {
    try {
      rules_.emplace_back(std::regex(r.pattern, std::regex::icase), r.kind);
    } catch (const std::regex_error&) {
      throw Error(ErrorCode::InvalidConfig, "bad kind pattern '" + r.pattern + "'");
    }
  }
}

KernelKind KindClassifier::classify(const std::string& name) const {
  for (const auto& [re, kind] : rules_) {
    if (std::regex_search(name, re)) return kind;
  }
  return KernelKind::other;
}

KernelStats kernel_stats(std::string name, KernelKind kind,
                         std::span<const float> original,
                         std::span<const float> quantized,
                         const CentroidCodebook& codebook) {
  if (original.size() != quantized.size()) {
    throw Error(ErrorCode::ShapeError, "original and quantized sizes differ for '" + name + "'");
  }
  KernelStats s;
  s.name = std::move(name);
  s.kind = kind;
  s.bit_depth = codebook.bit_depth;
  if (!original.empty()) {
    const auto [lo, hi] = std::minmax_element(original.begin(), original.end());
    s.weight_min = *lo;
    s.weight_max = *hi;
  }
  std::unordered_set<float> distinct;
  double err = 0.0;
  double signal = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    distinct.insert(quantized[i] == 0.0f ? 0.0f : quantized[i]);
    const double d = static_cast<double>(original[i]) - quantized[i];
    err += d * d;
    signal += static_cast<double>(original[i]) * original[i];
  }
  s.distinct_values_used = static_cast<int>(distinct.size());
  s.quant_error_l2 = std::sqrt(err);
  if (err == 0.0) {
    s.sqnr_db = std::numeric_limits<double>::infinity();
  } else if (signal == 0.0) {
    s.sqnr_db = -std::numeric_limits<double>::infinity();
  } else {
    s.sqnr_db = 10.0 * std::log10(signal / err);
  }
  return s;
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  return b;
}

GroupKey group_by_kind() {
  return [](const KernelStats& s) { return to_string(s.kind); };
}

std::vector<GroupSummary> allocation_report(const std::vector<KernelStats>& stats,
                                            const GroupKey& grouping) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const KernelStats*>> members;
  for (const auto& s : stats) {
    auto key = grouping(s);
    if (!members.count(key)) order.push_back(key);
    members[key].push_back(&s);
  }
  std::vector<GroupSummary> out;
  for (const auto& key : order) {
    const auto& group = members[key];
    std::vector<double> distinct, lo, hi, width;
    for (const auto* s : group) {
      distinct.push_back(s->distinct_values_used);
      lo.push_back(s->weight_min);
      hi.push_back(s->weight_max);
      width.push_back(static_cast<double>(s->weight_max) - s->weight_min);
    }
    GroupSummary g;
    g.group = key;
    g.kernels = group.size();
    g.distinct = box_stats(std::move(distinct));
    g.weight_min = box_stats(std::move(lo));
    g.weight_max = box_stats(std::move(hi));
    g.boundary_width = box_stats(std::move(width));
    out.push_back(std::move(g));
  }
  return out;
}

MuBenefit mu_benefit(std::span<const float> t, int bit_depth, double alpha) {
  const std::vector<double> w(t.begin(), t.end());
  MuSearchConfig search;
  // The search starts at the near-identity mu so that the linear alphabet is
  // itself a candidate.
  search.mu_min = kNearIdentityMu;
  search.grid_points = 201;
  MuBenefit r;
  r.fitted_mu = fit_mu(w, bit_depth, alpha, search);
  r.error_linear = hard_error(t, codebook_for(t, bit_depth, kNearIdentityMu));
  r.error_mulaw_fitted = hard_error(t, codebook_for(t, bit_depth, r.fitted_mu));
  return r;
}

std::string stats_csv(const std::vector<KernelStats>& stats) {
  std::ostringstream out;
  out << "name,kind,bit_depth,distinct,weight_min,weight_max,l2_error,sqnr_db\n";
  for (const auto& s : stats) {
    out << s.name << ',' << to_string(s.kind) << ',' << s.bit_depth << ','
        << s.distinct_values_used << ',' << detail::fmt_float(s.weight_min) << ','
        << detail::fmt_float(s.weight_max) << ',' << detail::fmt_double(s.quant_error_l2)
        << ',' << detail::fmt_double(serializable_sqnr(s.sqnr_db)) << '\n';
  }
  return out.str();
}

std::string stats_json(const std::vector<KernelStats>& stats) {
  auto arr = nlohmann::json::array();
  for (const auto& s : stats) {
    arr.push_back({{"name", s.name},
                   {"kind", to_string(s.kind)},
                   {"bit_depth", s.bit_depth},
                   {"distinct", s.distinct_values_used},
                   {"weight_min", s.weight_min},
                   {"weight_max", s.weight_max},
                   {"l2_error", s.quant_error_l2},
                   {"sqnr_db", serializable_sqnr(s.sqnr_db)}});
  }
  return arr.dump(2) + "\n";
}

namespace {

const char* kBoxFields[] = {"min", "q1", "median", "q3", "max", "mean"};

std::vector<double> box_values(const BoxStats& b) {
  return {b.min, b.q1, b.median, b.q3, b.max, b.mean};
}

}  // namespace

std::string summary_csv(const std::vector<GroupSummary>& groups) {
  std::ostringstream out;
  out << "group,kernels";
  for (const char* metric : {"distinct", "weight_min", "weight_max", "boundary_width"}) {
    for (const char* f : kBoxFields) out << ',' << metric << '_' << f;
  }
  out << '\n';
  for (const auto& g : groups) {
    out << g.group << ',' << g.kernels;
    for (const auto* b : {&g.distinct, &g.weight_min, &g.weight_max, &g.boundary_width}) {
      for (double v : box_values(*b)) out << ',' << detail::fmt_double(v);
    }
    out << '\n';
  }
  return out.str();
}

std::string summary_json(const std::vector<GroupSummary>& groups) {
  auto box = [](const BoxStats& b) {
    nlohmann::json j;
    const auto v = box_values(b);
    for (std::size_t i = 0; i < v.size(); ++i) j[kBoxFields[i]] = v[i];
    return j;
  };
  auto arr = nlohmann::json::array();
  for (const auto& g : groups) {
    arr.push_back({{"group", g.group},
                   {"kernels", g.kernels},
                   {"statistic", "quartiles (linear interpolation), mean"},
                   {"distinct", box(g.distinct)},
                   {"weight_min", box(g.weight_min)},
                   {"weight_max", box(g.weight_max)},
                   {"boundary_width", box(g.boundary_width)}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace gq
