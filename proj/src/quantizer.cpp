#include "gq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>

#include "gq/error.hpp"
#include "gq/kernels.hpp"

namespace gq {

namespace {

void check_bit_depth(int bit_depth) {
  if (bit_depth < kMinBitDepth || bit_depth > kMaxBitDepth) {
    throw Error(ErrorCode::InvalidBitDepth,
                "bit depth must be in [1, 8], got " + std::to_string(bit_depth));
  }
}

void check_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw Error(ErrorCode::InvalidMu, "mu must be positive and finite");
  }
}

double checked_alpha(double alpha) {
  if (!(alpha >= 1.0)) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must be >= 1");
  }
  return std::min(alpha, kMaxAlpha);
}

void check_assign_inputs(std::span<const double> w, const CentroidVector& z) {
  if (w.empty() || z.values.empty()) {
    throw Error(ErrorCode::EmptyInput, "weights and centroids must be non-empty");
  }
}

int count_distinct(const std::vector<std::int8_t>& codes) {
  return static_cast<int>(std::set<std::int8_t>(codes.begin(), codes.end()).size());
}

double max_abs(std::span<const double> w) {
  double m = 0.0;
  for (double v : w) m = std::max(m, std::abs(v));
  return m;
}

bool is_constant(std::span<const double> w) {
  return std::adjacent_find(w.begin(), w.end(), std::not_equal_to<>()) == w.end();
}

std::vector<double> normalized(std::span<const double> w, double scale) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / scale;
  return out;
}

/// Objective over normalized weights; memoized on the snapped code vector
/// since the objective depends on mu only through those codes.
class MuObjective {
 public:
  MuObjective(std::span<const double> w_norm, int bit_depth, double alpha,
              MuLawMode mode)
      : w_(w_norm), bit_depth_(bit_depth), alpha_(alpha), mode_(mode) {}

  double operator()(double mu) {
    auto snapped = build_centroids(bit_depth_, MuLawConfig{mu, mode_});
    auto it = cache_.find(snapped.codes);
    if (it != cache_.end()) return it->second;
    const double err = std::sqrt(
        kernels::parallel::soft_squared_error(w_, snapped.snapped.values, alpha_));
    cache_.emplace(std::move(snapped.codes), err);
    return err;
  }

 private:
  std::span<const double> w_;
  int bit_depth_;
  double alpha_;
  MuLawMode mode_;
  std::map<std::vector<std::int8_t>, double> cache_;
};

// Pieces narrower than this in ln(mu) are not resolved.
constexpr double kPieceResolution = 1e-9;

struct Piece {
  double u;  // ln(mu) of one point inside the piece
  std::vector<std::int8_t> codes;
};

/// Lists the constant-code pieces of [mu_min, mu_max] in increasing mu.
/// Every centroid's code is bisected separately inside each cell of the log
/// grid, giving the mu values where it steps; one point between consecutive
/// steps represents each piece.
class PieceEnumerator {
 public:
  PieceEnumerator(int bit_depth, MuLawMode mode)
      : bit_depth_(bit_depth), mode_(mode),
        linear_(build_linear_centroids(bit_depth).values) {}

  std::vector<Piece> run(double mu_min, double mu_max, int grid_points) const {
    const double lo = std::log(mu_min);
    const double hi = std::log(mu_max);
    const double step = (hi - lo) / (grid_points - 1);
    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) grid[i] = lo + step * i;
    grid.back() = hi;

    std::vector<double> cuts;
    for (double z : linear_) {
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        scan(z, grid[i], grid[i + 1], code(z, grid[i]), code(z, grid[i + 1]), cuts);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(hi);

    std::vector<Piece> out;
    double a = lo;
    for (double b : cuts) {
      if (b - a < kPieceResolution && b != hi) continue;
      const double u = 0.5 * (a + b);
      auto codes = build_centroids(bit_depth_, MuLawConfig{std::exp(u), mode_}).codes;
      if (out.empty() || codes != out.back().codes) out.push_back({u, std::move(codes)});
      a = b;
    }
    return out;
  }

 private:
  int code(double z, double u) const {
    const double v = mulaw_expand_value(z, MuLawConfig{std::exp(u), mode_});
    return static_cast<int>(std::clamp(std::lround(128.0 * v), static_cast<long>(kGridCodeMin),
                                       static_cast<long>(kGridCodeMax)));
  }

  // Standard-mode centroids move monotonically in mu, so equal end codes mean
  // no step; the verbatim expansion turns at most once, which the grid
  // seeding keeps inside a single cell.
  void scan(double z, double a, double b, int ca, int cb, std::vector<double>& cuts) const {
    if (ca == cb) return;
    const double mid = 0.5 * (a + b);
    if (b - a < kPieceResolution) {
      cuts.push_back(mid);
      return;
    }
    const int cm = code(z, mid);
    scan(z, a, mid, ca, cm, cuts);
    scan(z, mid, b, cm, cb, cuts);
  }

  int bit_depth_;
  MuLawMode mode_;
  std::vector<double> linear_;
};

/// Piece lists depend only on the search configuration, and training refits
/// with the same one many times.
std::shared_ptr<const std::vector<Piece>> pieces_for(int bit_depth,
                                                     const MuSearchConfig& search) {
  using Key = std::tuple<int, int, double, double, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const std::vector<Piece>>> cache;
  const Key key{bit_depth, static_cast<int>(search.mode), search.mu_min, search.mu_max,
                search.grid_points};
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) {
    slot = std::make_shared<const std::vector<Piece>>(
        PieceEnumerator(bit_depth, search.mode)
            .run(search.mu_min, search.mu_max, search.grid_points));
  }
  return slot;
}

// Softmax terms below exp(-40) of the dominant one are ignored when
// updating incrementally; they move the objective by far less than rounding.
constexpr double kNegligibleExponent = 40.0;

/// Sum of squared soft-quantization errors, kept per weight so that moving a
/// few centroids only touches the weights near them. Each weight stores its
/// softmax numerator and denominator relative to its nearest centroid.
class SoftErrorSweep {
 public:
  SoftErrorSweep(std::span<const double> w_norm, double alpha, std::vector<double> z)
      : w_(w_norm.begin(), w_norm.end()), alpha_(alpha), z_(std::move(z)) {
    std::sort(w_.begin(), w_.end());
    const std::size_t n = w_.size();
    ref_.resize(n);
    near_.resize(n);
    num_.resize(n);
    den_.resize(n);
    err_.resize(n);
    delta_.resize(n);
    refresh_all();
  }

  double total() const { return total_ + compensation_; }

  void move_to(const std::vector<double>& z) {
    moved_.clear();
    old_.clear();
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j] != z_[j]) {
        moved_.push_back(j);
        old_.push_back(z_[j]);
      }
    }
    if (moved_.empty()) return;
    if (moved_.size() * 4 > z.size()) {
      z_ = z;
      refresh_all();
      return;
    }
    // Only weights near an old or new centroid position see a change.
    const double h = kNegligibleExponent / alpha_ + std::max(reach(z_), reach(z));
    spans_.clear();
    for (std::size_t k = 0; k < moved_.size(); ++k) {
      const double zn = z[moved_[k]];
      spans_.emplace_back(std::min(old_[k], zn) - h, std::max(old_[k], zn) + h);
    }
    std::sort(spans_.begin(), spans_.end());
    z_ = z;
    double lo = spans_.front().first, hi = spans_.front().second;
    for (std::size_t k = 1; k <= spans_.size(); ++k) {
      if (k < spans_.size() && spans_[k].first <= hi) {
        hi = std::max(hi, spans_[k].second);
        continue;
      }
      update_range(lo, hi);
      if (k < spans_.size()) std::tie(lo, hi) = spans_[k];
    }
  }

 private:
  void update_range(double lo, double hi) {
    const auto first = static_cast<std::ptrdiff_t>(
        std::lower_bound(w_.begin(), w_.end(), lo) - w_.begin());
    const auto last = static_cast<std::ptrdiff_t>(
        std::upper_bound(w_.begin(), w_.end(), hi) - w_.begin());
#pragma omp parallel for schedule(static) if (last - first >= 4096)
    for (std::ptrdiff_t i = first; i < last; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double before = err_[idx];
      update(idx);
      delta_[idx] = err_[idx] - before;
    }
    for (std::ptrdiff_t i = first; i < last; ++i) add(delta_[static_cast<std::size_t>(i)]);
  }


  // Upper bound on the distance from any point of [-1, 1] to its nearest
  // centroid; z is sorted.
  static double reach(const std::vector<double>& z) {
    double r = std::max(z.front() + 1.0, 1.0 - z.back());
    for (std::size_t j = 1; j < z.size(); ++j) r = std::max(r, 0.5 * (z[j] - z[j - 1]));
    return r;
  }

  // Rebuilds weight i from the centroids within the cutoff of its nearest.
  void refresh(std::size_t i) {
    const double w = w_[i];
    const auto it = std::lower_bound(z_.begin(), z_.end(), w);
    std::size_t near = static_cast<std::size_t>(it - z_.begin());
    if (near == z_.size() || (near > 0 && w - z_[near - 1] <= z_[near] - w)) --near;
    const double ref = std::abs(w - z_[near]);
    const double cut = ref + kNegligibleExponent / alpha_;
    std::size_t a = near, b = near + 1;
    while (a > 0 && w - z_[a - 1] <= cut) --a;
    while (b < z_.size() && z_[b] - w <= cut) ++b;
    double num = 0.0, den = 0.0;
    for (std::size_t j = a; j < b; ++j) {
      const double e = std::exp(-alpha_ * (std::abs(w - z_[j]) - ref));
      num += z_[j] * e;
      den += e;
    }
    ref_[i] = ref;
    near_[i] = near;
    num_[i] = num;
    den_[i] = den;
    const double r = num / den - w;
    err_[i] = r * r;
  }

  double term(double w, double z, double ref) const {
    const double x = alpha_ * (std::abs(w - z) - ref);
    return x > kNegligibleExponent ? 0.0 : std::exp(-x);
  }

  void update(std::size_t i) {
    const double w = w_[i];
    const double ref = ref_[i];
    for (std::size_t j : moved_) {
      if (j == near_[i] || std::abs(w - z_[j]) < ref) {
        refresh(i);
        return;
      }
    }
    for (std::size_t k = 0; k < moved_.size(); ++k) {
      const double zn = z_[moved_[k]];
      const double zo = old_[k];
      const double en = term(w, zn, ref);
      const double eo = term(w, zo, ref);
      num_[i] += zn * en - zo * eo;
      den_[i] += en - eo;
    }
    const double r = num_[i] / den_[i] - w;
    err_[i] = r * r;
  }

  void refresh_all() {
    const auto n = static_cast<std::ptrdiff_t>(w_.size());
#pragma omp parallel for schedule(static) if (n >= 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) refresh(static_cast<std::size_t>(i));
    total_ = 0.0;
    compensation_ = 0.0;
    for (double e : err_) add(e);
  }

  // Neumaier summation keeps the running total accurate over many updates.
  void add(double x) {
    const double t = total_ + x;
    if (std::abs(total_) >= std::abs(x)) {
      compensation_ += (total_ - t) + x;
    } else {
      compensation_ += (x - t) + total_;
    }
    total_ = t;
  }

  std::vector<double> w_;
  double alpha_;
  std::vector<double> z_;
  std::vector<double> ref_;
  std::vector<std::size_t> near_;
  std::vector<double> num_, den_, err_, delta_;
  std::vector<std::size_t> moved_;
  std::vector<double> old_;
  std::vector<std::pair<double, double>> spans_;
  double total_ = 0.0;
  double compensation_ = 0.0;
};

std::vector<double> code_values(const std::vector<std::int8_t>& codes) {
  std::vector<double> z(codes.size());
  for (std::size_t j = 0; j < codes.size(); ++j) z[j] = codes[j] / 128.0;
  return z;
}

double fit_mu_sweep(std::span<const double> w_norm, int bit_depth, double alpha,
                    const MuSearchConfig& search) {
  const auto shared = pieces_for(bit_depth, search);
  const auto& pieces = *shared;
  SoftErrorSweep sweep(w_norm, alpha, code_values(pieces.front().codes));
  std::size_t best = 0;
  double best_f = sweep.total();
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    sweep.move_to(code_values(pieces[k].codes));
    const double f = sweep.total();
    if (f < best_f) {
      best_f = f;
      best = k;
    }
  }
  return std::exp(pieces[best].u);
}

double fit_mu_golden(std::span<const double> w_norm, int bit_depth, double alpha,
                     const MuSearchConfig& search) {
  MuObjective objective(w_norm, bit_depth, alpha, search.mode);

  const double lo = std::log(search.mu_min);
  const double hi = std::log(search.mu_max);
  const int g = search.grid_points;
  const double step = (hi - lo) / (g - 1);

  double best_u = lo;
  double best_f = objective(search.mu_min);
  int best_i = 0;
  auto consider = [&](double u, double f) {
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  };
  for (int i = 1; i < g; ++i) {
    const double u = (i == g - 1) ? hi : lo + step * i;
    const double f = objective(std::exp(u));
    if (f < best_f) best_i = i;
    consider(u, f);
  }

  // Golden-section refinement inside the cells around the best grid point.
  double a = lo + step * std::max(0, best_i - 1);
  double b = std::min(hi, lo + step * std::min(g - 1, best_i + 1));
  const double inv_phi = 1.0 / std::numbers::phi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = objective(std::exp(c));
  double fd = objective(std::exp(d));
  consider(c, fc);
  consider(d, fd);
  while (b - a > search.log_tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = objective(std::exp(c));
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = objective(std::exp(d));
      consider(d, fd);
    }
  }
  const double mid = 0.5 * (a + b);
  consider(mid, objective(std::exp(mid)));
  return std::exp(best_u);
}

}  // namespace

float dequantize_code(float scale, int code) {
  if (scale == 0.0f) return 0.0f;
  return static_cast<float>(static_cast<double>(scale) * code / 128.0);
}

float CentroidCodebook::centroid(std::size_t j) const {
  return dequantize_code(scale, grid_codes[j]);
}

std::vector<float> CentroidCodebook::centroids() const {
  std::vector<float> out(grid_codes.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = centroid(j);
  return out;
}

CentroidVector build_linear_centroids(int bit_depth) {
  check_bit_depth(bit_depth);
  const int m = 1 << bit_depth;
  CentroidVector z;
  z.bit_depth = bit_depth;
  z.values.resize(static_cast<std::size_t>(m));
  // Integer numerators keep z_j = -z_{m-1-j} exact.
  for (int j = 0; j < m; ++j) {
    z.values[static_cast<std::size_t>(j)] =
        static_cast<double>(2 * j - (m - 1)) / static_cast<double>(m - 1);
  }
  return z;
}

double mulaw_expand_value(double z, const MuLawConfig& cfg) {
  check_mu(cfg.mu);
  const double a = std::abs(z);
  if (!(a <= 1.0)) {
    throw Error(ErrorCode::InvalidTensor, "mu-law input must lie in [-1, 1]");
  }
  if (a == 0.0) return 0.0;
  const double grow = std::expm1(a * std::log1p(cfg.mu));
  double mag = 0.0;
  if (cfg.mode == MuLawMode::standard) {
    mag = (a == 1.0) ? 1.0 : grow / cfg.mu;
  } else {
    mag = grow / (1.0 + cfg.mu);
  }
  return std::copysign(mag, z);
}

CentroidVector mulaw_expand(const CentroidVector& z, const MuLawConfig& cfg) {
  check_mu(cfg.mu);
  CentroidVector out;
  out.bit_depth = z.bit_depth;
  out.values.reserve(z.size());
  for (double v : z.values) out.values.push_back(mulaw_expand_value(v, cfg));
  return out;
}

SnappedCentroids snap_to_int8_grid(const CentroidVector& z) {
  SnappedCentroids out;
  out.snapped.bit_depth = z.bit_depth;
  out.codes.reserve(z.size());
  out.snapped.values.reserve(z.size());
  for (double v : z.values) {
    const long k = std::clamp(std::lround(128.0 * v), static_cast<long>(kGridCodeMin),
                              static_cast<long>(kGridCodeMax));
    out.codes.push_back(static_cast<std::int8_t>(k));
    out.snapped.values.push_back(static_cast<double>(k) / 128.0);
  }
  return out;
}

SnappedCentroids build_centroids(int bit_depth, const MuLawConfig& cfg) {
  return snap_to_int8_grid(mulaw_expand(build_linear_centroids(bit_depth), cfg));
}

double anneal_alpha(const AnnealSchedule& sched, std::int64_t step) {
  if (sched.s_end == sched.s_start) {
    throw Error(ErrorCode::InvalidSchedule, "s_end must differ from s_start");
  }
  if (sched.s_end < sched.s_start || !(sched.alpha_start >= 1.0) ||
      !(sched.alpha_end >= sched.alpha_start)) {
    throw Error(ErrorCode::InvalidSchedule,
                "schedule requires 1 <= alpha_start <= alpha_end and s_start < s_end");
  }
  const double frac = static_cast<double>(step - sched.s_start) /
                      static_cast<double>(sched.s_end - sched.s_start);
  const double alpha = sched.alpha_start + frac * (sched.alpha_end - sched.alpha_start);
  return std::clamp(alpha, sched.alpha_start, sched.alpha_end);
}

AssignmentMatrix soft_assign(std::span<const double> w, const CentroidVector& z,
                             double alpha) {
  check_assign_inputs(w, z);
  alpha = checked_alpha(alpha);
  AssignmentMatrix a;
  a.rows = w.size();
  a.cols = z.size();
  a.probs.resize(a.rows * a.cols);
  kernels::parallel::soft_assign(w, z.values, alpha, a.probs);
  return a;
}

std::vector<double> soft_quantize(std::span<const double> w,
                                  const CentroidVector& z, double alpha) {
  check_assign_inputs(w, z);
  alpha = checked_alpha(alpha);
  std::vector<double> out(w.size());
  kernels::parallel::soft_quantize(w, z.values, alpha, out);
  return out;
}

double soft_quantize_jacobian(double w, const CentroidVector& z, double alpha) {
  if (z.values.empty()) {
    throw Error(ErrorCode::EmptyInput, "centroids must be non-empty");
  }
  alpha = checked_alpha(alpha);
  for (double c : z.values) {
    if (c == w) {
      throw Error(ErrorCode::NonDifferentiablePoint,
                  "soft quantization is not differentiable at a centroid");
    }
  }
  std::vector<double> probs(z.size());
  const double mean = kernels::soft_row(w, z.values, alpha, probs);
  // With s_j = sgn(w - z_j): d a_j / dw = -alpha a_j (s_j - sum_k a_k s_k).
  double zs = 0.0;
  double s_mean = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double s = (w > z.values[j]) ? 1.0 : -1.0;
    zs += z.values[j] * probs[j] * s;
    s_mean += probs[j] * s;
  }
  return -alpha * (zs - mean * s_mean);
}

HardQuantized hard_quantize(std::span<const double> w, const CentroidVector& z) {
  if (z.values.empty()) {
    throw Error(ErrorCode::EmptyInput, "centroids must be non-empty");
  }
  HardQuantized out;
  out.values.resize(w.size());
  out.indices.resize(w.size());
  kernels::parallel::hard_quantize(w, z.values, out.values, out.indices);
  return out;
}

double mu_objective(std::span<const double> w, int bit_depth, double alpha,
                    double mu, MuLawMode mode) {
  check_bit_depth(bit_depth);
  alpha = checked_alpha(alpha);
  const double scale = max_abs(w);
  if (w.empty() || scale == 0.0 || is_constant(w)) {
    throw Error(ErrorCode::DegenerateTensor, "mu fitting needs a non-constant tensor");
  }
  const auto w_norm = normalized(w, scale);
  MuObjective objective(w_norm, bit_depth, alpha, mode);
  return objective(mu);
}

double fit_mu(std::span<const double> w, int bit_depth, double alpha,
              const MuSearchConfig& search) {
  check_bit_depth(bit_depth);
  alpha = checked_alpha(alpha);
  check_mu(search.mu_min);
  check_mu(search.mu_max);
  if (search.mu_max <= search.mu_min || search.grid_points < 3 ||
      !(search.log_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "invalid mu search configuration");
  }
  const double scale = max_abs(w);
  if (w.empty() || scale == 0.0 || is_constant(w)) {
    throw Error(ErrorCode::DegenerateTensor, "mu fitting needs a non-constant tensor");
  }
  for (double v : w) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidTensor, "non-finite weight");
  }
  const auto w_norm = normalized(w, scale);
  return search.method == MuSearchMethod::golden_section
             ? fit_mu_golden(w_norm, bit_depth, alpha, search)
             : fit_mu_sweep(w_norm, bit_depth, alpha, search);
}

QuantizedTensor project_onto_codebook(std::span<const float> t,
                                      const CentroidCodebook& codebook) {
  if (codebook.grid_codes.empty()) {
    throw Error(ErrorCode::EmptyInput, "codebook must be non-empty");
  }
  const auto centroids = codebook.centroids();
  const std::vector<double> z(centroids.begin(), centroids.end());
  const std::vector<double> w(t.begin(), t.end());
  std::vector<double> values(w.size());
  QuantizedTensor out;
  out.codebook = codebook;
  out.indices.resize(w.size());
  kernels::parallel::hard_quantize(w, z, values, out.indices);
  out.values.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.values[i] = centroids[out.indices[i]];
  }
  return out;
}

QuantizedTensor quantize_tensor(std::span<const float> t, int bit_depth,
                                double alpha, const MuPolicy& mu_policy,
                                bool hard, MuLawMode mode) {
  check_bit_depth(bit_depth);
  if (t.empty()) throw Error(ErrorCode::EmptyInput, "tensor must be non-empty");
  float scale = 0.0f;
  for (float v : t) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidTensor, "tensor contains NaN or Inf");
    }
    scale = std::max(scale, std::abs(v));
  }
  alpha = checked_alpha(alpha);

  const std::vector<double> w(t.begin(), t.end());
  double mu = mu_policy.fixed_mu.value_or(MuLawConfig{}.mu);
  if (!mu_policy.is_fixed() && scale > 0.0f && !is_constant(w)) {
    MuSearchConfig search = mu_policy.search;
    search.mode = mode;
    mu = fit_mu(w, bit_depth, alpha, search);
  }
  const auto snapped = build_centroids(bit_depth, MuLawConfig{mu, mode});

  CentroidCodebook codebook;
  codebook.bit_depth = bit_depth;
  codebook.mu = mu;
  codebook.grid_codes = snapped.codes;
  codebook.scale = scale;
  codebook.effective_distinct = count_distinct(snapped.codes);

  if (hard) return project_onto_codebook(t, codebook);

  QuantizedTensor out;
  out.codebook = std::move(codebook);
  if (scale == 0.0f) {
    out.values.assign(t.begin(), t.end());
    return out;
  }
  const auto w_norm = normalized(w, scale);
  std::vector<double> soft(w.size());
  kernels::parallel::soft_quantize(w_norm, snapped.snapped.values, alpha, soft);
  out.values.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.values[i] = static_cast<float>(soft[i] * static_cast<double>(scale));
  }
  return out;
}

std::vector<std::uint32_t> indices_for_values(std::span<const float> values,
                                              const CentroidCodebook& codebook) {
  std::unordered_map<float, std::uint32_t> lookup;
  for (std::size_t j = codebook.size(); j-- > 0;) {
    lookup[codebook.centroid(j)] = static_cast<std::uint32_t>(j);
  }
  std::vector<std::uint32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // Collapse -0.0f onto the +0 centroid.
    const float v = values[i] == 0.0f ? 0.0f : values[i];
    auto it = lookup.find(v);
    if (it == lookup.end()) {
      throw Error(ErrorCode::InvalidTensor,
                  "value at index " + std::to_string(i) + " is not on the codebook");
    }
    out[i] = it->second;
  }
  return out;
}

}  // namespace gq
