#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "gq/error.hpp"
#include "gq/kernels.hpp"
#include "gq/quantizer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace gq {
namespace {

// Independent reference pieces, written without the library's helpers.

std::vector<double> ref_softmax_row(double w, const std::vector<double>& z, double alpha) {
  // Long double and no max shift: only valid for modest alpha.
  std::vector<long double> e(z.size());
  long double sum = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    e[j] = std::exp(-static_cast<long double>(alpha) * std::fabs(static_cast<long double>(w - z[j])));
    sum += e[j];
  }
  std::vector<double> p(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) p[j] = static_cast<double>(e[j] / sum);
  return p;
}

double ref_mulaw(double z, double mu) {
  return (z < 0 ? -1.0 : 1.0) * (std::pow(1.0 + mu, std::fabs(z)) - 1.0) / mu;
}

std::size_t ref_nearest(double w, const std::vector<double>& z) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < z.size(); ++j) {
    if (std::fabs(w - z[j]) < std::fabs(w - z[best])) best = j;
  }
  return best;
}

CentroidVector make_z(std::vector<double> v) {
  CentroidVector z;
  z.values = std::move(v);
  return z;
}

// -- build_linear_centroids ------------------------------------------------------

TEST(LinearCentroids, OneBitIsEndpoints) {
  const auto z = build_linear_centroids(1);
  EXPECT_EQ(z.values, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(z.bit_depth, 1);
}

TEST(LinearCentroids, TwoBitThirds) {
  const auto z = build_linear_centroids(2);
  ASSERT_EQ(z.size(), 4u);
  EXPECT_DOUBLE_EQ(z.values[0], -1.0);
  EXPECT_DOUBLE_EQ(z.values[1], -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(z.values[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(z.values[3], 1.0);
}

TEST(LinearCentroids, SixBitsGiveSixtyFour) { EXPECT_EQ(build_linear_centroids(6).size(), 64u); }

TEST(LinearCentroids, SortedAndSymmetricAtEveryDepth) {
  for (int b = 1; b <= 8; ++b) {
    const auto z = build_linear_centroids(b);
    ASSERT_EQ(z.size(), std::size_t{1} << b);
    for (std::size_t i = 1; i < z.size(); ++i) EXPECT_LT(z.values[i - 1], z.values[i]);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(z.values[i], -z.values[z.size() - 1 - i], 1e-12);
    }
  }
}

TEST(LinearCentroids, RejectsBadDepth) {
  for (int b : {0, 9, -1}) {
    try {
      build_linear_centroids(b);
      FAIL() << b;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidBitDepth);
    }
  }
}

// -- mu-law ------------------------------------------------------------------------

TEST(MuLaw, HandValues) {
  EXPECT_EQ(mulaw_expand_value(0.0, {8.0, MuLawMode::standard}), 0.0);
  EXPECT_EQ(mulaw_expand_value(1.0, {255.0, MuLawMode::standard}), 1.0);
  EXPECT_NEAR(mulaw_expand_value(0.5, {8.0, MuLawMode::standard}), 0.25, 1e-15);
  EXPECT_NEAR(mulaw_expand_value(0.5, {8.0, MuLawMode::paper_verbatim}), 2.0 / 9.0, 1e-15);
}

TEST(MuLaw, MatchesPowFormula) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double z = rng.uniform(-1, 1);
    const double mu = std::exp(rng.uniform(std::log(1e-3), std::log(300.0)));
    EXPECT_NEAR(mulaw_expand_value(z, {mu, MuLawMode::standard}), ref_mulaw(z, mu), 1e-12);
  }
}

TEST(MuLaw, StandardModeProperties) {
  for (double mu : {0.125, 1.0, 8.0, 255.0}) {
    const MuLawConfig cfg{mu, MuLawMode::standard};
    EXPECT_EQ(mulaw_expand_value(1.0, cfg), 1.0);
    EXPECT_EQ(mulaw_expand_value(-1.0, cfg), -1.0);
    double prev = -2.0;
    for (int i = 0; i <= 1000; ++i) {
      const double z = -1.0 + 2.0 * i / 1000.0;
      const double v = mulaw_expand_value(z, cfg);
      EXPECT_NEAR(mulaw_expand_value(-z, cfg), -v, 1e-12);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(MuLaw, IdentityLimit) {
  const MuLawConfig cfg{1e-6, MuLawMode::standard};
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double z = -1.0 + 2.0 * i / 1000.0;
    worst = std::max(worst, std::fabs(mulaw_expand_value(z, cfg) - z));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(MuLaw, VerbatimModeMissesBoundaryPoles) {
  // (1+mu) denominator: +1 maps to mu/(1+mu), not 1.
  EXPECT_NEAR(mulaw_expand_value(1.0, {8.0, MuLawMode::paper_verbatim}), 8.0 / 9.0, 1e-15);
}

TEST(MuLaw, Errors) {
  EXPECT_THROW(mulaw_expand_value(0.5, {0.0, MuLawMode::standard}), Error);
  EXPECT_THROW(mulaw_expand_value(0.5, {-1.0, MuLawMode::standard}), Error);
  try {
    mulaw_expand(build_linear_centroids(2), {0.0, MuLawMode::standard});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidMu);
  }
}

// -- snapping ---------------------------------------------------------------------

TEST(Snap, HandValues) {
  const auto s = snap_to_int8_grid(make_z({-1.0, 0.333, 0.5, 1.0}));
  EXPECT_EQ(s.codes, (std::vector<std::int8_t>{-128, 43, 64, 127}));
  EXPECT_EQ(s.snapped.values, (std::vector<double>{-1.0, 0.3359375, 0.5, 0.9921875}));
}

TEST(Snap, KeepsDuplicates) {
  const auto s = build_centroids(8, {255.0, MuLawMode::standard});
  ASSERT_EQ(s.codes.size(), 256u);
  const std::set<int> unique(s.codes.begin(), s.codes.end());
  EXPECT_LT(unique.size(), 256u);
  EXPECT_TRUE(std::is_sorted(s.snapped.values.begin(), s.snapped.values.end()));
}

TEST(Snap, NearestGridPoint) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(-1, 0.99);
    const auto s = snap_to_int8_grid(make_z({z}));
    EXPECT_LE(std::fabs(s.snapped.values[0] - z), 0.5 / 128 + 1e-15);
  }
}

// -- annealing --------------------------------------------------------------------

TEST(Anneal, Ramp) {
  const AnnealSchedule s{10, 400, 0, 100};
  EXPECT_EQ(anneal_alpha(s, 0), 10.0);
  EXPECT_EQ(anneal_alpha(s, 50), 205.0);
  EXPECT_EQ(anneal_alpha(s, 100), 400.0);
  EXPECT_EQ(anneal_alpha(s, -5), 10.0);
  EXPECT_EQ(anneal_alpha(s, 1000), 400.0);
}

TEST(Anneal, DegenerateSchedule) {
  try {
    anneal_alpha(AnnealSchedule{10, 400, 5, 5}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSchedule);
  }
}

// -- soft assignment ------------------------------------------------------------------

TEST(SoftAssign, HandValues) {
  const std::vector<double> w0{0.0};
  auto a = soft_assign(w0, make_z({-1, 1}), 50);
  EXPECT_NEAR(a.at(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(a.at(0, 1), 0.5, 1e-15);

  const std::vector<double> w{0.4};
  a = soft_assign(w, make_z({0, 1}), 10);
  const double closed = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(a.at(0, 0), closed, 1e-12);
  EXPECT_NEAR(a.at(0, 0), 0.88080, 5e-6);
  EXPECT_NEAR(a.at(0, 1), 0.11920, 5e-6);

  a = soft_assign(w, make_z({0, 1}), 1e4);
  EXPECT_NEAR(a.at(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(a.at(0, 1), 0.0, 1e-12);
}

TEST(SoftAssign, RowStochasticAndMatchesReference) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 1 + static_cast<int>(rng.below(8));
    const auto z = build_centroids(b, {8.0, MuLawMode::standard}).snapped;
    const double alpha = std::exp(rng.uniform(0.0, std::log(1e4)));
    const auto w = test::uniform_vector(rng, 40);
    const auto a = soft_assign(w, z, alpha);
    for (std::size_t i = 0; i < w.size(); ++i) {
      double sum = 0;
      for (double p : a.row(i)) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        sum += p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      if (alpha < 200) {
        const auto ref = ref_softmax_row(w[i], z.values, alpha);
        for (std::size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(a.at(i, j), ref[j], 1e-12);
      }
    }
  }
}

TEST(SoftAssign, ExtremeAlphaStaysFinite) {
  const std::vector<double> w{0.3, -0.7};
  const auto a = soft_assign(w, build_linear_centroids(3), 1e9);
  for (double p : a.probs) EXPECT_TRUE(std::isfinite(p));
}

TEST(SoftAssign, Errors) {
  const std::vector<double> empty;
  const std::vector<double> w{0.1};
  EXPECT_THROW(soft_assign(empty, build_linear_centroids(2), 10), Error);
  EXPECT_THROW(soft_assign(w, CentroidVector{}, 10), Error);
  try {
    soft_assign(w, build_linear_centroids(2), 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidAlpha);
  }
}

// -- soft quantize -----------------------------------------------------------------

TEST(SoftQuantize, HandValues) {
  const std::vector<double> w{0.4};
  EXPECT_NEAR(soft_quantize(w, make_z({0, 1}), 10)[0], 1.0 / (1.0 + std::exp(2.0)), 1e-12);
  const std::vector<double> zero{0.0};
  for (double alpha : {1.0, 10.0, 400.0, 1e5}) {
    EXPECT_NEAR(soft_quantize(zero, build_linear_centroids(4), alpha)[0], 0.0, 1e-15);
  }
}

TEST(SoftQuantize, RangeAndMonotone) {
  Rng rng(8);
  const auto z = build_centroids(5, {8.0, MuLawMode::standard}).snapped;
  for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
    auto w = test::uniform_vector(rng, 1000, -1.3, 1.3);
    std::sort(w.begin(), w.end());
    const auto q = soft_quantize(w, z, alpha);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_GE(q[i], z.values.front());
      EXPECT_LE(q[i], z.values.back());
      if (i > 0) EXPECT_GE(q[i], q[i - 1] - 1e-12);
    }
  }
}

TEST(SoftQuantize, HardLimit) {
  Rng rng(9);
  const auto z = build_linear_centroids(4);
  const auto w = test::uniform_vector(rng, 500);
  const auto soft = soft_quantize(w, z, 1e4);
  const auto hard = hard_quantize(w, z);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::size_t k = ref_nearest(w[i], z.values);
    std::vector<double> d;
    for (double c : z.values) d.push_back(std::fabs(w[i] - c));
    std::sort(d.begin(), d.end());
    if (1e4 * (d[1] - d[0]) > 40) EXPECT_NEAR(soft[i], z.values[k], 1e-10);
    EXPECT_EQ(hard.indices[i], k);
  }
}

TEST(SoftQuantize, Jacobian) {
  const auto z = make_z({0, 1});
  const double h = 1e-6;
  auto f = [&](double w) {
    const std::vector<double> v{w};
    return soft_quantize(v, z, 10)[0];
  };
  const double fd = (f(0.4 + h) - f(0.4 - h)) / (2 * h);
  EXPECT_NEAR(soft_quantize_jacobian(0.4, z, 10), fd, 1e-5 * std::fabs(fd));
  EXPECT_NEAR(soft_quantize_jacobian(0.4, z, 500), 0.0, 1e-30);
  EXPECT_GT(std::fabs(soft_quantize_jacobian(0.1, make_z({-1, 1}), 50)), 0.0);
}

TEST(SoftQuantize, JacobianRandomPoints) {
  Rng rng(10);
  const auto z = build_centroids(3, {8.0, MuLawMode::standard}).snapped;
  for (int i = 0; i < 100; ++i) {
    const double alpha = rng.uniform(1.0, 30.0);
    const double w = rng.uniform(-1.2, 1.2);
    const double fd = oracle::central_difference(w, z.values, alpha);
    const double an = soft_quantize_jacobian(w, z, alpha);
    EXPECT_LE(std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-6}), 1e-5)
        << "w=" << w << " alpha=" << alpha;
  }
}

TEST(SoftQuantize, JacobianAtCentroidThrows) {
  try {
    soft_quantize_jacobian(1.0, make_z({-1, 1}), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonDifferentiablePoint);
  }
}

// -- hard quantize --------------------------------------------------------------------

TEST(HardQuantize, HandValues) {
  std::vector<double> w{0.3};
  auto h = hard_quantize(w, make_z({0, 0.25, 0.5}));
  EXPECT_EQ(h.values[0], 0.25);
  EXPECT_EQ(h.indices[0], 1u);
  w = {0.125};
  h = hard_quantize(w, make_z({0, 0.25}));
  EXPECT_EQ(h.values[0], 0.0);
  EXPECT_EQ(h.indices[0], 0u);
}

TEST(HardQuantize, IdempotentAndMembership) {
  Rng rng(12);
  const auto z = build_centroids(5, {8.0, MuLawMode::standard}).snapped;
  const auto w = test::uniform_vector(rng, 2000, -1.5, 1.5);
  const auto once = hard_quantize(w, z);
  const auto twice = hard_quantize(once.values, z);
  EXPECT_EQ(once.values, twice.values);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(once.values[i], z.values[once.indices[i]]);
  }
}

TEST(HardQuantize, ArgmaxOfSoftRows) {
  Rng rng(13);
  const auto z = build_linear_centroids(3);
  const auto w = test::uniform_vector(rng, 300);
  const auto a = soft_assign(w, z, 1e4);
  const auto h = hard_quantize(w, z);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto row = a.row(i);
    const auto arg = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    EXPECT_EQ(h.indices[i], arg);
  }
}

// -- fit_mu -------------------------------------------------------------------------

TEST(FitMu, LaplacianPrefersLargerMuThanUniform) {
  Rng rng(14);
  std::vector<double> lap(2000), uni(2000);
  for (auto& x : lap) x = rng.laplace(0.05);
  for (auto& x : uni) x = rng.uniform(-1, 1);
  EXPECT_GT(fit_mu(lap, 4, 400), fit_mu(uni, 4, 400));
}

TEST(FitMu, RecoversMuOfItsOwnCentroids) {
  // Unsnapped expanded centroids keep max|w| = 1, so normalization is a no-op.
  const MuSearchConfig search;
  const double cell = (std::log(search.mu_max) - std::log(search.mu_min)) / (search.grid_points - 1);
  for (int b : {3, 4, 5, 6}) {
    const auto z = mulaw_expand(build_linear_centroids(b), {8.0, MuLawMode::standard}).values;
    const double mu = fit_mu(z, b, 1e5, search);
    EXPECT_LE(std::fabs(std::log(mu) - std::log(8.0)), cell) << "b=" << b << " mu=" << mu;
  }
}

TEST(FitMu, ObjectiveMatchesOracle) {
  Rng rng(21);
  const auto w = test::uniform_vector(rng, 200);
  for (double mu : {0.2, 1.0, 8.0, 100.0}) {
    oracle::MuGrid ref(w, 4, 30);
    EXPECT_NEAR(mu_objective(w, 4, 30, mu, MuLawMode::standard), ref(mu), 1e-9) << mu;
  }
}

TEST(FitMu, PieceSweepMatchesExhaustiveGrid) {
  Rng rng(22);
  const MuSearchConfig search;
  for (int trial = 0; trial < 12; ++trial) {
    const int bits = 2 + trial % 4;
    const double alpha = trial % 2 ? 400.0 : 30.0;
    std::vector<double> w(256);
    for (auto& x : w) x = trial % 3 == 0 ? rng.uniform(-1, 1) : rng.laplace(0.1);
    oracle::MuGrid ref(w, bits, alpha);
    const double best = ref.exhaustive_min(search.mu_min, search.mu_max, 10000);
    EXPECT_LE(ref(fit_mu(w, bits, alpha, search)), best + 1e-6) << trial;
  }
}

TEST(FitMu, PieceSweepNeverWorseThanGoldenSection) {
  Rng rng(23);
  MuSearchConfig golden;
  golden.method = MuSearchMethod::golden_section;
  for (int trial = 0; trial < 8; ++trial) {
    const int bits = 3 + trial % 4;
    const double alpha = trial % 2 ? 400.0 : 40.0;
    std::vector<double> w(300);
    for (auto& x : w) x = rng.laplace(0.05);
    oracle::MuGrid ref(w, bits, alpha);
    EXPECT_LE(ref(fit_mu(w, bits, alpha)), ref(fit_mu(w, bits, alpha, golden)) + 1e-12) << trial;
  }
}

TEST(FitMu, VerbatimModeSweep) {
  Rng rng(24);
  std::vector<double> w(400);
  for (auto& x : w) x = rng.laplace(0.1);
  MuSearchConfig search;
  search.mode = MuLawMode::paper_verbatim;
  const double mu = fit_mu(w, 4, 100, search);
  double best = 1e300;
  for (int i = 0; i < 4000; ++i) {
    const double u = std::log(search.mu_min) +
                     (std::log(search.mu_max) - std::log(search.mu_min)) * i / 3999.0;
    best = std::min(best, mu_objective(w, 4, 100, std::exp(u), search.mode));
  }
  EXPECT_LE(mu_objective(w, 4, 100, mu, search.mode), best + 1e-9);
}

TEST(FitMu, IndependentOfThreadCount) {
  Rng rng(25);
  std::vector<double> w(30000);
  for (auto& x : w) x = rng.laplace(0.05);
  const int saved = kernels::max_threads();
  kernels::set_max_threads(1);
  const double serial = fit_mu(w, 6, 400);
  kernels::set_max_threads(4);
  const double parallel = fit_mu(w, 6, 400);
  kernels::set_max_threads(saved);
  EXPECT_EQ(serial, parallel);
}

TEST(FitMu, DegenerateInputs) {
  const std::vector<double> zeros(10, 0.0), same(10, 0.3);
  for (const auto* w : {&zeros, &same}) {
    try {
      fit_mu(*w, 4, 10);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateTensor);
    }
  }
}

TEST(FitMu, ResultWithinRange) {
  Rng rng(15);
  const auto w = test::uniform_vector(rng, 300);
  const MuSearchConfig search;
  const double mu = fit_mu(w, 3, 50, search);
  EXPECT_GE(mu, search.mu_min * (1 - 1e-12));
  EXPECT_LE(mu, search.mu_max * (1 + 1e-12));
}

// -- quantize_tensor ---------------------------------------------------------------

std::size_t distinct(const std::vector<float>& v) {
  return std::set<float>(v.begin(), v.end()).size();
}

TEST(QuantizeTensor, DistinctBound) {
  Rng rng(16);
  for (int b : {1, 2, 4, 5, 6, 8}) {
    const auto t = test::laplace_tensor(rng, 3000, 0.1);
    const auto q = quantize_tensor(t, b, 400, MuPolicy::refit(), true);
    EXPECT_LE(distinct(q.values), std::size_t{1} << b) << b;
    EXPECT_LE(q.codebook.effective_distinct, 1 << b);
    EXPECT_EQ(q.indices.size(), t.size());
    const auto cents = q.codebook.centroids();
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(q.values[i], cents[q.indices[i]]);
  }
}

TEST(QuantizeTensor, SoftPreservesValues) {
  Rng rng(17);
  const auto t = [&] {
    std::vector<float> v(4000);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-0.3, 0.3));
    return v;
  }();
  const auto q = quantize_tensor(t, 6, 10, MuPolicy::fixed(8), false);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ma += t[i];
    mb += q.values[i];
  }
  ma /= t.size();
  mb /= t.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sab += (t[i] - ma) * (q.values[i] - mb);
    saa += (t[i] - ma) * (t[i] - ma);
    sbb += (q.values[i] - mb) * (q.values[i] - mb);
  }
  EXPECT_GT(sab / std::sqrt(saa * sbb), 0.99);
}

TEST(QuantizeTensor, CodebookDequantization) {
  Rng rng(18);
  const auto t = test::normal_tensor(rng, 500, 0.2);
  const auto q = quantize_tensor(t, 5, 400, MuPolicy::fixed(8), true);
  float max_abs = 0;
  for (float v : t) max_abs = std::max(max_abs, std::fabs(v));
  EXPECT_EQ(q.codebook.scale, max_abs);
  EXPECT_EQ(q.codebook.mu, 8.0);
  for (std::size_t j = 0; j < q.codebook.size(); ++j) {
    EXPECT_EQ(q.codebook.centroid(j),
              static_cast<float>(double(q.codebook.scale) * q.codebook.grid_codes[j] / 128.0));
  }
}

TEST(QuantizeTensor, ZeroTensorUnchanged) {
  const std::vector<float> t(32, 0.0f);
  for (bool hard : {false, true}) {
    const auto q = quantize_tensor(t, 4, 100, MuPolicy::refit(), hard);
    EXPECT_EQ(q.values, t);
    EXPECT_EQ(q.codebook.scale, 0.0f);
  }
}

TEST(QuantizeTensor, RejectsNonFinite) {
  for (float bad : {std::nanf(""), INFINITY}) {
    const std::vector<float> t{0.1f, bad};
    try {
      quantize_tensor(t, 4, 100, MuPolicy::fixed(8), true);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidTensor);
    }
  }
  const std::vector<float> empty;
  EXPECT_THROW(quantize_tensor(empty, 4, 100, MuPolicy::fixed(8), true), Error);
}

TEST(QuantizeTensor, OneBitTwoValues) {
  Rng rng(19);
  const auto t = test::normal_tensor(rng, 1000, 1.0);
  EXPECT_LE(distinct(quantize_tensor(t, 1, 400, MuPolicy::refit(), true).values), 2u);
}

TEST(QuantizeTensor, HardProjectionIsIdempotent) {
  Rng rng(20);
  const auto t = test::laplace_tensor(rng, 800, 0.05);
  const auto q = quantize_tensor(t, 5, 400, MuPolicy::fixed(8), true);
  const auto again = project_onto_codebook(q.values, q.codebook);
  EXPECT_EQ(again.values, q.values);
  EXPECT_EQ(indices_for_values(q.values, q.codebook), q.indices);
}

}  // namespace
}  // namespace gq
