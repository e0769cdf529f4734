#include "gq/tasks.hpp"

#include <cmath>
#include <numbers>

#include "gq/error.hpp"
#include "gq/random.hpp"

namespace gq {

namespace {

constexpr std::size_t kGaussianTrain = 2000;
constexpr std::size_t kGaussianEval = 2000;
constexpr std::size_t kSineTrain = 1000;
constexpr std::size_t kSineEval = 500;
// Class means are +-kMean, shared isotropic spread.
constexpr double kMean[2] = {1.0, 0.4};
constexpr double kSpread = 0.8;

Dataset empty_like(std::size_t input_dim, std::size_t seq_len, std::size_t output_dim,
                   bool classification) {
  Dataset d;
  d.input_dim = input_dim;
  d.seq_len = seq_len;
  d.output_dim = output_dim;
  d.classification = classification;
  return d;
}

void push_label(Dataset& d, int label) {
  d.labels.push_back(label);
  for (std::size_t c = 0; c < d.output_dim; ++c) {
    d.targets.push_back(static_cast<int>(c) == label ? 1.0 : 0.0);
  }
  ++d.samples;
}

Dataset gaussians(Rng& rng, std::size_t n) {
  Dataset d = empty_like(2, 1, 2, true);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const double sign = label == 0 ? -1.0 : 1.0;
    d.inputs.push_back(rng.normal(sign * kMean[0], kSpread));
    d.inputs.push_back(rng.normal(sign * kMean[1], kSpread));
    push_label(d, label);
  }
  return d;
}

Dataset sine(Rng& rng, std::size_t n) {
  Dataset d = empty_like(1, 1, 1, false);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-std::numbers::pi, std::numbers::pi);
    d.inputs.push_back(x);
    d.targets.push_back(std::sin(x));
    ++d.samples;
  }
  return d;
}

Dataset parity(const std::vector<std::uint32_t>& codes) {
  Dataset d = empty_like(1, kParityLength, 2, true);
  for (auto code : codes) {
    int label = 0;
    for (std::size_t b = 0; b < kParityLength; ++b) {
      const int bit = static_cast<int>((code >> b) & 1u);
      d.inputs.push_back(bit);
      label ^= bit;
    }
    push_label(d, label);
  }
  return d;
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::two_gaussians: return "two-gaussians";
    case TaskKind::sine_regression: return "sine-regression";
    case TaskKind::parity_sequence: return "parity-sequence";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "two-gaussians" || s == "two-gaussians-classification") return TaskKind::two_gaussians;
  if (s == "sine-regression") return TaskKind::sine_regression;
  if (s == "parity-sequence") return TaskKind::parity_sequence;
  throw Error(ErrorCode::InvalidTask, "unknown task '" + s + "'");
}

TaskData make_task(TaskKind kind, std::uint64_t seed) {
  Rng train_rng(seed * 2 + 1);
  Rng eval_rng(seed * 2 + 2);
  switch (kind) {
    case TaskKind::two_gaussians:
      return {gaussians(train_rng, kGaussianTrain), gaussians(eval_rng, kGaussianEval)};
    case TaskKind::sine_regression:
      return {sine(train_rng, kSineTrain), sine(eval_rng, kSineEval)};
    case TaskKind::parity_sequence: {
      // All 2^L sequences, split 3:1 so eval sequences never appear in train.
      std::vector<std::uint32_t> codes(std::size_t{1} << kParityLength);
      for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<std::uint32_t>(i);
      train_rng.shuffle(codes);
      const auto split = codes.size() * 3 / 4;
      return {parity({codes.begin(), codes.begin() + static_cast<std::ptrdiff_t>(split)}),
              parity({codes.begin() + static_cast<std::ptrdiff_t>(split), codes.end()})};
    }
  }
  throw Error(ErrorCode::InvalidTask, "unknown task");
}

}  // namespace gq
