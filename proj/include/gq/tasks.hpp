#pragma once

// Synthetic desk-scale tasks.
//
//   two-gaussians  2-D points from two isotropic Gaussians, 2 classes
//   sine           x ~ U(-pi, pi), target sin(x)
//   parity         binary sequences of fixed length, label = XOR of bits

#include <cstdint>
#include <string>
#include <vector>

namespace gq {

enum class TaskKind { two_gaussians, sine_regression, parity_sequence };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

struct Dataset {
  std::size_t samples = 0;
  /// Features per time step.
  std::size_t input_dim = 0;
  /// 1 for feed-forward tasks.
  std::size_t seq_len = 1;
  std::size_t output_dim = 0;
  bool classification = false;
  /// samples x seq_len x input_dim, row-major.
  std::vector<double> inputs;
  /// samples x output_dim; one-hot for classification.
  std::vector<double> targets;
  /// Class labels; empty for regression.
  std::vector<int> labels;

  const double* input(std::size_t i) const { return inputs.data() + i * seq_len * input_dim; }
  const double* target(std::size_t i) const { return targets.data() + i * output_dim; }
  bool operator==(const Dataset&) const = default;
};

struct TaskData {
  Dataset train;
  Dataset eval;
};

inline constexpr std::size_t kParityLength = 8;

TaskData make_task(TaskKind kind, std::uint64_t seed);

}  // namespace gq
