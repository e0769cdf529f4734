#pragma once

// Training loop with the periodic quantization callback: every
// `quant_every` steps each selected kernel is softly projected onto its
// centroids at the annealed alpha; at `hard_at` the kernels are hard
// compressed and stay frozen on their codebooks for the rest of the run.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gq/model.hpp"
#include "gq/quantizer.hpp"
#include "gq/tasks.hpp"

namespace gq {

enum class OptimizerKind { sgd, adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

struct TrainConfig {
  TaskKind task = TaskKind::two_gaussians;
  std::uint64_t seed = 0;
  std::int64_t steps = 10000;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::int64_t quant_every = 1000;
  /// Kernel name -> bit depth. Kernels not listed are never quantized.
  std::map<std::string, int> bit_map;
  AnnealSchedule schedule{10.0, 400.0, 0, 9000};
  MuPolicy mu_policy = MuPolicy::refit();
  MuLawMode mu_mode = MuLawMode::standard;
  std::int64_t hard_at = 9000;
  OptimizerKind optimizer = OptimizerKind::sgd;
  AdamConfig adam{};
  std::int64_t log_every = 100;

  void validate() const;
};

/// Defaults for a task: hard_at at 90% of steps, alpha ramp 10 -> 400 ending
/// at hard_at, every kernel of the task model at `bits` (0 = unquantized).
TrainConfig default_train_config(TaskKind task, std::uint64_t seed, std::int64_t steps,
                                 int bits);

struct CurvePoint {
  std::int64_t step = 0;
  double value = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct CallbackRecord {
  std::int64_t step = 0;
  double alpha = 0.0;
  bool hard = false;
  /// l2 norm of the change applied to all quantized kernels.
  double change_l2 = 0.0;
  std::map<std::string, double> mu;
  bool operator==(const CallbackRecord&) const = default;
};

struct TrainReport {
  std::string task;
  std::uint64_t seed = 0;
  std::int64_t quant_every = 0;
  std::vector<CurvePoint> loss_curve;
  std::vector<CurvePoint> eval_curve;
  std::vector<CallbackRecord> callbacks;
  std::map<std::string, int> distinct_values;
  std::optional<double> metric_before_hard;
  std::optional<double> metric_after_hard;
  double final_eval_metric = 0.0;
  double final_eval_loss = 0.0;
  /// Not serialized and not compared: the only nondeterministic field.
  double wall_clock_s = 0.0;

  bool operator==(const TrainReport& o) const;
};

/// Codebooks of kernels that have been hard compressed.
struct QuantState {
  std::map<std::string, CentroidCodebook> frozen;
};

CallbackRecord gq_callback(ToyModel& model, QuantState& state, const TrainConfig& cfg,
                           std::int64_t step);

struct TrainResult {
  ToyModel model;
  QuantState quant;
  TrainReport report;
};

TrainResult train(ToyModel model, const TrainConfig& cfg);
/// Builds the task model and data from cfg.task and cfg.seed.
TrainResult train(const TrainConfig& cfg);

struct AblationRow {
  std::int64_t quant_every = 0;
  TrainReport report;
};

/// One run per frequency from the same template; arms run in parallel.
std::vector<AblationRow> frequency_ablation(const TrainConfig& tmpl,
                                            const std::vector<std::int64_t>& frequencies);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace gq
