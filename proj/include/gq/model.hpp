#pragma once

// Small dense and recurrent networks with hand-written backprop.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gq/tasks.hpp"
#include "gq/tensor_store.hpp"

namespace gq {

enum class Activation { tanh, relu, identity, softmax };
enum class Architecture { mlp, elman_rnn };

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;
  /// Kernels are quantization candidates; biases are not.
  bool is_kernel = false;

  bool operator==(const Parameter&) const = default;
};

/// For an MLP, layer l owns params[2l] (in x out kernel) and params[2l+1]
/// (bias). For an Elman RNN the params are input kernel, recurrent kernel,
/// hidden bias, output kernel, output bias, and activations hold the hidden
/// and output nonlinearities.
struct ToyModel {
  Architecture architecture = Architecture::mlp;
  std::vector<Parameter> params;
  std::vector<Activation> activations;

  Parameter& param(std::string_view name);
  const Parameter& param(std::string_view name) const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool operator==(const ToyModel&) const = default;
};

ToyModel make_mlp(const std::vector<std::size_t>& widths,
                  const std::vector<Activation>& activations, std::uint64_t seed);
ToyModel make_elman_rnn(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                        Activation output, std::uint64_t seed);
/// The model each task trains: MLP 2-16-16-2 / 1-32-32-1, Elman RNN 1-16-2.
ToyModel make_task_model(TaskKind kind, std::uint64_t seed);

using Gradients = std::vector<std::vector<double>>;

/// Mean loss over `batch`: cross-entropy for softmax outputs, 0.5 * squared
/// error otherwise.
double loss(const ToyModel& model, const Dataset& data, std::span<const std::size_t> batch);
/// Loss and its gradient by backpropagation (through time for the RNN).
double backprop(const ToyModel& model, const Dataset& data,
                std::span<const std::size_t> batch, Gradients& grads);
/// Central differences of `loss` with step h.
Gradients finite_difference_grads(const ToyModel& model, const Dataset& data,
                                  std::span<const std::size_t> batch, double h = 1e-4);

/// Output vector for one sample.
std::vector<double> predict(const ToyModel& model, const Dataset& data, std::size_t sample);

struct EvalResult {
  double loss = 0.0;
  /// Accuracy for classification, MSE for regression.
  double metric = 0.0;
};
EvalResult evaluate(const ToyModel& model, const Dataset& data);

Checkpoint to_checkpoint(const ToyModel& model);
/// Overwrites parameter values from a checkpoint with matching names/shapes.
void load_parameters(ToyModel& model, const Checkpoint& ckpt);

}  // namespace gq
