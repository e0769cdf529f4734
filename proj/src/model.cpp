#include "gq/model.hpp"

#include <algorithm>
#include <cmath>

#include "gq/error.hpp"
#include "gq/random.hpp"

namespace gq {

namespace {

Parameter make_kernel(std::string name, std::size_t in, std::size_t out, double gain, Rng& rng) {
  Parameter p{std::move(name), {in, out}, std::vector<double>(in * out), true};
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& v : p.data) v = rng.uniform(-limit, limit);
  return p;
}

Parameter make_bias(std::string name, std::size_t n) {
  return Parameter{std::move(name), {n}, std::vector<double>(n, 0.0), false};
}

double activate(Activation act, double a) {
  switch (act) {
    case Activation::tanh: return std::tanh(a);
    case Activation::relu: return a > 0.0 ? a : 0.0;
    default: return a;
  }
}

/// d act / d a expressed through the pre-activation a and output h.
double activate_grad(Activation act, double a, double h) {
  switch (act) {
    case Activation::tanh: return 1.0 - h * h;
    case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

// out[j] = bias[j] + sum_i in[i] * W[i, j]
void affine(const double* in, const Parameter& w, const Parameter* b, double* out,
            bool accumulate = false) {
  const std::size_t rows = w.shape[0];
  const std::size_t cols = w.shape[1];
  for (std::size_t j = 0; j < cols; ++j) {
    if (!accumulate) out[j] = b ? b->data[j] : 0.0;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = in[i];
    const double* row = w.data.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += x * row[j];
  }
}

// out[i] = sum_j delta[j] * W[i, j]
void affine_transpose(const double* delta, const Parameter& w, double* out) {
  const std::size_t rows = w.shape[0];
  const std::size_t cols = w.shape[1];
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w.data.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += delta[j] * row[j];
    out[i] = acc;
  }
}

void outer_accumulate(const double* in, const double* delta, std::size_t rows,
                      std::size_t cols, std::vector<double>& g) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = g.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += in[i] * delta[j];
  }
}

/// Loss of one output vector and its gradient w.r.t. the pre-activation.
double output_loss(Activation act, const std::vector<double>& logits, const double* target,
                   std::vector<double>* grad) {
  const std::size_t n = logits.size();
  if (act == Activation::softmax) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    const double log_denom = std::log(denom) + mx;
    double l = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double logp = logits[j] - log_denom;
      l -= target[j] * logp;
      if (grad) (*grad)[j] = std::exp(logp) - target[j];
    }
    return l;
  }
  double l = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double h = activate(act, logits[j]);
    const double r = h - target[j];
    l += 0.5 * r * r;
    if (grad) (*grad)[j] = r * activate_grad(act, logits[j], h);
  }
  return l;
}

std::vector<double> softmax(std::vector<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double denom = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    denom += x;
  }
  for (auto& x : v) x /= denom;
  return v;
}

// -- MLP ---------------------------------------------------------------------

struct MlpTrace {
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // post[0] = input
};

MlpTrace mlp_forward(const ToyModel& m, const double* x, std::size_t input_dim) {
  const std::size_t layers = m.activations.size();
  MlpTrace tr;
  tr.post.emplace_back(x, x + input_dim);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = m.params[2 * l];
    const auto& b = m.params[2 * l + 1];
    std::vector<double> a(w.shape[1]);
    affine(tr.post.back().data(), w, &b, a.data());
    std::vector<double> h(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) h[j] = activate(m.activations[l], a[j]);
    tr.pre.push_back(std::move(a));
    tr.post.push_back(std::move(h));
  }
  return tr;
}

double mlp_sample(const ToyModel& m, const Dataset& d, std::size_t i, Gradients* g) {
  const auto tr = mlp_forward(m, d.input(i), d.input_dim);
  const std::size_t layers = m.activations.size();
  std::vector<double> delta(tr.pre.back().size());
  const double l = output_loss(m.activations.back(), tr.pre.back(), d.target(i),
                               g ? &delta : nullptr);
  if (!g) return l;
  for (std::size_t li = layers; li-- > 0;) {
    const auto& w = m.params[2 * li];
    outer_accumulate(tr.post[li].data(), delta.data(), w.shape[0], w.shape[1], (*g)[2 * li]);
    for (std::size_t j = 0; j < delta.size(); ++j) (*g)[2 * li + 1][j] += delta[j];
    if (li == 0) break;
    std::vector<double> dh(w.shape[0]);
    affine_transpose(delta.data(), w, dh.data());
    for (std::size_t j = 0; j < dh.size(); ++j) {
      dh[j] *= activate_grad(m.activations[li - 1], tr.pre[li - 1][j], tr.post[li][j]);
    }
    delta = std::move(dh);
  }
  return l;
}

// -- Elman RNN -----------------------------------------------------------------

enum RnnParam { kInput = 0, kRecurrent, kHiddenBias, kOutput, kOutputBias };

struct RnnTrace {
  std::vector<std::vector<double>> hidden;  // hidden[0] = zeros
  std::vector<double> logits;
};

RnnTrace rnn_forward(const ToyModel& m, const Dataset& d, std::size_t i) {
  const auto& wx = m.params[kInput];
  const auto& wh = m.params[kRecurrent];
  const auto& bh = m.params[kHiddenBias];
  const std::size_t hsize = wh.shape[0];
  RnnTrace tr;
  tr.hidden.emplace_back(hsize, 0.0);
  const double* x = d.input(i);
  for (std::size_t t = 0; t < d.seq_len; ++t) {
    std::vector<double> a(hsize);
    affine(x + t * d.input_dim, wx, &bh, a.data());
    affine(tr.hidden.back().data(), wh, nullptr, a.data(), true);
    for (auto& v : a) v = activate(m.activations[0], v);
    tr.hidden.push_back(std::move(a));
  }
  tr.logits.resize(m.params[kOutput].shape[1]);
  affine(tr.hidden.back().data(), m.params[kOutput], &m.params[kOutputBias], tr.logits.data());
  return tr;
}

double rnn_sample(const ToyModel& m, const Dataset& d, std::size_t i, Gradients* g) {
  const auto tr = rnn_forward(m, d, i);
  std::vector<double> dout(tr.logits.size());
  const double l = output_loss(m.activations[1], tr.logits, d.target(i), g ? &dout : nullptr);
  if (!g) return l;
  const auto& wo = m.params[kOutput];
  const auto& wh = m.params[kRecurrent];
  const std::size_t hsize = wh.shape[0];
  outer_accumulate(tr.hidden.back().data(), dout.data(), wo.shape[0], wo.shape[1], (*g)[kOutput]);
  for (std::size_t j = 0; j < dout.size(); ++j) (*g)[kOutputBias][j] += dout[j];
  std::vector<double> dh(hsize);
  affine_transpose(dout.data(), wo, dh.data());
  const double* x = d.input(i);
  for (std::size_t t = d.seq_len; t >= 1; --t) {
    const auto& h = tr.hidden[t];
    std::vector<double> da(hsize);
    for (std::size_t j = 0; j < hsize; ++j) {
      da[j] = dh[j] * activate_grad(m.activations[0], 0.0, h[j]);
    }
    outer_accumulate(x + (t - 1) * d.input_dim, da.data(), d.input_dim, hsize, (*g)[kInput]);
    outer_accumulate(tr.hidden[t - 1].data(), da.data(), hsize, hsize, (*g)[kRecurrent]);
    for (std::size_t j = 0; j < hsize; ++j) (*g)[kHiddenBias][j] += da[j];
    affine_transpose(da.data(), wh, dh.data());
  }
  return l;
}

double sample_loss(const ToyModel& m, const Dataset& d, std::size_t i, Gradients* g) {
  return m.architecture == Architecture::mlp ? mlp_sample(m, d, i, g) : rnn_sample(m, d, i, g);
}

}  // namespace

Parameter& ToyModel::param(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).param(name));
}

const Parameter& ToyModel::param(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::InvalidConfig, "model has no parameter '" + std::string(name) + "'");
}

std::size_t ToyModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.data.size();
  return n;
}

bool ToyModel::all_finite() const {
  for (const auto& p : params) {
    for (double v : p.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ToyModel make_mlp(const std::vector<std::size_t>& widths,
                  const std::vector<Activation>& activations, std::uint64_t seed) {
  if (widths.size() < 2 || activations.size() != widths.size() - 1) {
    throw Error(ErrorCode::InvalidConfig, "MLP needs one activation per layer");
  }
  Rng rng(seed);
  ToyModel m;
  m.architecture = Architecture::mlp;
  m.activations = activations;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto prefix = "dense_" + std::to_string(l);
    m.params.push_back(make_kernel(prefix + "/kernel", widths[l], widths[l + 1], 1.0, rng));
    m.params.push_back(make_bias(prefix + "/bias", widths[l + 1]));
  }
  return m;
}

ToyModel make_elman_rnn(std::size_t input_dim, std::size_t hidden, std::size_t output_dim,
                        Activation output, std::uint64_t seed) {
  Rng rng(seed);
  ToyModel m;
  m.architecture = Architecture::elman_rnn;
  m.activations = {Activation::tanh, output};
  m.params.push_back(make_kernel("rnn/input_kernel", input_dim, hidden, 1.0, rng));
  m.params.push_back(make_kernel("rnn/recurrent_kernel", hidden, hidden, 0.5, rng));
  m.params.push_back(make_bias("rnn/bias", hidden));
  m.params.push_back(make_kernel("output/kernel", hidden, output_dim, 1.0, rng));
  m.params.push_back(make_bias("output/bias", output_dim));
  return m;
}

ToyModel make_task_model(TaskKind kind, std::uint64_t seed) {
  const std::uint64_t init_seed = seed ^ 0x9E3779B97F4A7C15ULL;
  switch (kind) {
    case TaskKind::two_gaussians:
      return make_mlp({2, 16, 16, 2},
                      {Activation::tanh, Activation::tanh, Activation::softmax}, init_seed);
    case TaskKind::sine_regression:
      return make_mlp({1, 32, 32, 1},
                      {Activation::tanh, Activation::tanh, Activation::identity}, init_seed);
    case TaskKind::parity_sequence:
      return make_elman_rnn(1, 16, 2, Activation::softmax, init_seed);
  }
  throw Error(ErrorCode::InvalidTask, "unknown task");
}

double loss(const ToyModel& model, const Dataset& data, std::span<const std::size_t> batch) {
  double total = 0.0;
  for (auto i : batch) total += sample_loss(model, data, i, nullptr);
  return total / static_cast<double>(batch.size());
}

double backprop(const ToyModel& model, const Dataset& data,
                std::span<const std::size_t> batch, Gradients& grads) {
  grads.resize(model.params.size());
  for (std::size_t p = 0; p < model.params.size(); ++p) {
    grads[p].assign(model.params[p].data.size(), 0.0);
  }
  double total = 0.0;
  for (auto i : batch) total += sample_loss(model, data, i, &grads);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grads) {
    for (auto& v : g) v *= inv;
  }
  return total * inv;
}

Gradients finite_difference_grads(const ToyModel& model, const Dataset& data,
                                  std::span<const std::size_t> batch, double h) {
  ToyModel probe = model;
  Gradients grads(model.params.size());
  for (std::size_t p = 0; p < probe.params.size(); ++p) {
    grads[p].resize(probe.params[p].data.size());
    for (std::size_t k = 0; k < probe.params[p].data.size(); ++k) {
      double& v = probe.params[p].data[k];
      const double saved = v;
      v = saved + h;
      const double up = loss(probe, data, batch);
      v = saved - h;
      const double down = loss(probe, data, batch);
      v = saved;
      grads[p][k] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

std::vector<double> predict(const ToyModel& model, const Dataset& data, std::size_t sample) {
  std::vector<double> logits;
  if (model.architecture == Architecture::mlp) {
    logits = mlp_forward(model, data.input(sample), data.input_dim).pre.back();
  } else {
    logits = rnn_forward(model, data, sample).logits;
  }
  const Activation out = model.activations.back();
  if (out == Activation::softmax) return softmax(std::move(logits));
  for (auto& v : logits) v = activate(out, v);
  return logits;
}

EvalResult evaluate(const ToyModel& model, const Dataset& data) {
  EvalResult r;
  std::size_t correct = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < data.samples; ++i) {
    r.loss += sample_loss(model, data, i, nullptr);
    const auto out = predict(model, data, i);
    if (data.classification) {
      const auto best = std::max_element(out.begin(), out.end()) - out.begin();
      if (best == data.labels[i]) ++correct;
    } else {
      for (std::size_t j = 0; j < out.size(); ++j) {
        const double d = out[j] - data.target(i)[j];
        sq += d * d;
      }
    }
  }
  const double n = static_cast<double>(data.samples);
  r.loss /= n;
  r.metric = data.classification ? static_cast<double>(correct) / n
                                 : sq / (n * static_cast<double>(data.output_dim));
  return r;
}

Checkpoint to_checkpoint(const ToyModel& model) {
  Checkpoint ckpt;
  for (const auto& p : model.params) {
    Tensor t;
    t.shape.assign(p.shape.begin(), p.shape.end());
    t.data.assign(p.data.begin(), p.data.end());
    ckpt.add(p.name, std::move(t));
  }
  return ckpt;
}

void load_parameters(ToyModel& model, const Checkpoint& ckpt) {
  for (auto& p : model.params) {
    const Tensor& t = ckpt.at(p.name);
    if (t.data.size() != p.data.size()) {
      throw Error(ErrorCode::ShapeError, "checkpoint shape mismatch for '" + p.name + "'");
    }
    p.data.assign(t.data.begin(), t.data.end());
  }
}

}  // namespace gq
