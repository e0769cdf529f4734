#include "gq/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "format.hpp"
#include "gq/error.hpp"
#include "gq/random.hpp"

namespace gq {

namespace {

constexpr std::uint64_t kBatchStream = 0xB5AD4ECEDA1CE2A9ULL;

class BatchSampler {
 public:
  BatchSampler(std::size_t samples, std::size_t batch, std::uint64_t seed)
      : order_(samples), batch_(std::min(batch, samples)), rng_(seed ^ kBatchStream) {
    for (std::size_t i = 0; i < samples; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }

  std::span<const std::size_t> next() {
    if (pos_ + batch_ > order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    const auto out = std::span<const std::size_t>(order_).subspan(pos_, batch_);
    pos_ += batch_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const ToyModel& model) : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::adam) {
      for (const auto& p : model.params) {
        m_.emplace_back(p.data.size(), 0.0);
        v_.emplace_back(p.data.size(), 0.0);
      }
    }
  }

  void step(ToyModel& model, const Gradients& grads,
            const std::map<std::string, CentroidCodebook>& frozen) {
    ++t_;
    const double lr = cfg_.learning_rate;
    const auto& a = cfg_.adam;
    const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < model.params.size(); ++p) {
      auto& param = model.params[p];
      if (frozen.count(param.name)) continue;
      for (std::size_t k = 0; k < param.data.size(); ++k) {
        const double g = grads[p][k];
        if (cfg_.optimizer == OptimizerKind::sgd) {
          param.data[k] -= lr * g;
        } else {
          m_[p][k] = a.beta1 * m_[p][k] + (1.0 - a.beta1) * g;
          v_[p][k] = a.beta2 * v_[p][k] + (1.0 - a.beta2) * g * g;
          param.data[k] -= lr * (m_[p][k] / c1) / (std::sqrt(v_[p][k] / c2) + a.epsilon);
        }
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

int distinct_count(const std::vector<double>& values) {
  std::unordered_set<double> s;
  for (double v : values) s.insert(v == 0.0 ? 0.0 : v);
  return static_cast<int>(s.size());
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? detail::fmt_double(*v) : std::string();
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (steps < 1) fail("steps must be >= 1");
  if (quant_every < 1) fail("quant_every must be >= 1");
  if (hard_at < 0 || hard_at > steps) fail("hard_at must lie in [0, steps]");
  if (!(learning_rate > 0.0)) fail("learning rate must be positive");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (log_every < 1) fail("log_every must be >= 1");
  for (const auto& [name, bits] : bit_map) {
    if (bits < kMinBitDepth || bits > kMaxBitDepth) {
      throw Error(ErrorCode::InvalidBitDepth, "bit depth for '" + name + "' must be in [1, 8]");
    }
  }
  anneal_alpha(schedule, schedule.s_start);
}

TrainConfig default_train_config(TaskKind task, std::uint64_t seed, std::int64_t steps,
                                 int bits) {
  TrainConfig cfg;
  cfg.task = task;
  cfg.seed = seed;
  cfg.steps = steps;
  cfg.hard_at = std::max<std::int64_t>(1, steps * 9 / 10);
  cfg.schedule = AnnealSchedule{10.0, 400.0, 0, cfg.hard_at};
  cfg.quant_every = 1000;
  cfg.learning_rate = task == TaskKind::parity_sequence ? 0.1 : 0.05;
  if (bits > 0) {
    for (const auto& p : make_task_model(task, seed).params) {
      if (p.is_kernel) cfg.bit_map[p.name] = bits;
    }
  }
  return cfg;
}

bool TrainReport::operator==(const TrainReport& o) const {
  return task == o.task && seed == o.seed && quant_every == o.quant_every &&
         loss_curve == o.loss_curve && eval_curve == o.eval_curve &&
         callbacks == o.callbacks && distinct_values == o.distinct_values &&
         metric_before_hard == o.metric_before_hard &&
         metric_after_hard == o.metric_after_hard &&
         final_eval_metric == o.final_eval_metric && final_eval_loss == o.final_eval_loss;
}

CallbackRecord gq_callback(ToyModel& model, QuantState& state, const TrainConfig& cfg,
                           std::int64_t step) {
  CallbackRecord rec;
  rec.step = step;
  rec.alpha = anneal_alpha(cfg.schedule, step);
  rec.hard = step >= cfg.hard_at;
  double change = 0.0;
  for (const auto& [name, bits] : cfg.bit_map) {
    Parameter& p = model.param(name);
    const std::vector<float> current(p.data.begin(), p.data.end());
    QuantizedTensor q;
    if (auto it = state.frozen.find(name); it != state.frozen.end()) {
      q = project_onto_codebook(current, it->second);
    } else {
      q = quantize_tensor(current, bits, rec.alpha, cfg.mu_policy, rec.hard, cfg.mu_mode);
      if (rec.hard) state.frozen[name] = q.codebook;
    }
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      const double d = static_cast<double>(q.values[k]) - p.data[k];
      change += d * d;
      p.data[k] = q.values[k];
    }
    rec.mu[name] = q.codebook.mu;
  }
  rec.change_l2 = std::sqrt(change);
  return rec;
}

TrainResult train(ToyModel model, const TrainConfig& cfg) {
  cfg.validate();
  for (const auto& entry : cfg.bit_map) model.param(entry.first);
  const auto started = std::chrono::steady_clock::now();
  const TaskData data = make_task(cfg.task, cfg.seed);

  TrainResult result;
  TrainReport& report = result.report;
  report.task = to_string(cfg.task);
  report.seed = cfg.seed;
  report.quant_every = cfg.quant_every;

  BatchSampler sampler(data.train.samples, cfg.batch_size, cfg.seed);
  Optimizer opt(cfg, model);
  Gradients grads;

  auto hard_compress = [&](std::int64_t step) {
    report.metric_before_hard = evaluate(model, data.eval).metric;
    report.callbacks.push_back(gq_callback(model, result.quant, cfg, step));
    report.metric_after_hard = evaluate(model, data.eval).metric;
  };
  if (cfg.hard_at == 0 && !cfg.bit_map.empty()) hard_compress(0);

  for (std::int64_t s = 1; s <= cfg.steps; ++s) {
    const auto batch = sampler.next();
    const double batch_loss = backprop(model, data.train, batch, grads);
    if (!std::isfinite(batch_loss)) {
      throw Error(ErrorCode::TrainingDiverged, "loss became non-finite at step " + std::to_string(s));
    }
    opt.step(model, grads, result.quant.frozen);
    if (!model.all_finite()) {
      throw Error(ErrorCode::TrainingDiverged, "weights became non-finite at step " + std::to_string(s));
    }
    if (!cfg.bit_map.empty()) {
      if (s == cfg.hard_at) {
        hard_compress(s);
      } else if (s < cfg.hard_at && s % cfg.quant_every == 0) {
        report.callbacks.push_back(gq_callback(model, result.quant, cfg, s));
      }
    }
    if (s % cfg.log_every == 0 || s == cfg.steps) {
      report.loss_curve.push_back({s, batch_loss});
      report.eval_curve.push_back({s, evaluate(model, data.eval).metric});
    }
  }

  const auto final_eval = evaluate(model, data.eval);
  report.final_eval_metric = final_eval.metric;
  report.final_eval_loss = final_eval.loss;
  for (const auto& entry : cfg.bit_map) {
    report.distinct_values[entry.first] = distinct_count(model.param(entry.first).data);
  }
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.model = std::move(model);
  return result;
}

TrainResult train(const TrainConfig& cfg) {
  return train(make_task_model(cfg.task, cfg.seed), cfg);
}

std::vector<AblationRow> frequency_ablation(const TrainConfig& tmpl,
                                            const std::vector<std::int64_t>& frequencies) {
  if (frequencies.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "ablation needs at least two frequencies");
  }
  std::vector<AblationRow> rows(frequencies.size());
  std::vector<std::string> errors(frequencies.size());
  std::vector<ErrorCode> codes(frequencies.size(), ErrorCode::InvalidConfig);
  const auto n = static_cast<std::ptrdiff_t>(frequencies.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    TrainConfig cfg = tmpl;
    cfg.quant_every = frequencies[idx];
    try {
      rows[idx] = AblationRow{frequencies[idx], train(cfg).report};
    } catch (const Error& e) {
      errors[idx] = e.what();
      codes[idx] = e.code();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw Error(codes[i], errors[i]);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "quant_every,final_eval_metric,final_eval_loss,metric_before_hard,"
         "metric_after_hard,callbacks\n";
  for (const auto& r : rows) {
    out << r.quant_every << ',' << detail::fmt_double(r.report.final_eval_metric) << ','
        << detail::fmt_double(r.report.final_eval_loss) << ','
        << fmt_optional(r.report.metric_before_hard) << ','
        << fmt_optional(r.report.metric_after_hard) << ',' << r.report.callbacks.size() << '\n';
  }
  return out.str();
}

}  // namespace gq
