#include "gq/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gq/analyzer.hpp"
#include "gq/error.hpp"
#include "gq/kernels.hpp"
#include "gq/packer.hpp"
#include "gq/random.hpp"
#include "gq/report_io.hpp"
#include "gq/tensor_store.hpp"
#include "gq/topology.hpp"
#include "gq/trainer.hpp"

namespace gq::cli {

namespace {

using nlohmann::json;

// Weights sampled for mu fitting in topology mode.
constexpr std::size_t kFitSampleLimit = 4096;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    auto j = json::parse(read_text(path));
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

/// Config-file value for `key` unless the flag was given on the command line.
template <typename T>
void merge(const CLI::App* app, const std::string& flag, const json& cfg,
           const std::string& key, T& var) {
  const auto* opt = app->get_option_no_throw(flag);
  if ((opt != nullptr && opt->count() > 0) || !cfg.contains(key)) return;
  try {
    var = cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "' has the wrong type");
  }
}

void check_bits(int bits, const std::string& what) {
  if (bits < kMinBitDepth || bits > kMaxBitDepth) {
    throw Error(ErrorCode::InvalidBitDepth, what + " bit depth must be in [1, 8]");
  }
}

std::map<std::string, int> parse_bit_map(const std::vector<std::string>& items) {
  std::map<std::string, int> out;
  for (const auto& item : items) {
    const auto eq = item.rfind('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::UsageError, "bit-map entries take the form name=bits: '" + item + "'");
    }
    int bits = 0;
    try {
      bits = std::stoi(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::UsageError, "bad bit depth in '" + item + "'");
    }
    check_bits(bits, item.substr(0, eq));
    out[item.substr(0, eq)] = bits;
  }
  return out;
}

/// Flag entries override config entries key by key.
std::map<std::string, int> resolve_bit_map(const std::vector<std::string>& flags,
                                           const json& cfg) {
  std::map<std::string, int> out;
  if (cfg.contains("bit_map")) {
    try {
      out = cfg.at("bit_map").get<std::map<std::string, int>>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bit_map must map names to integers");
    }
    for (const auto& [name, bits] : out) check_bits(bits, name);
  }
  for (auto& [name, bits] : parse_bit_map(flags)) out[name] = bits;
  return out;
}

MuLawMode parse_mode(const std::string& s) {
  if (s == "standard") return MuLawMode::standard;
  if (s == "paper-verbatim") return MuLawMode::paper_verbatim;
  throw Error(ErrorCode::UsageError, "unknown mu-law mode '" + s + "'");
}

MuPolicy parse_policy(const std::string& policy, double mu) {
  if (policy == "refit") return MuPolicy::refit();
  if (policy == "fixed") {
    if (!(mu > 0.0)) throw Error(ErrorCode::InvalidMu, "mu must be positive");
    return MuPolicy::fixed(mu);
  }
  throw Error(ErrorCode::UsageError, "unknown mu policy '" + policy + "'");
}

std::vector<std::int64_t> parse_frequencies(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::UsageError, "bad frequency '" + item + "'");
    }
  }
  return out;
}

/// Runs `fn(i)` for i in [0, n) across threads; rethrows the first failure.
template <typename Fn>
void parallel_for_each(std::size_t n, Fn&& fn) {
  std::vector<std::string> errors(n);
  std::vector<ErrorCode> codes(n, ErrorCode::InvalidTensor);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      codes[static_cast<std::size_t>(i)] = e.code();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw Error(codes[i], errors[i]);
  }
}

struct QuantOptions {
  int bits = 5;
  std::vector<std::string> bit_map;
  double alpha = 400.0;
  std::string mu_policy = "refit";
  double mu = 8.0;
  std::string mu_mode = "standard";

  void add_to(CLI::App* app) {
    app->add_option("--bits", bits, "Default bit depth for every kernel (1-8)")
        ->check(CLI::Range(1, 8));
    app->add_option("--bit-map", bit_map, "Per-kernel override name=bits (repeatable)");
    app->add_option("--alpha", alpha, "Softmax temperature used when refitting mu")
        ->check(CLI::PositiveNumber);
    app->add_option("--mu-policy", mu_policy, "refit | fixed")
        ->check(CLI::IsMember({"refit", "fixed"}));
    app->add_option("--mu", mu, "mu for the fixed policy")->check(CLI::PositiveNumber);
    app->add_option("--mu-mode", mu_mode, "standard | paper-verbatim")
        ->check(CLI::IsMember({"standard", "paper-verbatim"}));
  }

  void merge_config(const CLI::App* app, const json& cfg) {
    merge(app, "--bits", cfg, "bits", bits);
    merge(app, "--alpha", cfg, "alpha", alpha);
    merge(app, "--mu-policy", cfg, "mu_policy", mu_policy);
    merge(app, "--mu", cfg, "mu", mu);
    merge(app, "--mu-mode", cfg, "mu_mode", mu_mode);
    check_bits(bits, "default");
  }
};

// -- quantize -------------------------------------------------------------------

struct QuantizeCmd {
  std::string input, output, codebook, config, kernel_pattern;
  QuantOptions q;

  void setup(CLI::App* app) {
    app->add_option("--in", input, "Input GQCK checkpoint");
    app->add_option("--out", output, "Output GQCK checkpoint (hard-quantized)");
    app->add_option("--codebook", codebook, "Codebook sidecar path (default: <out>.codebook.json)");
    app->add_option("--kernel-pattern", kernel_pattern,
                    "Regex selecting tensors to quantize (default: every tensor of rank >= 2)");
    app->add_option("--config", config, "JSON job config; flags override its keys");
    q.add_to(app);
  }

  int run(const CLI::App* app, std::ostream& out) {
    const json cfg = load_config(config);
    merge(app, "--in", cfg, "input", input);
    merge(app, "--out", cfg, "output", output);
    merge(app, "--codebook", cfg, "codebook", codebook);
    merge(app, "--kernel-pattern", cfg, "kernel_pattern", kernel_pattern);
    q.merge_config(app, cfg);
    if (input.empty() || output.empty()) {
      throw Error(ErrorCode::UsageError, "quantize needs --in and --out");
    }
    if (codebook.empty()) codebook = output + ".codebook.json";
    if (input == output || codebook == input || codebook == output) {
      throw Error(ErrorCode::UsageError, "input, output and codebook paths must be distinct");
    }
    const auto overrides = resolve_bit_map(q.bit_map, cfg);
    const auto policy = parse_policy(q.mu_policy, q.mu);
    const auto mode = parse_mode(q.mu_mode);

    const Checkpoint in = read_checkpoint(input);
    for (const auto& entry : overrides) in.at(entry.first);
    std::optional<std::regex> pattern;
    if (!kernel_pattern.empty()) {
      try {
        pattern.emplace(kernel_pattern);
      } catch (const std::regex_error&) {
        throw Error(ErrorCode::UsageError, "bad --kernel-pattern");
      }
    }
    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto& [name, t] = in.tensors()[i];
      const bool chosen = overrides.count(name) > 0 ||
                          (pattern ? std::regex_search(name, *pattern) : t.shape.size() >= 2);
      if (chosen) selected.push_back(i);
    }

    std::vector<QuantizedTensor> results(selected.size());
    parallel_for_each(selected.size(), [&](std::size_t k) {
      const auto& [name, t] = in.tensors()[selected[k]];
      const auto it = overrides.find(name);
      const int bits = it == overrides.end() ? q.bits : it->second;
      results[k] = quantize_tensor(t.data, bits, q.alpha, policy, true, mode);
    });

    Checkpoint result;
    result.metadata = in.metadata;
    NamedCodebooks codebooks;
    std::size_t next = 0;
    auto summary = json::array();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto& [name, t] = in.tensors()[i];
      if (next < selected.size() && selected[next] == i) {
        const auto& r = results[next++];
        result.add(name, Tensor{t.shape, r.values});
        codebooks.emplace_back(name, r.codebook);
        summary.push_back({{"name", name},
                           {"bit_depth", r.codebook.bit_depth},
                           {"mu", r.codebook.mu},
                           {"effective_distinct", r.codebook.effective_distinct}});
      } else {
        result.add(name, t);
      }
    }
    write_checkpoint(output, result);
    write_text(codebook, codebooks_to_json(codebooks));
    out << json{{"quantized", summary}, {"output", output}, {"codebook", codebook}}.dump() << '\n';
    return 0;
  }
};

// -- pack / unpack ----------------------------------------------------------------

struct PackCmd {
  std::string input, codebook, output;

  void setup(CLI::App* app) {
    app->add_option("--in", input, "Hard-quantized GQCK checkpoint")->required();
    app->add_option("--codebook", codebook, "Codebook sidecar (default: <in>.codebook.json)");
    app->add_option("--out", output, "Output GQPK file")->required();
  }

  int run(std::ostream& out) {
    if (codebook.empty()) codebook = input + ".codebook.json";
    if (input == output) throw Error(ErrorCode::UsageError, "--in and --out must differ");
    const Checkpoint ckpt = read_checkpoint(input);
    const auto codebooks = codebooks_from_json(read_text(codebook));
    PackedModel model;
    model.tensors.resize(codebooks.size());
    parallel_for_each(codebooks.size(), [&](std::size_t i) {
      const auto& [name, cb] = codebooks[i];
      const Tensor& t = ckpt.at(name);
      model.tensors[i] = pack_tensor(name, t.shape, indices_for_values(t.data, cb), cb);
    });
    auto skipped = json::array();
    for (const auto& [name, t] : ckpt.tensors()) {
      const bool packed = std::any_of(codebooks.begin(), codebooks.end(),
                                      [&](const auto& c) { return c.first == name; });
      if (!packed) skipped.push_back(name);
    }
    const auto bytes = serialize_packed_model(model);
    write_file_bytes(output, bytes);
    out << json{{"packed", model.tensors.size()}, {"skipped", skipped}, {"bytes", bytes.size()}}.dump()
        << '\n';
    return 0;
  }
};

struct UnpackCmd {
  std::string input, output;
  bool lenient = false;

  void setup(CLI::App* app) {
    app->add_option("--in", input, "GQPK file")->required();
    app->add_option("--out", output, "Output GQCK checkpoint of dequantized tensors")->required();
    app->add_flag("--lenient", lenient, "Skip pad-bit and index validation");
  }

  int run(std::ostream& out) {
    if (input == output) throw Error(ErrorCode::UsageError, "--in and --out must differ");
    const auto model = read_packed_model(input, lenient ? ReadMode::lenient : ReadMode::strict);
    const Checkpoint ckpt = dequantize(model);
    write_checkpoint(output, ckpt);
    out << json{{"tensors", ckpt.size()}, {"output", output}}.dump() << '\n';
    return 0;
  }
};

// -- analyze ----------------------------------------------------------------------

struct AnalyzeCmd {
  std::string original, quantized, codebook, topology, kind_rules;
  std::string csv, json_out, summary_csv_path, summary_json_path;
  std::uint64_t seed = 0;
  QuantOptions q;

  void setup(CLI::App* app) {
    app->add_option("--original", original, "Unquantized GQCK checkpoint");
    app->add_option("--quantized", quantized, "Hard-quantized GQCK checkpoint");
    app->add_option("--codebook", codebook, "Codebook sidecar (default: <quantized>.codebook.json)");
    app->add_option("--topology", topology,
                    "Analyze synthetic weights for a topology JSON instead of checkpoints");
    app->add_option("--seed", seed, "Seed for synthetic topology weights");
    app->add_option("--kind-rules", kind_rules,
                    "JSON list of {pattern, kind} used to classify kernel names");
    app->add_option("--csv", csv, "Per-kernel CSV output (default: stdout)");
    app->add_option("--json", json_out, "Per-kernel JSON output");
    app->add_option("--summary-csv", summary_csv_path, "Per-kind box statistics CSV");
    app->add_option("--summary-json", summary_json_path, "Per-kind box statistics JSON");
    q.add_to(app);
  }

  KindClassifier classifier() const {
    if (kind_rules.empty()) return KindClassifier();
    std::vector<KindRule> rules;
    try {
      for (const auto& r : json::parse(read_text(kind_rules))) {
        rules.push_back({r.at("pattern").get<std::string>(),
                         kernel_kind_from_string(r.at("kind").get<std::string>())});
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("bad kind rules: ") + e.what());
    }
    return KindClassifier(std::move(rules));
  }

  std::vector<KernelStats> from_checkpoints() const {
    if (original.empty() || quantized.empty()) {
      throw Error(ErrorCode::UsageError, "analyze needs --original and --quantized, or --topology");
    }
    const auto cb_path = codebook.empty() ? quantized + ".codebook.json" : codebook;
    const Checkpoint orig = read_checkpoint(original);
    const Checkpoint quant = read_checkpoint(quantized);
    const auto codebooks = codebooks_from_json(read_text(cb_path));
    const auto kinds = classifier();
    std::vector<KernelStats> stats(codebooks.size());
    parallel_for_each(codebooks.size(), [&](std::size_t i) {
      const auto& [name, cb] = codebooks[i];
      const Tensor& a = orig.at(name);
      const Tensor& b = quant.at(name);
      if (a.shape != b.shape) throw Error(ErrorCode::ShapeError, "shape mismatch for '" + name + "'");
      stats[i] = kernel_stats(name, kinds.classify(name), a.data, b.data, cb);
    });
    return stats;
  }

  std::vector<KernelStats> from_topology(const CLI::App* app) {
    q.merge_config(app, json::object());
    const auto overrides = parse_bit_map(q.bit_map);
    const auto mode = parse_mode(q.mu_mode);
    const auto policy = parse_policy(q.mu_policy, q.mu);
    const Topology topo = load_topology(topology);
    std::vector<KernelStats> stats(topo.kernels.size());
    parallel_for_each(topo.kernels.size(), [&](std::size_t i) {
      const auto& k = topo.kernels[i];
      // Laplacian weights with a per-kernel spread, so boundaries differ.
      Rng rng(seed * 1000003ULL + i);
      const double spread = 0.02 * std::exp(rng.uniform(-1.5, 1.5));
      std::vector<float> w(Tensor::element_count(k.shape.dims));
      for (auto& v : w) v = static_cast<float>(rng.laplace(spread));
      const int bits = overrides.count(k.shape.name) ? overrides.at(k.shape.name) : q.bits;
      double mu = policy.fixed_mu.value_or(8.0);
      if (!policy.is_fixed()) {
        const std::size_t stride = std::max<std::size_t>(1, w.size() / kFitSampleLimit);
        std::vector<double> sample;
        for (std::size_t j = 0; j < w.size(); j += stride) sample.push_back(w[j]);
        MuSearchConfig search;
        search.mode = mode;
        mu = fit_mu(sample, bits, q.alpha, search);
      }
      const auto r = quantize_tensor(w, bits, q.alpha, MuPolicy::fixed(mu), true, mode);
      stats[i] = kernel_stats(k.shape.name, k.kind, w, r.values, r.codebook);
    });
    return stats;
  }

  int run(const CLI::App* app, std::ostream& out) {
    const auto stats = topology.empty() ? from_checkpoints() : from_topology(app);
    const auto groups = allocation_report(stats);
    if (!csv.empty()) write_text(csv, stats_csv(stats));
    if (!json_out.empty()) write_text(json_out, stats_json(stats));
    if (!summary_csv_path.empty()) write_text(summary_csv_path, summary_csv(groups));
    if (!summary_json_path.empty()) write_text(summary_json_path, summary_json(groups));
    if (csv.empty()) out << stats_csv(stats);
    return 0;
  }
};

// -- footprint --------------------------------------------------------------------

struct FootprintCmd {
  std::string topology, json_out;
  int bits = 5;
  std::vector<std::string> bit_map;

  void setup(CLI::App* app) {
    app->add_option("--topology", topology, "Topology JSON with kernel shapes")->required();
    app->add_option("--bits", bits, "Default bit depth (1-8)")->check(CLI::Range(1, 8));
    app->add_option("--bit-map", bit_map, "Per-kernel override name=bits (repeatable)");
    app->add_option("--json", json_out, "Also write the report to this file");
  }

  int run(std::ostream& out) {
    const Topology topo = load_topology(topology);
    BitAllocation alloc{bits, parse_bit_map(bit_map)};
    const auto r = footprint_report(topo.shapes(), alloc);
    auto groups = json::array();
    for (const auto& g : r.groups) {
      groups.push_back({{"group", g.group},
                        {"params", g.params},
                        {"bytes_f32", g.bytes_f32},
                        {"bytes_packed", g.bytes_packed}});
    }
    auto tensors = json::array();
    for (const auto& t : r.tensors) {
      tensors.push_back({{"name", t.name},
                         {"group", t.group},
                         {"params", t.params},
                         {"bit_depth", t.bit_depth},
                         {"bytes_f32", t.bytes_f32},
                         {"bytes_int8", t.bytes_int8},
                         {"bytes_packed", t.bytes_packed},
                         {"codebook_bytes", t.codebook_bytes}});
    }
    const json doc = {{"topology", topo.name},
                      {"total_params", r.total_params},
                      {"total_bytes_f32", r.total_f32},
                      {"total_bytes_int8", r.total_int8},
                      {"total_bytes_packed", r.total_packed},
                      {"codebook_overhead_bytes", r.codebook_overhead},
                      {"reduction_ratio", r.reduction_ratio},
                      {"reduction_ratio_with_overhead", r.reduction_ratio_with_overhead},
                      {"groups", groups},
                      {"tensors", tensors}};
    if (!json_out.empty()) write_text(json_out, doc.dump(2) + "\n");
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.1f", r.reduction_ratio);
    json brief = doc;
    brief.erase("tensors");
    brief["reduction_ratio_1dp"] = ratio;
    out << brief.dump(2) << '\n';
    return 0;
  }
};

// -- train-demo / ablate ------------------------------------------------------------

struct TrainOptions {
  std::string task = "two-gaussians";
  std::uint64_t seed = 0;
  std::int64_t steps = 10000;
  double learning_rate = 0.0;
  std::size_t batch = 32;
  std::int64_t quant_every = 1000;
  int bits = 5;
  std::vector<std::string> bit_map;
  std::int64_t hard_at = -1;
  double alpha_start = 10.0;
  double alpha_end = 400.0;
  std::string mu_policy = "refit";
  double mu = 8.0;
  std::string mu_mode = "standard";
  std::string optimizer = "sgd";
  std::int64_t log_every = 100;
  std::string config;

  void add_to(CLI::App* app, bool with_frequency) {
    app->add_option("--task", task, "two-gaussians | sine-regression | parity-sequence");
    app->add_option("--seed", seed, "Seed for data, init and batch order");
    app->add_option("--steps", steps, "Training steps")->check(CLI::PositiveNumber);
    app->add_option("--lr", learning_rate, "Learning rate (default depends on the task)");
    app->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    if (with_frequency) {
      app->add_option("--quant-every", quant_every, "Steps between quantization callbacks")
          ->check(CLI::PositiveNumber);
    }
    app->add_option("--bits", bits, "Bit depth for every kernel; 0 trains unquantized")
        ->check(CLI::Range(0, 8));
    app->add_option("--bit-map", bit_map, "Per-kernel override name=bits (repeatable)");
    app->add_option("--hard-at", hard_at, "Step of the final hard compression (default 90%)");
    app->add_option("--alpha-start", alpha_start, "Annealing start temperature");
    app->add_option("--alpha-end", alpha_end, "Annealing end temperature");
    app->add_option("--mu-policy", mu_policy, "refit | fixed")
        ->check(CLI::IsMember({"refit", "fixed"}));
    app->add_option("--mu", mu, "mu for the fixed policy")->check(CLI::PositiveNumber);
    app->add_option("--mu-mode", mu_mode, "standard | paper-verbatim")
        ->check(CLI::IsMember({"standard", "paper-verbatim"}));
    app->add_option("--optimizer", optimizer, "sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
    app->add_option("--log-every", log_every, "Logging cadence in steps")->check(CLI::PositiveNumber);
    app->add_option("--config", config, "JSON config; flags override its keys");
  }

  TrainConfig build(const CLI::App* app) {
    const json cfg = load_config(config);
    merge(app, "--task", cfg, "task", task);
    merge(app, "--seed", cfg, "seed", seed);
    merge(app, "--steps", cfg, "steps", steps);
    merge(app, "--lr", cfg, "learning_rate", learning_rate);
    merge(app, "--batch", cfg, "batch", batch);
    merge(app, "--quant-every", cfg, "quant_every", quant_every);
    merge(app, "--bits", cfg, "bits", bits);
    merge(app, "--hard-at", cfg, "hard_at", hard_at);
    merge(app, "--alpha-start", cfg, "alpha_start", alpha_start);
    merge(app, "--alpha-end", cfg, "alpha_end", alpha_end);
    merge(app, "--mu-policy", cfg, "mu_policy", mu_policy);
    merge(app, "--mu", cfg, "mu", mu);
    merge(app, "--mu-mode", cfg, "mu_mode", mu_mode);
    merge(app, "--optimizer", cfg, "optimizer", optimizer);
    merge(app, "--log-every", cfg, "log_every", log_every);

    const TaskKind kind = task_kind_from_string(task);
    TrainConfig tc = default_train_config(kind, seed, steps, bits);
    for (auto& [name, b] : resolve_bit_map(bit_map, cfg)) tc.bit_map[name] = b;
    if (learning_rate > 0.0) tc.learning_rate = learning_rate;
    tc.batch_size = batch;
    tc.quant_every = quant_every;
    if (hard_at >= 0) tc.hard_at = hard_at;
    tc.schedule = AnnealSchedule{alpha_start, alpha_end, 0, std::max<std::int64_t>(1, tc.hard_at)};
    tc.mu_policy = parse_policy(mu_policy, mu);
    tc.mu_mode = parse_mode(mu_mode);
    tc.optimizer = optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    tc.log_every = log_every;
    tc.validate();
    return tc;
  }
};

std::string config_fingerprint(const TrainConfig& c) {
  std::ostringstream s;
  s << to_string(c.task) << '|' << c.seed << '|' << c.steps << '|' << c.learning_rate << '|'
    << c.batch_size << '|' << c.quant_every << '|' << c.hard_at << '|'
    << c.schedule.alpha_start << '|' << c.schedule.alpha_end << '|'
    << (c.mu_policy.fixed_mu ? *c.mu_policy.fixed_mu : -1.0) << '|'
    << static_cast<int>(c.mu_mode) << '|' << static_cast<int>(c.optimizer);
  for (const auto& [n, b] : c.bit_map) s << '|' << n << '=' << b;
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct TrainCmd {
  TrainOptions t;
  std::string report, csv, checkpoint, codebook;

  void setup(CLI::App* app) {
    t.add_to(app, true);
    app->add_option("--report", report, "TrainReport JSON output");
    app->add_option("--csv", csv, "Loss/eval curve CSV output");
    app->add_option("--checkpoint", checkpoint, "Final model as GQCK");
    app->add_option("--codebook", codebook, "Codebook sidecar for the final model");
  }

  int run(const CLI::App* app, std::ostream& out) {
    const TrainConfig cfg = t.build(app);
    const auto result = train(cfg);
    const auto& r = result.report;
    if (!report.empty()) write_text(report, report_to_json(r));
    if (!csv.empty()) write_text(csv, report_curves_csv(r));
    if (!checkpoint.empty()) {
      Checkpoint ckpt = to_checkpoint(result.model);
      ckpt.metadata["steps"] = std::to_string(cfg.steps);
      ckpt.metadata["seed"] = std::to_string(cfg.seed);
      ckpt.metadata["config_hash"] = config_fingerprint(cfg);
      write_checkpoint(checkpoint, ckpt);
    }
    if (!codebook.empty()) {
      NamedCodebooks cbs(result.quant.frozen.begin(), result.quant.frozen.end());
      write_text(codebook, codebooks_to_json(cbs));
    }
    json summary = {{"task", r.task},
                    {"seed", r.seed},
                    {"final_eval_metric", r.final_eval_metric},
                    {"final_eval_loss", r.final_eval_loss},
                    {"distinct_values", r.distinct_values}};
    if (r.metric_before_hard) summary["metric_before_hard"] = *r.metric_before_hard;
    if (r.metric_after_hard) summary["metric_after_hard"] = *r.metric_after_hard;
    out << summary.dump() << '\n';
    return 0;
  }
};

struct AblateCmd {
  TrainOptions t;
  std::string frequencies = "50,500,5000";
  std::string csv, json_out;

  void setup(CLI::App* app) {
    t.add_to(app, false);
    app->add_option("--frequencies", frequencies, "Comma-separated callback intervals");
    app->add_option("--csv", csv, "Comparison CSV output (default: stdout)");
    app->add_option("--json", json_out, "All TrainReports as JSON");
  }

  int run(const CLI::App* app, std::ostream& out) {
    const TrainConfig cfg = t.build(app);
    const auto rows = frequency_ablation(cfg, parse_frequencies(frequencies));
    const auto table = ablation_csv(rows);
    if (!json_out.empty()) write_text(json_out, ablation_to_json(rows));
    if (!csv.empty()) {
      write_text(csv, table);
    } else {
      out << table;
    }
    return 0;
  }
};

void apply_thread_cap() {
  if (const char* env = std::getenv("GQ_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) kernels::set_max_threads(n);
    } catch (const std::exception&) {
      // Non-numeric values leave the runtime default in place.
    }
  }
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"code", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  apply_thread_cap();
  CLI::App app{"General Quantizer: soft-to-hard QAT toolkit", "gq"};
  app.require_subcommand(1);

  QuantizeCmd quantize;
  PackCmd pack;
  UnpackCmd unpack;
  AnalyzeCmd analyze;
  FootprintCmd footprint;
  TrainCmd train_demo;
  AblateCmd ablate;

  auto* q_app = app.add_subcommand("quantize", "Hard-quantize kernels of a GQCK checkpoint");
  quantize.setup(q_app);
  auto* p_app = app.add_subcommand("pack", "Pack a quantized checkpoint into GQPK");
  pack.setup(p_app);
  auto* u_app = app.add_subcommand("unpack", "Dequantize a GQPK file into GQCK");
  unpack.setup(u_app);
  auto* a_app = app.add_subcommand("analyze", "Per-kernel distinct values, boundaries, error, SQNR");
  analyze.setup(a_app);
  auto* f_app = app.add_subcommand("footprint", "Byte accounting for a topology at given bit depths");
  footprint.setup(f_app);
  auto* t_app = app.add_subcommand("train-demo", "Train a toy model with GQ callbacks");
  train_demo.setup(t_app);
  auto* b_app = app.add_subcommand("ablate", "Quantization-frequency ablation");
  ablate.setup(b_app);

  std::vector<std::string> argv_store{"gq"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, to_string(ErrorCode::UsageError), e.what());
    return 2;
  }

  try {
    if (q_app->parsed()) return quantize.run(q_app, out);
    if (p_app->parsed()) return pack.run(out);
    if (u_app->parsed()) return unpack.run(out);
    if (a_app->parsed()) return analyze.run(a_app, out);
    if (f_app->parsed()) return footprint.run(out);
    if (t_app->parsed()) return train_demo.run(t_app, out);
    if (b_app->parsed()) return ablate.run(b_app, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gq::cli
