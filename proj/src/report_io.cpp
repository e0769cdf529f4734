#include "gq/report_io.hpp"

#include <sstream>

#include <json.hpp>

#include "format.hpp"
#include "gq/error.hpp"

namespace gq {

namespace {

using nlohmann::json;

json curve_json(const std::vector<CurvePoint>& curve) {
  auto arr = json::array();
  for (const auto& p : curve) arr.push_back({p.step, p.value});
  return arr;
}

std::vector<CurvePoint> curve_from(const json& j) {
  std::vector<CurvePoint> out;
  for (const auto& p : j) out.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json to_json(const TrainReport& r) {
  auto callbacks = json::array();
  for (const auto& c : r.callbacks) {
    callbacks.push_back({{"step", c.step},
                         {"alpha", c.alpha},
                         {"hard", c.hard},
                         {"change_l2", c.change_l2},
                         {"mu", c.mu}});
  }
  return {{"task", r.task},
          {"seed", r.seed},
          {"quant_every", r.quant_every},
          {"loss_curve", curve_json(r.loss_curve)},
          {"eval_curve", curve_json(r.eval_curve)},
          {"callbacks", callbacks},
          {"distinct_values", r.distinct_values},
          {"metric_before_hard", optional_json(r.metric_before_hard)},
          {"metric_after_hard", optional_json(r.metric_after_hard)},
          {"final_eval_metric", r.final_eval_metric},
          {"final_eval_loss", r.final_eval_loss}};
}

TrainReport from_json(const json& j) {
  TrainReport r;
  r.task = j.at("task").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.quant_every = j.at("quant_every").get<std::int64_t>();
  r.loss_curve = curve_from(j.at("loss_curve"));
  r.eval_curve = curve_from(j.at("eval_curve"));
  for (const auto& c : j.at("callbacks")) {
    CallbackRecord rec;
    rec.step = c.at("step").get<std::int64_t>();
    rec.alpha = c.at("alpha").get<double>();
    rec.hard = c.at("hard").get<bool>();
    rec.change_l2 = c.at("change_l2").get<double>();
    rec.mu = c.at("mu").get<std::map<std::string, double>>();
    r.callbacks.push_back(std::move(rec));
  }
  r.distinct_values = j.at("distinct_values").get<std::map<std::string, int>>();
  r.metric_before_hard = optional_from(j.at("metric_before_hard"));
  r.metric_after_hard = optional_from(j.at("metric_after_hard"));
  r.final_eval_metric = j.at("final_eval_metric").get<double>();
  r.final_eval_loss = j.at("final_eval_loss").get<double>();
  return r;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::FormatError, std::string("invalid report JSON: ") + e.what());
  }
}

}  // namespace

std::string report_to_json(const TrainReport& report) { return to_json(report).dump(2) + "\n"; }

TrainReport report_from_json(const std::string& text) {
  try {
    return from_json(parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed report: ") + e.what());
  }
}

std::string report_curves_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "step,train_loss,eval_metric\n";
  for (std::size_t i = 0; i < report.loss_curve.size(); ++i) {
    out << report.loss_curve[i].step << ',' << detail::fmt_double(report.loss_curve[i].value)
        << ',' << detail::fmt_double(report.eval_curve[i].value) << '\n';
  }
  return out.str();
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  auto arr = json::array();
  for (const auto& r : rows) arr.push_back({{"quant_every", r.quant_every}, {"report", to_json(r.report)}});
  return arr.dump(2) + "\n";
}

std::vector<AblationRow> ablation_from_json(const std::string& text) {
  try {
    std::vector<AblationRow> rows;
    for (const auto& r : parse(text)) {
      rows.push_back({r.at("quant_every").get<std::int64_t>(), from_json(r.at("report"))});
    }
    return rows;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed ablation report: ") + e.what());
  }
}

std::string codebooks_to_json(const NamedCodebooks& codebooks) {
  auto arr = json::array();
  for (const auto& [name, cb] : codebooks) {
    std::vector<int> codes(cb.grid_codes.begin(), cb.grid_codes.end());
    arr.push_back({{"name", name},
                   {"bit_depth", cb.bit_depth},
                   {"mu", cb.mu},
                   {"grid_codes", codes},
                   {"scale", static_cast<double>(cb.scale)},
                   {"effective_distinct", cb.effective_distinct}});
  }
  json doc = {{"format", "gq-codebooks"}, {"version", 1}, {"tensors", arr}};
  return doc.dump(2) + "\n";
}

NamedCodebooks codebooks_from_json(const std::string& text) {
  const json doc = parse(text);
  try {
    if (doc.at("format") != "gq-codebooks" || doc.at("version") != 1) {
      throw Error(ErrorCode::FormatError, "not a gq-codebooks v1 document");
    }
    NamedCodebooks out;
    for (const auto& t : doc.at("tensors")) {
      CentroidCodebook cb;
      cb.bit_depth = t.at("bit_depth").get<int>();
      cb.mu = t.at("mu").get<double>();
      for (int k : t.at("grid_codes").get<std::vector<int>>()) {
        if (k < kGridCodeMin || k > kGridCodeMax) {
          throw Error(ErrorCode::FormatError, "grid code out of INT8 range");
        }
        cb.grid_codes.push_back(static_cast<std::int8_t>(k));
      }
      cb.scale = static_cast<float>(t.at("scale").get<double>());
      cb.effective_distinct = t.at("effective_distinct").get<int>();
      if (cb.bit_depth < kMinBitDepth || cb.bit_depth > kMaxBitDepth ||
          cb.grid_codes.empty() || cb.grid_codes.size() > (std::size_t{1} << cb.bit_depth)) {
        throw Error(ErrorCode::FormatError, "inconsistent codebook entry");
      }
      out.emplace_back(t.at("name").get<std::string>(), std::move(cb));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed codebook file: ") + e.what());
  }
}

}  // namespace gq
