#pragma once

#include <string>
#include <vector>

#include "gq/quantizer.hpp"
#include "gq/trainer.hpp"

namespace gq {

std::string report_to_json(const TrainReport& report);
TrainReport report_from_json(const std::string& text);

/// step,train_loss,eval_metric (the two curves share the logging cadence).
std::string report_curves_csv(const TrainReport& report);

std::string ablation_to_json(const std::vector<AblationRow>& rows);
std::vector<AblationRow> ablation_from_json(const std::string& text);

/// Codebook sidecar written next to a quantized checkpoint:
/// {"format": "gq-codebooks", "version": 1, "tensors": [{name, bit_depth, mu,
///  grid_codes, scale, effective_distinct}, ...]}
using NamedCodebooks = std::vector<std::pair<std::string, CentroidCodebook>>;
std::string codebooks_to_json(const NamedCodebooks& codebooks);
NamedCodebooks codebooks_from_json(const std::string& text);

}  // namespace gq
