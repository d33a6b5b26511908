#pragma once

// File formats. All text is UTF-8 with LF line endings; reals are written with
// 17 significant digits so that write -> read -> write is byte-identical.
//
// Dataset (JSONL), one impression per line, fixed field order:
//   {"session_id":3,"context":[1,2.5,4],"item_id":17,"rank":1,"viewed":1,"clicked":0}
//
// Model (JSON):
//   {"family":"prob","params":{"rho":1.5},"link":null}
//   {"family":"contextual-prob","params":{"theta":[...]},"link":"softplus"}
//   {"family":"empirical","params":{},"link":null,"max_rank":50,"table":[...]}

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "feedbias/models.hpp"
#include "feedbias/records.hpp"
#include "feedbias/simulator.hpp"

namespace feedbias::io {

using Json = nlohmann::ordered_json;

/// "%.17g"; non-finite values become "nan", "inf" or "-inf".
std::string format_real(double value);

/// Serializes with format_real for every floating-point number. pretty adds
/// two-space indentation and a trailing newline.
std::string dump_json(const Json& value, bool pretty = true);

std::string format_record(const ImpressionRecord& record);
ImpressionRecord parse_record(const std::string& line);

void write_dataset(std::ostream& out, const Dataset& dataset);
/// Throws UsageError with the offending line number on malformed input.
Dataset read_dataset(std::istream& in);
void write_dataset_file(const std::string& path, const Dataset& dataset);
Dataset read_dataset_file(const std::string& path);

Json model_to_json(const PositionBiasModel& model);
PositionBiasModel model_from_json(const Json& json);
void write_model_file(const std::string& path, const PositionBiasModel& model);
PositionBiasModel read_model_file(const std::string& path);

Json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& json);

/// Ground-truth sidecar: {"true_theta":[...],"link":"softplus","config":{...}}.
Json truth_sidecar(const SimConfig& config);
SimConfig config_from_sidecar(const Json& sidecar);

Json read_json_file(const std::string& path);
/// Writes the text exactly; throws std::runtime_error when the file cannot be written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace feedbias::io
