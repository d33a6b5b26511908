#include "feedbias/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "feedbias/errors.hpp"

namespace feedbias::io {
namespace {

void dump(const Json& value, bool pretty, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(2 * d), ' ');
  };
  switch (value.type()) {
    case Json::value_t::object: {
      if (value.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += pretty ? ": " : ":";
        dump(item, pretty, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (value.empty()) {
        out += "[]";
        return;
      }
      // Arrays of numbers stay on one line.
      const bool flat = std::all_of(value.begin(), value.end(),
                                    [](const Json& v) { return v.is_number(); });
      out += '[';
      bool first = true;
      for (const auto& item : value) {
        if (!first) out += pretty && flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump(item, pretty, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = value.get<double>();
      out += std::isfinite(v) ? format_real(v) : "null";
      return;
    }
    default:
      out += value.dump();
      return;
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  return in;
}

template <typename T>
T require(const Json& json, const char* key) {
  if (!json.contains(key)) throw UsageError(std::string("missing field '") + key + "'");
  try {
    return json.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("field '") + key + "': " + e.what());
  }
}

bool parse_flag(const Json& json, const char* key) {
  const Json& v = json.at(key);
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i == 0 || i == 1) return i == 1;
  }
  throw UsageError(std::string("field '") + key + "' must be 0 or 1");
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string dump_json(const Json& value, bool pretty) {
  std::string out;
  dump(value, pretty, 0, out);
  if (pretty) out += '\n';
  return out;
}

std::string format_record(const ImpressionRecord& r) {
  std::string line = "{\"session_id\":" + std::to_string(r.session_id) + ",\"context\":[";
  const auto values = r.context.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) line += ',';
    line += format_real(values[i]);
  }
  line += "],\"item_id\":" + std::to_string(r.item_id) + ",\"rank\":" + std::to_string(r.rank) +
          ",\"viewed\":" + (r.viewed ? "1" : "0") + ",\"clicked\":" + (r.clicked ? "1" : "0") +
          "}";
  return line;
}

ImpressionRecord parse_record(const std::string& line) {
  Json json;
  try {
    json = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid JSON: ") + e.what());
  }
  if (!json.is_object()) throw UsageError("record must be a JSON object");
  ImpressionRecord record;
  record.session_id = require<std::uint64_t>(json, "session_id");
  record.context = ContextVector(require<std::vector<double>>(json, "context"));
  record.item_id = require<std::uint64_t>(json, "item_id");
  record.rank = require<std::int64_t>(json, "rank");
  if (record.rank < 1) throw UsageError("rank must be >= 1");
  if (!json.contains("viewed") || !json.contains("clicked")) {
    throw UsageError("missing field 'viewed' or 'clicked'");
  }
  record.viewed = parse_flag(json, "viewed");
  record.clicked = parse_flag(json, "clicked");
  if (record.clicked && !record.viewed) throw UsageError("clicked impression must be viewed");
  return record;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& record : dataset) out << format_record(record) << '\n';
}

Dataset read_dataset(std::istream& in) {
  Dataset dataset;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      dataset.push_back(parse_record(line));
    } catch (const std::exception& e) {
      throw UsageError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dataset;
}

void write_dataset_file(const std::string& path, const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  write_text_file(path, out.str());
}

Dataset read_dataset_file(const std::string& path) {
  auto in = open_input(path);
  return read_dataset(in);
}

Json model_to_json(const PositionBiasModel& model) {
  Json json;
  json["family"] = std::string(to_string(model.family()));
  Json params = Json::object();
  Json link_name = nullptr;
  std::optional<EmpiricalModel> empirical;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogModel>) {
          params["alpha"] = m.alpha;
        } else if constexpr (std::is_same_v<T, ExpModel>) {
          params["gamma"] = m.gamma;
        } else if constexpr (std::is_same_v<T, ProbModel>) {
          params["rho"] = m.rho;
        } else if constexpr (std::is_same_v<T, ContextualModel>) {
          params["theta"] = m.theta;
          link_name = std::string(to_string(m.link));
        } else if constexpr (std::is_same_v<T, EmpiricalModel>) {
          empirical = m;
        }
      },
      model.params());
  json["params"] = params;
  json["link"] = link_name;
  if (empirical) {
    json["max_rank"] = empirical->table.size();
    json["table"] = empirical->table;
  }
  return json;
}

PositionBiasModel model_from_json(const Json& json) {
  const Family family = parse_family(require<std::string>(json, "family"));
  const Json params = json.contains("params") ? json.at("params") : Json::object();
  switch (family) {
    case Family::dcg:
      return PositionBiasModel::dcg();
    case Family::log:
      return PositionBiasModel::log(require<double>(params, "alpha"));
    case Family::exp:
      return PositionBiasModel::exp(require<double>(params, "gamma"));
    case Family::prob:
      return PositionBiasModel::prob(require<double>(params, "rho"));
    case Family::empirical: {
      auto table = require<std::vector<double>>(json, "table");
      if (json.contains("max_rank") &&
          json.at("max_rank").get<std::size_t>() != table.size()) {
        throw UsageError("empirical model: max_rank does not match table length");
      }
      return PositionBiasModel::empirical(std::move(table));
    }
    default: {
      const LinkKind link_kind = json.contains("link") && !json.at("link").is_null()
                                     ? parse_link(json.at("link").get<std::string>())
                                     : default_link(family);
      return PositionBiasModel::contextual(base_family(family),
                                           require<std::vector<double>>(params, "theta"),
                                           link_kind);
    }
  }
}

void write_model_file(const std::string& path, const PositionBiasModel& model) {
  write_text_file(path, dump_json(model_to_json(model)));
}

PositionBiasModel read_model_file(const std::string& path) {
  return model_from_json(read_json_file(path));
}

Json sim_config_to_json(const SimConfig& c) {
  Json json;
  json["n_sessions"] = c.n_sessions;
  json["list_length"] = c.list_length;
  json["n_items"] = c.n_items;
  json["true_theta"] = c.true_theta;
  json["quality_seed"] = c.quality_seed;
  json["intervention"] = std::string(to_string(c.intervention));
  json["seed"] = c.seed;
  json["quality_min"] = c.quality_min;
  json["quality_max"] = c.quality_max;
  json["interaction_scale"] = c.interaction_scale;
  return json;
}

SimConfig sim_config_from_json(const Json& json) {
  SimConfig c;
  c.n_sessions = require<std::int64_t>(json, "n_sessions");
  c.list_length = require<std::int64_t>(json, "list_length");
  c.n_items = require<std::int64_t>(json, "n_items");
  c.true_theta = require<std::vector<double>>(json, "true_theta");
  c.quality_seed = require<std::uint64_t>(json, "quality_seed");
  c.intervention = parse_intervention(require<std::string>(json, "intervention"));
  c.seed = require<std::uint64_t>(json, "seed");
  c.quality_min = require<double>(json, "quality_min");
  c.quality_max = require<double>(json, "quality_max");
  c.interaction_scale = require<double>(json, "interaction_scale");
  c.validate();
  return c;
}

Json truth_sidecar(const SimConfig& config) {
  Json json;
  json["true_theta"] = config.true_theta;
  json["link"] = "softplus";
  json["config"] = sim_config_to_json(config);
  return json;
}

SimConfig config_from_sidecar(const Json& sidecar) {
  if (!sidecar.contains("config")) throw UsageError("sidecar has no 'config' object");
  return sim_config_from_json(sidecar.at("config"));
}

Json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("'" + path + "': invalid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace feedbias::io
