#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "floodbench/bootstrap/ablation.hpp"
#include "floodbench/util/format.hpp"

namespace floodbench {

namespace detail {

inline bool parse_flag(const std::string& raw, const std::string& where) {
  std::string v;
  for (char c : raw) {
    if (c != ' ' && c != '\t' && c != '\r') v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (v == "1" || v == "true" || v == "yes" || v == "x") return true;
  if (v == "0" || v == "false" || v == "no" || v.empty()) return false;
  throw SchemaError(where + ": '" + raw + "' is not a boolean");
}

inline void require_model_id(const std::string& id, const std::string& where) {
  if (id.empty()) throw SchemaError(where + ": empty model id");
  if (!util::is_csv_safe(id) || id.find('/') != std::string::npos) {
    throw SchemaError(where + ": model id '" + id + "' contains a reserved character");
  }
}

}  // namespace detail

// Header `model_id,pseudo,depth,seg,spade,dada_s,dada_m` in any column
// order; extra columns are ignored.
inline std::vector<ModelConfig> parse_study_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("study config: empty input");
  const auto header = util::split_csv_line(line);
  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw SchemaError("study config: missing column '" + std::string(name) + "'");
  };
  const std::size_t id_col = column("model_id");
  std::array<std::size_t, kAllTechniques.size()> cols{};
  for (std::size_t k = 0; k < kAllTechniques.size(); ++k) cols[k] = column(technique_key(kAllTechniques[k]));

  std::vector<ModelConfig> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = util::split_csv_line(line);
    const std::string where = "study config line " + std::to_string(lineno);
    if (f.size() != header.size()) throw SchemaError(where + ": expected " + std::to_string(header.size()) + " fields");
    ModelConfig m;
    m.model_id = f[id_col];
    detail::require_model_id(m.model_id, where);
    for (std::size_t k = 0; k < kAllTechniques.size(); ++k) {
      if (detail::parse_flag(f[cols[k]], where)) m.techniques = m.techniques.with(kAllTechniques[k]);
    }
    out.push_back(std::move(m));
  }
  require_unique_ids(out);
  return out;
}

// Array of objects `{"model_id": "...", "pseudo": true, ...}`; every flag key
// is required.
inline std::vector<ModelConfig> parse_study_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("study config: expected a JSON array of models");
  std::vector<ModelConfig> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& o = j[i];
    const std::string where = "study config entry " + std::to_string(i);
    if (!o.is_object()) throw SchemaError(where + ": expected an object");
    if (!o.contains("model_id") || !o["model_id"].is_string()) throw SchemaError(where + ": missing model_id");
    ModelConfig m;
    m.model_id = o["model_id"].get<std::string>();
    detail::require_model_id(m.model_id, where);
    for (auto t : kAllTechniques) {
      const std::string key(technique_key(t));
      if (!o.contains(key)) throw SchemaError(where + ": missing flag '" + key + "'");
      if (!o[key].is_boolean()) throw SchemaError(where + ": flag '" + key + "' must be a boolean");
      if (o[key].get<bool>()) m.techniques = m.techniques.with(t);
    }
    out.push_back(std::move(m));
  }
  require_unique_ids(out);
  return out;
}

inline std::vector<ModelConfig> load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open study config " + path.string());
  if (path.extension() == ".json") {
    try {
      return parse_study_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  }
  return parse_study_csv(in);
}

inline void write_study_csv(std::ostream& out, std::span<const ModelConfig> configs) {
  out << "model_id";
  for (auto t : kAllTechniques) out << ',' << technique_key(t);
  out << '\n';
  for (const auto& c : configs) {
    out << c.model_id;
    for (auto t : kAllTechniques) out << ',' << (c.techniques.contains(t) ? 1 : 0);
    out << '\n';
  }
}

}  // namespace floodbench
