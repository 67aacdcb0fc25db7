#include "madp/config.hpp"

#include <fstream>
#include <sstream>

namespace madp {

namespace {

void check_unit(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(what + " must be in [0,1], got " + std::to_string(v));
}

}  // namespace

double PipelineConfig::threshold_for(const CategoryKey& category,
                                     const std::string& field) const {
  if (auto it = field_thresholds.find(field); it != field_thresholds.end())
    return it->second;
  if (auto it = category_thresholds.find(category.str());
      it != category_thresholds.end())
    return it->second;
  return confidence_threshold_default;
}

bool PipelineConfig::check_enabled(const std::string& check_id) const {
  if (auto it = checks_enabled.find(check_id); it != checks_enabled.end())
    return it->second;
  // "format" disables every "format.<field>" check
  auto dot = check_id.find('.');
  if (dot != std::string::npos) {
    if (auto it = checks_enabled.find(check_id.substr(0, dot));
        it != checks_enabled.end())
      return it->second;
  }
  return true;
}

void validate_config(const PipelineConfig& c) {
  check_unit(c.confidence_threshold_default, "confidence_threshold_default");
  if (c.confidence_threshold_default < 0.80 ||
      c.confidence_threshold_default > 0.90)
    throw ValidationError(
        "confidence_threshold_default must lie in [0.80, 0.90]");
  for (const auto& [k, v] : c.category_thresholds)
    check_unit(v, "category threshold " + k);
  for (const auto& [k, v] : c.field_thresholds)
    check_unit(v, "field threshold " + k);
  check_unit(c.split_confidence, "split_confidence");
  if (!(c.header_crop_fraction > 0.0 && c.header_crop_fraction <= 1.0))
    throw ValidationError("header_crop_fraction must be in (0,1]");
  if (c.arithmetic_tolerance_minor_units < 0)
    throw ValidationError("arithmetic_tolerance_minor_units must be >= 0");
  if (c.max_examples == 0) throw ValidationError("max_examples must be >= 1");
  for (const auto& b : c.backends) {
    if (b.backend_id.empty()) throw ValidationError("backend without id");
    if (b.kind != "scripted" && b.kind != "http")
      throw ValidationError("backend " + b.backend_id + ": unknown kind " + b.kind);
  }
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  PipelineConfig c;
  try {
    c.confidence_threshold_default =
        j.value("confidence_threshold_default", c.confidence_threshold_default);
    c.category_thresholds = j.value("category_thresholds", c.category_thresholds);
    c.field_thresholds = j.value("field_thresholds", c.field_thresholds);
    c.arithmetic_tolerance_minor_units = j.value(
        "arithmetic_tolerance_minor_units", c.arithmetic_tolerance_minor_units);
    if (j.contains("vat_table")) {
      c.vat_table.clear();
      for (const auto& [country, rates] : j.at("vat_table").items()) {
        for (const auto& r : rates) {
          std::string s = r.is_string() ? r.get<std::string>() : r.dump();
          c.vat_table[country].insert(s);
        }
      }
    }
    c.default_country = j.value("default_country", c.default_country);
    c.split_confidence = j.value("split_confidence", c.split_confidence);
    c.header_crop_fraction = j.value("header_crop_fraction", c.header_crop_fraction);
    c.max_examples = j.value("max_examples", c.max_examples);
    c.checks_enabled = j.value("checks_enabled", c.checks_enabled);
    if (j.contains("backends")) {
      for (const auto& b : j.at("backends")) {
        BackendSpec s;
        s.backend_id = b.at("backend_id").get<std::string>();
        s.kind = b.value("kind", s.kind);
        s.endpoint = b.value("endpoint", s.endpoint);
        s.timeout_ms = b.value("timeout_ms", s.timeout_ms);
        c.backends.push_back(std::move(s));
      }
    }
    if (j.contains("classifier_endpoint") && !j["classifier_endpoint"].is_null())
      c.classifier_endpoint = j["classifier_endpoint"].get<std::string>();
    if (j.contains("parser_endpoint") && !j["parser_endpoint"].is_null())
      c.parser_endpoint = j["parser_endpoint"].get<std::string>();
    if (j.contains("signatures") && !j["signatures"].is_null())
      c.signatures_path = j["signatures"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config has a mistyped key: ") + e.what());
  }
  validate_config(c);
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json j{{"confidence_threshold_default", c.confidence_threshold_default},
         {"category_thresholds", c.category_thresholds},
         {"field_thresholds", c.field_thresholds},
         {"arithmetic_tolerance_minor_units", c.arithmetic_tolerance_minor_units},
         {"vat_table", c.vat_table},
         {"default_country", c.default_country},
         {"split_confidence", c.split_confidence},
         {"header_crop_fraction", c.header_crop_fraction},
         {"max_examples", c.max_examples},
         {"checks_enabled", c.checks_enabled}};
  json backends = json::array();
  for (const auto& b : c.backends)
    backends.push_back({{"backend_id", b.backend_id},
                        {"kind", b.kind},
                        {"endpoint", b.endpoint},
                        {"timeout_ms", b.timeout_ms}});
  j["backends"] = backends;
  if (c.classifier_endpoint) j["classifier_endpoint"] = *c.classifier_endpoint;
  if (c.parser_endpoint) j["parser_endpoint"] = *c.parser_endpoint;
  if (c.signatures_path) j["signatures"] = *c.signatures_path;
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what(),
                     line);
  }
  PipelineConfig c = config_from_json(j);
  // relative paths in the file resolve against the file's directory
  auto base = path.parent_path();
  for (auto& b : c.backends)
    if (b.kind == "scripted" && !b.endpoint.empty() &&
        std::filesystem::path(b.endpoint).is_relative())
      b.endpoint = (base / b.endpoint).string();
  if (c.signatures_path && std::filesystem::path(*c.signatures_path).is_relative())
    c.signatures_path = (base / *c.signatures_path).string();
  return c;
}

}  // namespace madp
