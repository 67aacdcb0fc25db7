#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "madp/types.hpp"

namespace madp {

/// One entry of the extraction backend registry.
struct BackendSpec {
  std::string backend_id;
  std::string kind = "scripted";  // scripted | http
  std::string endpoint;           // fixture dir for scripted, URL for http
  int timeout_ms = 30000;

  bool operator==(const BackendSpec&) const = default;
};

struct PipelineConfig {
  double confidence_threshold_default = 0.85;
  std::map<std::string, double> category_thresholds;  // "supplier:doc_type"
  std::map<std::string, double> field_thresholds;
  long arithmetic_tolerance_minor_units = 2;
  std::map<std::string, std::set<std::string>> vat_table{
      {"IT", {"0", "4", "5", "10", "22"}}};
  std::string default_country = "IT";
  double split_confidence = 0.7;
  double header_crop_fraction = 0.4;
  std::size_t max_examples = 8;
  std::map<std::string, bool> checks_enabled;  // check_id prefix -> on/off

  std::vector<BackendSpec> backends;
  std::optional<std::string> classifier_endpoint;
  std::optional<std::string> parser_endpoint;
  std::optional<std::string> signatures_path;

  /// Field override > category override > default.
  double threshold_for(const CategoryKey& category,
                       const std::string& field) const;
  bool check_enabled(const std::string& check_id) const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Throws ValidationError when a threshold leaves [0,1], the default leaves
/// [0.80, 0.90], or the crop fraction leaves (0,1].
void validate_config(const PipelineConfig& config);

/// Documented defaults fill absent keys. Malformed JSON -> ParseError carrying
/// the line; out-of-range values -> ValidationError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const json& j);
json config_to_json(const PipelineConfig& config);

}  // namespace madp
