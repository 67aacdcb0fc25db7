#include "madp/types.hpp"

#include <algorithm>

namespace madp {

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate_bundle(const DocBundle& bundle) {
  if (bundle.doc_id.empty()) throw ValidationError("doc_id must not be empty");
  if (bundle.pages.empty())
    throw ValidationError("bundle " + bundle.doc_id + " has no pages");
  for (std::size_t i = 0; i < bundle.pages.size(); ++i) {
    const Page& p = bundle.pages[i];
    if (p.index != static_cast<int>(i))
      throw ValidationError("bundle " + bundle.doc_id +
                            ": page indices must be contiguous from 0");
    for (const auto& b : p.blocks) {
      if (!(in_unit(b.x0) && in_unit(b.x1) && in_unit(b.y0) && in_unit(b.y1)))
        throw ValidationError("block '" + b.text + "' outside [0,1]^2");
      if (!(b.x0 < b.x1 && b.y0 < b.y1))
        throw ValidationError("block '" + b.text + "' has an empty box");
      if (!(b.font_size_hint > 0))
        throw ValidationError("block '" + b.text + "' has non-positive font");
    }
    for (const auto& t : p.tables) {
      if (t.rows < 0 || t.cols < 0 ||
          t.cells.size() != static_cast<std::size_t>(t.rows) * t.cols)
        throw ValidationError("table on page " + std::to_string(i) +
                              " is not rectangular");
    }
  }
}

std::string to_string(DocType t) { return json(t).get<std::string>(); }

DocType doc_type_from_string(const std::string& s) {
  if (s == "invoice") return DocType::invoice;
  if (s == "delivery_note") return DocType::delivery_note;
  if (s == "other") return DocType::other;
  throw ValidationError("unknown doc_type '" + s + "'");
}

std::string CategoryKey::str() const {
  return supplier_id + ":" + to_string(doc_type);
}

CategoryKey CategoryKey::parse(const std::string& s) {
  auto pos = s.rfind(':');
  if (pos == std::string::npos || pos == 0)
    throw ValidationError("category must look like supplier:doc_type, got '" +
                          s + "'");
  return {s.substr(0, pos), doc_type_from_string(s.substr(pos + 1))};
}

std::string to_string(FieldKind k) { return json(k).get<std::string>(); }
std::string to_string(Route r) { return json(r).get<std::string>(); }
std::string to_string(Agreement a) { return json(a).get<std::string>(); }
std::string to_string(ErrorClass c) { return json(c).get<std::string>(); }

void validate_schema(const Schema& schema) {
  if (schema.empty()) throw ValidationError("field schema is empty");
  std::set<std::string> names;
  int line_items = 0;
  for (const auto& f : schema) {
    if (f.name.empty()) throw ValidationError("field with empty name");
    if (!names.insert(f.name).second)
      throw ValidationError("duplicate field '" + f.name + "'");
    if (f.kind == FieldKind::line_items) ++line_items;
  }
  if (line_items > 1)
    throw ValidationError("schema declares more than one line_items field");
}

const FieldSchema* find_field(const Schema& schema, const std::string& name) {
  auto it = std::find_if(schema.begin(), schema.end(),
                         [&](const FieldSchema& f) { return f.name == name; });
  return it == schema.end() ? nullptr : &*it;
}

// --- JSON ------------------------------------------------------------------

void to_json(json& j, const TextBlock& v) {
  j = json{{"text", v.text}, {"x0", v.x0}, {"y0", v.y0}, {"x1", v.x1},
           {"y1", v.y1},     {"font_size_hint", v.font_size_hint}};
}
void from_json(const json& j, TextBlock& v) {
  v.text = j.at("text").get<std::string>();
  v.x0 = j.at("x0").get<double>();
  v.y0 = j.at("y0").get<double>();
  v.x1 = j.at("x1").get<double>();
  v.y1 = j.at("y1").get<double>();
  v.font_size_hint = value_or(j, "font_size_hint", 10.0);
}

void to_json(json& j, const TableGrid& v) {
  j = json{{"rows", v.rows}, {"cols", v.cols}, {"cells", v.cells}, {"y0", v.y0}};
}
void from_json(const json& j, TableGrid& v) {
  v.rows = j.at("rows").get<int>();
  v.cols = j.at("cols").get<int>();
  v.cells = j.at("cells").get<std::vector<std::string>>();
  v.y0 = value_or(j, "y0", 0.0);
}

void to_json(json& j, const Page& v) {
  j = json{{"index", v.index}, {"blocks", v.blocks}, {"tables", v.tables}};
  j["footer_text"] = v.footer_text ? json(*v.footer_text) : json(nullptr);
}
void from_json(const json& j, Page& v) {
  v.index = j.at("index").get<int>();
  v.blocks = value_or(j, "blocks", std::vector<TextBlock>{});
  v.tables = value_or(j, "tables", std::vector<TableGrid>{});
  v.footer_text.reset();
  if (auto it = j.find("footer_text"); it != j.end() && !it->is_null())
    v.footer_text = it->get<std::string>();
}

void to_json(json& j, const DocBundle& v) {
  j = json{{"doc_id", v.doc_id},
           {"source_name", v.source_name},
           {"pages", v.pages},
           {"received_at", v.received_at}};
}
void from_json(const json& j, DocBundle& v) {
  v.doc_id = j.at("doc_id").get<std::string>();
  v.source_name = value_or(j, "source_name", std::string{});
  v.pages = j.at("pages").get<std::vector<Page>>();
  v.received_at = value_or(j, "received_at", std::string{});
}

void to_json(json& j, const CategoryKey& v) { j = v.str(); }
void from_json(const json& j, CategoryKey& v) {
  v = CategoryKey::parse(j.get<std::string>());
}

void to_json(json& j, const CategoryLabel& v) {
  j = json{{"supplier_id", v.supplier_id},
           {"doc_type", v.doc_type},
           {"confidence", v.confidence}};
}
void from_json(const json& j, CategoryLabel& v) {
  v.supplier_id = j.at("supplier_id").get<std::string>();
  v.doc_type = j.at("doc_type").get<DocType>();
  v.confidence = j.at("confidence").get<double>();
}

void to_json(json& j, const FieldSchema& v) {
  j = json{{"name", v.name}, {"kind", v.kind}, {"required", v.required}};
  if (v.admissible_values) j["admissible_values"] = *v.admissible_values;
}
void from_json(const json& j, FieldSchema& v) {
  v.name = j.at("name").get<std::string>();
  v.kind = j.at("kind").get<FieldKind>();
  v.required = value_or(j, "required", false);
  v.admissible_values.reset();
  if (auto it = j.find("admissible_values"); it != j.end() && !it->is_null())
    v.admissible_values = it->get<std::set<std::string>>();
}

void to_json(json& j, const RoutingDecision& v) {
  j = json{{"route", v.route}, {"reasons", v.reasons}};
}
void from_json(const json& j, RoutingDecision& v) {
  v.route = j.at("route").get<Route>();
  v.reasons = value_or(j, "reasons", std::vector<std::string>{});
}

void to_json(json& j, const LogicalUnit& v) {
  j = json{{"unit_id", v.unit_id},
           {"page_range", {v.start_page, v.end_page}},
           {"head_label", v.head_label}};
}
void from_json(const json& j, LogicalUnit& v) {
  v.unit_id = j.at("unit_id").get<std::string>();
  const auto& r = j.at("page_range");
  v.start_page = r.at(0).get<int>();
  v.end_page = r.at(1).get<int>();
  v.head_label = j.at("head_label").get<CategoryLabel>();
}

void to_json(json& j, const HeadingEntry& v) {
  j = json{{"level", v.level}, {"text", v.text}};
}
void from_json(const json& j, HeadingEntry& v) {
  v.level = j.at("level").get<int>();
  v.text = j.at("text").get<std::string>();
}

void to_json(json& j, const ParsedDoc& v) {
  j = json{{"unit_id", v.unit_id},
           {"markdown", v.markdown},
           {"heading_outline", v.heading_outline},
           {"raw_token_count", v.raw_token_count},
           {"parsed_token_count", v.parsed_token_count},
           {"parser_config_version", v.parser_config_version}};
}
void from_json(const json& j, ParsedDoc& v) {
  v.unit_id = j.at("unit_id").get<std::string>();
  v.markdown = j.at("markdown").get<std::string>();
  v.heading_outline =
      value_or(j, "heading_outline", std::vector<HeadingEntry>{});
  v.raw_token_count = value_or(j, "raw_token_count", 0L);
  v.parsed_token_count = value_or(j, "parsed_token_count", 0L);
  v.parser_config_version =
      value_or(j, "parser_config_version", std::string{});
}

void to_json(json& j, const LayoutHint& v) {
  j = json{{"field", v.field}, {"note", v.note}, {"feedback_id", v.feedback_id}};
}
void from_json(const json& j, LayoutHint& v) {
  v.field = j.at("field").get<std::string>();
  v.note = value_or(j, "note", std::string{});
  v.feedback_id = value_or(j, "feedback_id", std::string{});
}

void to_json(json& j, const ParserConfig& v) {
  j = json{{"column_gap_threshold", v.column_gap_threshold},
           {"heading_font_ratio", v.heading_font_ratio},
           {"table_render_style", "pipe table"},
           {"version", v.version},
           {"layout_hints", v.layout_hints}};
}
void from_json(const json& j, ParserConfig& v) {
  ParserConfig d;
  v.column_gap_threshold =
      value_or(j, "column_gap_threshold", d.column_gap_threshold);
  v.heading_font_ratio = value_or(j, "heading_font_ratio", d.heading_font_ratio);
  v.version = value_or(j, "version", d.version);
  v.layout_hints = value_or(j, "layout_hints",
                            std::map<std::string, std::vector<LayoutHint>>{});
  if (!(v.column_gap_threshold > 0) || !(v.heading_font_ratio > 0))
    throw ValidationError("parser thresholds must be positive");
}

void to_json(json& j, const FieldValue& v) {
  j = json{{"field", v.field},
           {"raw", v.raw},
           {"normalized", v.normalized},
           {"missing", v.missing},
           {"confidence", v.confidence},
           {"backend_id", v.backend_id},
           {"prompt_version", v.prompt_version}};
}
void from_json(const json& j, FieldValue& v) {
  v.field = j.at("field").get<std::string>();
  v.raw = value_or(j, "raw", std::string{});
  v.normalized = value_or(j, "normalized", std::string{});
  v.missing = value_or(j, "missing", false);
  v.confidence = j.at("confidence").get<double>();
  v.backend_id = value_or(j, "backend_id", std::string{});
  v.prompt_version = value_or(j, "prompt_version", std::string{});
}

void to_json(json& j, const ConsensusRecord& v) {
  j = json{{"field", v.field},
           {"chosen", v.chosen},
           {"agreement", v.agreement},
           {"flagged", v.flagged}};
}
void from_json(const json& j, ConsensusRecord& v) {
  v.field = j.at("field").get<std::string>();
  v.chosen = j.at("chosen").get<FieldValue>();
  v.agreement = j.at("agreement").get<Agreement>();
  v.flagged = j.at("flagged").get<bool>();
}

void to_json(json& j, const CheckOutcome& v) {
  j = json{{"check_id", v.check_id},
           {"status", v.status},
           {"detail", v.detail},
           {"affected_fields", v.affected_fields}};
}
void from_json(const json& j, CheckOutcome& v) {
  v.check_id = j.at("check_id").get<std::string>();
  v.status = j.at("status").get<CheckStatus>();
  v.detail = value_or(j, "detail", std::string{});
  v.affected_fields =
      value_or(j, "affected_fields", std::vector<std::string>{});
}

void to_json(json& j, const ValidationReport& v) {
  j = json{{"doc_id", v.doc_id},
           {"outcomes", v.outcomes},
           {"adjusted", v.adjusted},
           {"routing", v.routing}};
}
void from_json(const json& j, ValidationReport& v) {
  v.doc_id = j.at("doc_id").get<std::string>();
  v.outcomes = j.at("outcomes").get<std::vector<CheckOutcome>>();
  v.adjusted = j.at("adjusted").get<std::vector<FieldValue>>();
  v.routing = j.at("routing").get<RoutingDecision>();
}

void to_json(json& j, const FewShotExample& v) {
  j = json{{"excerpt", v.excerpt}, {"field", v.field}, {"value", v.value}};
}
void from_json(const json& j, FewShotExample& v) {
  v.excerpt = j.at("excerpt").get<std::string>();
  v.field = j.at("field").get<std::string>();
  v.value = j.at("value").get<std::string>();
}

void to_json(json& j, const PromptVersion& v) {
  j = json{{"version_id", v.version_id()},
           {"number", v.number},
           {"category", v.category},
           {"parent_version",
            v.parent ? json("v" + std::to_string(*v.parent)) : json(nullptr)},
           {"instruction_lines", v.instruction_lines},
           {"examples", v.examples},
           {"created_from", v.created_from}};
}
void from_json(const json& j, PromptVersion& v) {
  v.number = j.at("number").get<int>();
  v.category = j.at("category").get<CategoryKey>();
  v.parent.reset();
  if (auto it = j.find("parent_version"); it != j.end() && !it->is_null())
    v.parent = std::stoi(it->get<std::string>().substr(1));
  v.instruction_lines =
      value_or(j, "instruction_lines", std::vector<std::string>{});
  v.examples = value_or(j, "examples", std::vector<FewShotExample>{});
  v.created_from = value_or(j, "created_from", std::vector<std::string>{});
}

void to_json(json& j, const CorrectionFeedback& v) {
  j = json{{"feedback_id", v.feedback_id},
           {"doc_id", v.doc_id},
           {"field", v.field},
           {"original_value", v.original_value},
           {"original_missing", v.original_missing},
           {"corrected_value", v.corrected_value},
           {"doc_type", v.doc_type},
           {"supplier_id", v.supplier_id},
           {"reviewer_id", v.reviewer_id},
           {"ts", v.ts}};
}
void from_json(const json& j, CorrectionFeedback& v) {
  v.feedback_id = j.at("feedback_id").get<std::string>();
  v.doc_id = j.at("doc_id").get<std::string>();
  v.field = j.at("field").get<std::string>();
  v.original_value = value_or(j, "original_value", std::string{});
  v.original_missing = value_or(j, "original_missing", false);
  v.corrected_value = j.at("corrected_value").get<std::string>();
  v.doc_type = j.at("doc_type").get<DocType>();
  v.supplier_id = j.at("supplier_id").get<std::string>();
  v.reviewer_id = value_or(j, "reviewer_id", std::string{});
  v.ts = value_or(j, "ts", std::string{});
}

void to_json(json& j, const ErrorPattern& v) {
  j = json{{"feedback_id", v.feedback_id},
           {"error_class", v.error_class},
           {"description", v.description}};
}
void from_json(const json& j, ErrorPattern& v) {
  v.feedback_id = j.at("feedback_id").get<std::string>();
  v.error_class = j.at("error_class").get<ErrorClass>();
  v.description = value_or(j, "description", std::string{});
}

}  // namespace madp
