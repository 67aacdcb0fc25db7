#pragma once

// Shared domain types for the document pipeline. Every stage consumes and
// produces these as immutable values; JSON (de)serializers live alongside so
// the event log and the HTTP API share one wire format.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace madp {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stage output delivered for a stage the document is not waiting on.
class StateMismatchError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Transport failure worth retrying (network error, timeout, 5xx).
class RetriableError : public Error {
 public:
  using Error::Error;
};

/// The remote answered, but not in the documented shape.
class AdapterError : public Error {
 public:
  using Error::Error;
};

/// Optimistic-concurrency conflict (stale head, resolved task).
class ConflictError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Ingest representation
// ---------------------------------------------------------------------------

struct TextBlock {
  std::string text;
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  double font_size_hint = 10.0;

  double x_center() const { return (x0 + x1) / 2.0; }
  bool operator==(const TextBlock&) const = default;
};

struct TableGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> cells;  // row-major
  double y0 = 0;

  const std::string& cell(int r, int c) const {
    return cells.at(static_cast<std::size_t>(r * cols + c));
  }
  bool operator==(const TableGrid&) const = default;
};

struct Page {
  int index = 0;
  std::vector<TextBlock> blocks;
  std::vector<TableGrid> tables;
  std::optional<std::string> footer_text;

  bool operator==(const Page&) const = default;
};

struct DocBundle {
  std::string doc_id;
  std::string source_name;
  std::vector<Page> pages;
  std::string received_at;

  bool operator==(const DocBundle&) const = default;
};

/// Throws ValidationError when a bundle breaks the page/block/table invariants.
void validate_bundle(const DocBundle& bundle);

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

enum class DocType { invoice, delivery_note, other };

std::string to_string(DocType t);
DocType doc_type_from_string(const std::string& s);

/// (supplier_id, doc_type): the unit of prompt lineage and similarity.
struct CategoryKey {
  std::string supplier_id;
  DocType doc_type = DocType::other;

  /// "supplier:doc_type", used in URLs and store paths.
  std::string str() const;
  static CategoryKey parse(const std::string& s);

  auto operator<=>(const CategoryKey&) const = default;
};

struct CategoryLabel {
  std::string supplier_id = "unknown";
  DocType doc_type = DocType::other;
  double confidence = 0.0;

  CategoryKey key() const { return {supplier_id, doc_type}; }
  static CategoryLabel unknown(double confidence = 0.0) {
    return {"unknown", DocType::other, confidence};
  }
  bool operator==(const CategoryLabel&) const = default;
};

// ---------------------------------------------------------------------------
// Field schema
// ---------------------------------------------------------------------------

enum class FieldKind {
  date,
  money,
  percentage,
  currency_code,
  tax_id,
  text,
  quantity,
  line_items
};

std::string to_string(FieldKind k);

struct FieldSchema {
  std::string name;
  FieldKind kind = FieldKind::text;
  bool required = false;
  std::optional<std::set<std::string>> admissible_values;

  bool operator==(const FieldSchema&) const = default;
};

using Schema = std::vector<FieldSchema>;

/// Non-empty, unique names, at most one line_items field.
void validate_schema(const Schema& schema);
const FieldSchema* find_field(const Schema& schema, const std::string& name);

// ---------------------------------------------------------------------------
// Routing
// ---------------------------------------------------------------------------

enum class Route { auto_accept, human_review, non_ai_fallback };

std::string to_string(Route r);

struct RoutingDecision {
  Route route = Route::human_review;
  std::vector<std::string> reasons;

  bool operator==(const RoutingDecision&) const = default;
};

// ---------------------------------------------------------------------------
// Splitter / parser artifacts
// ---------------------------------------------------------------------------

struct LogicalUnit {
  std::string unit_id;
  int start_page = 0;  // inclusive
  int end_page = 0;    // inclusive
  CategoryLabel head_label;

  bool operator==(const LogicalUnit&) const = default;
};

struct HeadingEntry {
  int level = 1;
  std::string text;
  bool operator==(const HeadingEntry&) const = default;
};

struct ParsedDoc {
  std::string unit_id;
  std::string markdown;
  std::vector<HeadingEntry> heading_outline;
  long raw_token_count = 0;
  long parsed_token_count = 0;
  std::string parser_config_version;

  bool operator==(const ParsedDoc&) const = default;
};

struct LayoutHint {
  std::string field;
  std::string note;
  std::string feedback_id;
  bool operator==(const LayoutHint&) const = default;
};

struct ParserConfig {
  double column_gap_threshold = 0.15;
  double heading_font_ratio = 1.3;
  std::string version = "p1";
  std::map<std::string, std::vector<LayoutHint>> layout_hints;  // category key

  bool operator==(const ParserConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Extraction results
// ---------------------------------------------------------------------------

struct FieldValue {
  std::string field;
  std::string raw;
  std::string normalized;
  bool missing = false;
  double confidence = 0.0;
  std::string backend_id;
  std::string prompt_version;

  bool operator==(const FieldValue&) const = default;
};

enum class Agreement { unanimous, majority, split, single };

std::string to_string(Agreement a);

struct ConsensusRecord {
  std::string field;
  FieldValue chosen;
  Agreement agreement = Agreement::single;
  bool flagged = false;

  bool operator==(const ConsensusRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class CheckStatus { pass, fail, skipped };

struct CheckOutcome {
  std::string check_id;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
  std::vector<std::string> affected_fields;

  bool operator==(const CheckOutcome&) const = default;
};

struct ValidationReport {
  std::string doc_id;
  std::vector<CheckOutcome> outcomes;
  std::vector<FieldValue> adjusted;
  RoutingDecision routing;

  bool operator==(const ValidationReport&) const = default;
};

// ---------------------------------------------------------------------------
// Prompt lineage and feedback
// ---------------------------------------------------------------------------

struct FewShotExample {
  std::string excerpt;
  std::string field;
  std::string value;
  bool operator==(const FewShotExample&) const = default;
};

struct PromptVersion {
  int number = 1;  // strictly increasing within a category
  CategoryKey category;
  std::optional<int> parent;
  std::vector<std::string> instruction_lines;
  std::vector<FewShotExample> examples;
  std::vector<std::string> created_from;

  std::string version_id() const { return "v" + std::to_string(number); }
  bool operator==(const PromptVersion&) const = default;
};

struct CorrectionFeedback {
  std::string feedback_id;
  std::string doc_id;
  std::string field;
  std::string original_value;
  bool original_missing = false;
  std::string corrected_value;
  DocType doc_type = DocType::other;
  std::string supplier_id;
  std::string reviewer_id;
  std::string ts;

  CategoryKey category() const { return {supplier_id, doc_type}; }
  bool operator==(const CorrectionFeedback&) const = default;
};

enum class ErrorClass { missing, format, value, layout };

std::string to_string(ErrorClass c);

struct ErrorPattern {
  std::string feedback_id;
  ErrorClass error_class = ErrorClass::value;
  std::string description;
  bool operator==(const ErrorPattern&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

NLOHMANN_JSON_SERIALIZE_ENUM(DocType, {{DocType::invoice, "invoice"},
                                       {DocType::delivery_note, "delivery_note"},
                                       {DocType::other, "other"}})
NLOHMANN_JSON_SERIALIZE_ENUM(FieldKind,
                             {{FieldKind::date, "date"},
                              {FieldKind::money, "money"},
                              {FieldKind::percentage, "percentage"},
                              {FieldKind::currency_code, "currency_code"},
                              {FieldKind::tax_id, "tax_id"},
                              {FieldKind::text, "text"},
                              {FieldKind::quantity, "quantity"},
                              {FieldKind::line_items, "line_items"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Route, {{Route::auto_accept, "auto_accept"},
                                     {Route::human_review, "human_review"},
                                     {Route::non_ai_fallback, "non_ai_fallback"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Agreement, {{Agreement::unanimous, "unanimous"},
                                         {Agreement::majority, "majority"},
                                         {Agreement::split, "split"},
                                         {Agreement::single, "single"}})
NLOHMANN_JSON_SERIALIZE_ENUM(CheckStatus, {{CheckStatus::pass, "pass"},
                                           {CheckStatus::fail, "fail"},
                                           {CheckStatus::skipped, "skipped"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ErrorClass, {{ErrorClass::missing, "missing"},
                                          {ErrorClass::format, "format"},
                                          {ErrorClass::value, "value"},
                                          {ErrorClass::layout, "layout"}})

void to_json(json& j, const TextBlock& v);
void from_json(const json& j, TextBlock& v);
void to_json(json& j, const TableGrid& v);
void from_json(const json& j, TableGrid& v);
void to_json(json& j, const Page& v);
void from_json(const json& j, Page& v);
void to_json(json& j, const DocBundle& v);
void from_json(const json& j, DocBundle& v);
void to_json(json& j, const CategoryKey& v);
void from_json(const json& j, CategoryKey& v);
void to_json(json& j, const CategoryLabel& v);
void from_json(const json& j, CategoryLabel& v);
void to_json(json& j, const FieldSchema& v);
void from_json(const json& j, FieldSchema& v);
void to_json(json& j, const RoutingDecision& v);
void from_json(const json& j, RoutingDecision& v);
void to_json(json& j, const LogicalUnit& v);
void from_json(const json& j, LogicalUnit& v);
void to_json(json& j, const HeadingEntry& v);
void from_json(const json& j, HeadingEntry& v);
void to_json(json& j, const ParsedDoc& v);
void from_json(const json& j, ParsedDoc& v);
void to_json(json& j, const LayoutHint& v);
void from_json(const json& j, LayoutHint& v);
void to_json(json& j, const ParserConfig& v);
void from_json(const json& j, ParserConfig& v);
void to_json(json& j, const FieldValue& v);
void from_json(const json& j, FieldValue& v);
void to_json(json& j, const ConsensusRecord& v);
void from_json(const json& j, ConsensusRecord& v);
void to_json(json& j, const CheckOutcome& v);
void from_json(const json& j, CheckOutcome& v);
void to_json(json& j, const ValidationReport& v);
void from_json(const json& j, ValidationReport& v);
void to_json(json& j, const FewShotExample& v);
void from_json(const json& j, FewShotExample& v);
void to_json(json& j, const PromptVersion& v);
void from_json(const json& j, PromptVersion& v);
void to_json(json& j, const CorrectionFeedback& v);
void from_json(const json& j, CorrectionFeedback& v);
void to_json(json& j, const ErrorPattern& v);
void from_json(const json& j, ErrorPattern& v);

}  // namespace madp
