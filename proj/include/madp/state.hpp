#pragma once

// Per-document pipeline state and its transition function. The state is a
// pure fold of advance_state over the document's stage events, which is what
// makes replaying the event log reproduce it exactly.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "madp/types.hpp"

namespace madp {

enum class Stage {
  ingested,
  classified,
  split,
  parsed,
  extracted,
  validated,
  accepted,
  in_review,
  fallback
};

NLOHMANN_JSON_SERIALIZE_ENUM(Stage, {{Stage::ingested, "ingested"},
                                     {Stage::classified, "classified"},
                                     {Stage::split, "split"},
                                     {Stage::parsed, "parsed"},
                                     {Stage::extracted, "extracted"},
                                     {Stage::validated, "validated"},
                                     {Stage::accepted, "accepted"},
                                     {Stage::in_review, "in_review"},
                                     {Stage::fallback, "fallback"}})

std::string to_string(Stage s);
std::optional<Stage> stage_from_string(const std::string& s);

struct ClassifierOutput {
  std::vector<CategoryLabel> page_labels;
};

struct SplitterOutput {
  std::vector<LogicalUnit> units;
  bool ambiguous = false;
};

struct ParserOutput {
  ParsedDoc parsed;
  bool used_fallback_renderer = false;
};

struct ExtractionOutput {
  std::vector<ConsensusRecord> records;
  std::string prompt_version;
  bool failed = false;
  std::string failure_reason;
};

struct ValidationOutput {
  ValidationReport report;
};

/// validated -> accepted | in_review | fallback according to the report.
struct Finalize {};

/// Any non-terminal stage -> fallback (external adapters exhausted).
struct FallbackOutput {
  std::vector<std::string> reasons;
};

/// Post-extraction changes: corrections, field re-extraction, confirmation.
/// Records replace the document's records field by field.
struct ReviewUpdate {
  std::vector<ConsensusRecord> records;
  std::optional<ValidationReport> report;
  std::string prompt_version;   // set for re-extraction
  bool confirm = false;         // human confirmation: all confidences -> 1.0
  bool auto_resolve = false;    // accept when the new report auto-accepts
  int inheritance_round = 0;
};

using StageOutput =
    std::variant<ClassifierOutput, SplitterOutput, ParserOutput,
                 ExtractionOutput, ValidationOutput, Finalize, FallbackOutput,
                 ReviewUpdate>;

std::string stage_output_kind(const StageOutput& out);

struct PipelineState {
  std::string doc_id;
  Stage stage = Stage::ingested;
  std::optional<std::string> parent;
  std::string source_name;
  std::string received_at;
  std::vector<Page> pages;

  std::vector<CategoryLabel> page_labels;
  CategoryLabel category;
  std::vector<LogicalUnit> units;  // set on containers split into >1 unit
  bool split_ambiguous = false;

  std::optional<ParsedDoc> parsed;
  std::string prompt_version;
  std::vector<ConsensusRecord> extraction;
  bool extraction_failed = false;
  std::string extraction_failure;
  std::optional<ValidationReport> validation;
  std::vector<std::string> notes;
  int inheritance_round = 0;

  /// A bundle that was split into several units; its units carry on.
  bool is_container() const { return units.size() > 1; }
  bool is_terminal() const;
  const ConsensusRecord* record(const std::string& field) const;

  bool operator==(const PipelineState&) const = default;
};

PipelineState make_ingested(const DocBundle& bundle);
/// Child document for one unit of a container; starts at Stage::split.
PipelineState make_unit(const PipelineState& container, const LogicalUnit& unit);

/// Throws StateMismatchError when `output` is not for the awaited stage.
PipelineState advance_state(const PipelineState& state, const StageOutput& output);

void to_json(json& j, const StageOutput& v);
void from_json(const json& j, StageOutput& v);
void to_json(json& j, const PipelineState& v);

}  // namespace madp
