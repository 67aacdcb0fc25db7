#pragma once

// Pipeline orchestrator. Every state change is appended to the event log and
// folded into the Store under one lock, so the live state always equals a
// replay of the log.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "madp/classificator.hpp"
#include "madp/config.hpp"
#include "madp/endpoint.hpp"
#include "madp/event_log.hpp"
#include "madp/extraction.hpp"
#include "madp/review_service.hpp"

namespace madp {

/// invoice and delivery_note field sets.
std::map<DocType, Schema> default_schemas();

/// Stages that can be replaced by a passthrough.
const std::set<std::string>& ablation_stages();
/// Parses "parser,splitter"; throws ValidationError for unknown names.
std::set<std::string> parse_ablation(const std::string& csv);

struct EngineOptions {
  PipelineConfig config;
  /// Holds events.jsonl, prompts/ and feedback.jsonl. Empty keeps
  /// everything in memory.
  std::filesystem::path store_dir;
  Clock clock = system_clock();
  std::set<std::string> ablate;
  std::map<DocType, Schema> schemas = default_schemas();
  /// Taken from config.signatures_path when empty.
  std::vector<classificator::CategorySignature> signatures;
  /// Built from config.backends when empty.
  std::vector<std::shared_ptr<extraction::Backend>> backends;
  /// Built from config endpoints when null.
  std::shared_ptr<ModelEndpoint> classifier_endpoint;
  std::shared_ptr<ModelEndpoint> parser_endpoint;
  RetryPolicy retry = RetryPolicy::standard();
  std::size_t jobs = 1;
};

class Engine {
 public:
  explicit Engine(EngineOptions options);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Throws ValidationError for a malformed bundle or a duplicate doc_id.
  void ingest(const DocBundle& bundle);
  /// Every *.json bundle in `dir`, by file name; already known doc_ids are
  /// skipped. Returns the newly ingested ids.
  std::vector<std::string> ingest_dir(const std::filesystem::path& dir);

  /// Drives every non-terminal document to a terminal state on `jobs`
  /// workers. Returns the number of documents that changed.
  std::size_t run();
  /// Drives one document (and the units it splits into).
  void run_document(const std::string& doc_id);

  /// Reviewer correction. NotFoundError for an unknown document,
  /// ConflictError without an open task, ValidationError for an unknown
  /// field or a no-op value. Returns the document view.
  json correct(const std::string& doc_id, const std::string& field, const std::string& value,
               const std::string& reviewer_id = "reviewer");
  /// Reviewer confirmation; same errors as correct().
  json confirm(const std::string& doc_id, const std::string& reviewer_id = "reviewer");

  // Views.
  json queue_json(std::optional<TaskStatus> status = std::nullopt) const;
  json stats_json() const;
  json document_json(const std::string& id) const;
  json prompt_versions_json(const CategoryKey& category) const;
  json prompt_heads_json() const;
  /// Copy of the folded state.
  Store snapshot() const;
  std::vector<Event> events() const { return log_.snapshot(); }

  /// Wall-clock seconds spent per document in this process (not replayed).
  std::map<std::string, double> durations() const;

  /// Called under the store lock after every event is folded.
  void set_event_hook(std::function<void(const Event&, const Store&)> hook);

  const PipelineConfig& config() const { return options_.config; }
  const std::map<DocType, Schema>& schemas() const { return options_.schemas; }
  const Schema* schema_for(const PipelineState& doc) const;

 private:
  struct Step;
  Step next_step(const PipelineState& doc);
  /// Appends and folds an event if the document is still at `expected_seq`.
  bool commit(const std::string& doc_id, std::uint64_t expected_seq, const std::string& kind,
              const json& payload);
  Event append(const std::string& doc_id, const std::string& kind, const json& payload);
  void reextract_field(const pftfi::InheritanceTask& task);
  ValidationReport validate_doc(const PipelineState& doc,
                                const std::vector<ConsensusRecord>& records) const;
  std::optional<std::pair<PipelineState, std::uint64_t>> doc_at(const std::string& id) const;

  EngineOptions options_;
  EventLog log_;
  mutable std::mutex mu_;  // store_ and log order
  Store store_;
  std::mutex review_mu_;   // corrections and confirmations, in commit order
  std::map<std::string, double> durations_;
  std::function<void(const Event&, const Store&)> hook_;
  std::optional<pftfi::FeedbackLog> feedback_log_;
  std::optional<pftfi::PromptStore> disk_prompts_;
  std::chrono::milliseconds backend_timeout_{30000};
};

}  // namespace madp
