#pragma once

// The review-side read model: a pure fold of the event log into documents,
// review tasks, prompt lineages and statistics, plus the JSON views served
// over HTTP. Replaying a log prefix yields exactly the views the live
// service showed after that event.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madp/config.hpp"
#include "madp/event_log.hpp"
#include "madp/pftfi.hpp"
#include "madp/state.hpp"

namespace madp {

class NotFoundError : public Error {
 public:
  using Error::Error;
};

enum class TaskStatus { pending, in_progress, resolved };

NLOHMANN_JSON_SERIALIZE_ENUM(TaskStatus, {{TaskStatus::pending, "pending"},
                                          {TaskStatus::in_progress, "in_progress"},
                                          {TaskStatus::resolved, "resolved"}})

std::string to_string(TaskStatus s);
std::optional<TaskStatus> task_status_from_string(const std::string& s);

struct ReviewTask {
  std::string doc_id;
  CategoryKey category;
  TaskStatus status = TaskStatus::pending;
  std::uint64_t opened_seq = 0;
  std::string opened_at;
  std::string resolved_at;
  int corrections = 0;
  int confirmations = 0;
  int inheritance_updates = 0;

  std::optional<double> review_seconds() const;
};

struct PipelineStats {
  long total_docs = 0;
  long ai_completed = 0;
  long fallback_docs = 0;
  long reviewed_docs = 0;
  long in_flight_docs = 0;
  std::optional<double> review_rate;      // absent without documents
  std::optional<double> automation_rate;  // absent without documents
  std::optional<double> avg_review_seconds;
};

json to_json(const PipelineStats& s);

/// Event kinds beyond the stage outputs.
namespace event_kind {
inline constexpr const char* kIngested = "ingested";
inline constexpr const char* kUnit = "unit";
inline constexpr const char* kFeedback = "feedback";
inline constexpr const char* kPromptCommitted = "prompt_committed";
inline constexpr const char* kParserConfig = "parser_config";
inline constexpr const char* kInheritance = "inheritance";
}  // namespace event_kind

class Store {
 public:
  /// Applies one event. Throws StateMismatchError / ValidationError /
  /// ConflictError when the event does not fit the folded state.
  void apply(const Event& e);
  static Store replay(const std::vector<Event>& events);

  const std::map<std::string, PipelineState>& docs() const { return docs_; }
  const PipelineState* doc(const std::string& id) const;
  /// Ingest order, units right after their container.
  const std::vector<std::string>& order() const { return order_; }
  const std::map<std::string, ReviewTask>& tasks() const { return tasks_; }
  const pftfi::PromptStore& prompts() const { return prompts_; }
  const ParserConfig& parser_config() const { return parser_config_; }
  const std::vector<CorrectionFeedback>& feedback() const { return feedback_; }
  std::uint64_t last_seq() const { return last_seq_; }
  /// Sequence number of the last event that touched the document.
  std::uint64_t doc_seq(const std::string& id) const;

  /// Oldest first; every task when `status` is empty.
  std::vector<ReviewTask> queue(std::optional<TaskStatus> status = std::nullopt) const;
  PipelineStats stats() const;

  json queue_json(std::optional<TaskStatus> status = std::nullopt) const;
  json stats_json() const { return to_json(stats()); }
  /// Throws NotFoundError.
  json document_json(const std::string& id, const PipelineConfig& config) const;
  json task_json(const ReviewTask& t) const;
  json prompt_versions_json(const CategoryKey& category) const;
  /// Head version id per category with a committed lineage.
  json prompt_heads_json() const;

 private:
  std::map<std::string, PipelineState> docs_;
  std::map<std::string, std::uint64_t> doc_seq_;
  std::vector<std::string> order_;
  std::map<std::string, ReviewTask> tasks_;
  pftfi::PromptStore prompts_;
  ParserConfig parser_config_;
  std::vector<CorrectionFeedback> feedback_;
  std::uint64_t last_seq_ = 0;
};

}  // namespace madp
