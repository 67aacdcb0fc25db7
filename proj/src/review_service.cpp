#include "madp/review_service.hpp"

#include <algorithm>
#include <set>

namespace madp {

namespace {

bool is_stage_event(const std::string& kind) {
  static const std::set<std::string> kKinds{"classified", "split",    "parsed",   "extracted",
                                            "validated",  "finalized", "fallback", "review_update"};
  return kKinds.count(kind) > 0;
}

json records_json(const std::vector<ConsensusRecord>& records) {
  json out = json::array();
  for (const auto& r : records) out.push_back(r);
  return out;
}

}  // namespace

std::string to_string(TaskStatus s) { return json(s).get<std::string>(); }

std::optional<TaskStatus> task_status_from_string(const std::string& s) {
  for (TaskStatus t : {TaskStatus::pending, TaskStatus::in_progress, TaskStatus::resolved})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::optional<double> ReviewTask::review_seconds() const {
  if (status != TaskStatus::resolved) return std::nullopt;
  auto open = parse_iso_utc(opened_at), done = parse_iso_utc(resolved_at);
  if (!open || !done) return std::nullopt;
  return static_cast<double>(std::max<std::int64_t>(0, *done - *open));
}

json to_json(const PipelineStats& s) {
  json j{{"total_docs", s.total_docs},         {"ai_completed", s.ai_completed},
         {"fallback_docs", s.fallback_docs},   {"reviewed_docs", s.reviewed_docs},
         {"in_flight_docs", s.in_flight_docs}};
  if (s.review_rate) j["review_rate"] = *s.review_rate;
  if (s.automation_rate) j["automation_rate"] = *s.automation_rate;
  if (s.avg_review_seconds) j["avg_review_seconds"] = *s.avg_review_seconds;
  return j;
}

const PipelineState* Store::doc(const std::string& id) const {
  auto it = docs_.find(id);
  return it == docs_.end() ? nullptr : &it->second;
}

std::uint64_t Store::doc_seq(const std::string& id) const {
  auto it = doc_seq_.find(id);
  return it == doc_seq_.end() ? 0 : it->second;
}

void Store::apply(const Event& e) {
  const std::string& kind = e.event_kind;
  if (kind == event_kind::kIngested) {
    auto bundle = e.payload.get<DocBundle>();
    if (docs_.count(bundle.doc_id))
      throw ValidationError("document " + bundle.doc_id + " already ingested");
    docs_.emplace(bundle.doc_id, make_ingested(bundle));
    order_.push_back(bundle.doc_id);
  } else if (kind == event_kind::kUnit) {
    const auto parent = e.payload.at("parent").get<std::string>();
    const auto unit = e.payload.at("unit").get<LogicalUnit>();
    const PipelineState* container = doc(parent);
    if (!container) throw NotFoundError("unit " + unit.unit_id + " of unknown document " + parent);
    if (docs_.count(unit.unit_id))
      throw ValidationError("document " + unit.unit_id + " already exists");
    docs_.emplace(unit.unit_id, make_unit(*container, unit));
    order_.push_back(unit.unit_id);
  } else if (is_stage_event(kind)) {
    auto it = docs_.find(e.doc_id);
    if (it == docs_.end()) throw NotFoundError("event for unknown document " + e.doc_id);
    const Stage before = it->second.stage;
    PipelineState next = advance_state(it->second, e.payload.get<StageOutput>());
    it->second = std::move(next);
    const Stage after = it->second.stage;
    if (after == Stage::in_review && before != Stage::in_review) {
      ReviewTask t;
      t.doc_id = e.doc_id;
      t.category = it->second.category.key();
      t.opened_seq = e.seq;
      t.opened_at = e.ts;
      tasks_[e.doc_id] = t;
    }
    auto task = tasks_.find(e.doc_id);
    if (kind == "review_update" && task != tasks_.end()) {
      const auto& upd = e.payload;
      if (upd.value("confirm", false)) ++task->second.confirmations;
      if (upd.value("inheritance_round", 0) > 0) ++task->second.inheritance_updates;
      if (before == Stage::in_review && after == Stage::accepted) {
        task->second.status = TaskStatus::resolved;
        task->second.resolved_at = e.ts;
      }
    }
  } else if (kind == event_kind::kFeedback) {
    auto fb = e.payload.at("feedback").get<CorrectionFeedback>();
    auto task = tasks_.find(fb.doc_id);
    if (task == tasks_.end() || task->second.status == TaskStatus::resolved)
      throw ConflictError("feedback for " + fb.doc_id + " without an open review task");
    ++task->second.corrections;
    task->second.status = TaskStatus::in_progress;
    feedback_.push_back(std::move(fb));
  } else if (kind == event_kind::kPromptCommitted) {
    prompts_.commit(e.payload.get<PromptVersion>());
  } else if (kind == event_kind::kParserConfig) {
    parser_config_ = e.payload.get<ParserConfig>();
  } else if (kind == event_kind::kInheritance) {
    if (!doc(e.doc_id)) throw NotFoundError("inheritance for unknown document " + e.doc_id);
  } else {
    throw ValidationError("unknown event kind '" + kind + "' at seq " + std::to_string(e.seq));
  }
  if (!e.doc_id.empty()) doc_seq_[e.doc_id] = e.seq;
  last_seq_ = e.seq;
}

Store Store::replay(const std::vector<Event>& events) {
  Store s;
  for (const auto& e : events) s.apply(e);
  return s;
}

std::vector<ReviewTask> Store::queue(std::optional<TaskStatus> status) const {
  std::vector<ReviewTask> out;
  for (const auto& [_, t] : tasks_)
    if (!status || t.status == *status) out.push_back(t);
  std::sort(out.begin(), out.end(), [](const ReviewTask& a, const ReviewTask& b) {
    return a.opened_seq < b.opened_seq;
  });
  return out;
}

PipelineStats Store::stats() const {
  PipelineStats s;
  double review_total = 0;
  long review_n = 0;
  for (const auto& [id, d] : docs_) {
    if (d.is_container()) continue;
    ++s.total_docs;
    switch (d.stage) {
      case Stage::accepted:
      case Stage::in_review: ++s.ai_completed; break;
      case Stage::fallback: ++s.fallback_docs; break;
      default: ++s.in_flight_docs; break;
    }
    auto t = tasks_.find(id);
    if (t != tasks_.end()) {
      ++s.reviewed_docs;
      if (auto secs = t->second.review_seconds()) {
        review_total += *secs;
        ++review_n;
      }
    }
  }
  if (s.total_docs > 0) {
    double n = static_cast<double>(s.total_docs);
    s.automation_rate = static_cast<double>(s.ai_completed) / n;
    s.review_rate = static_cast<double>(s.reviewed_docs) / n;
  }
  if (review_n > 0) s.avg_review_seconds = review_total / static_cast<double>(review_n);
  return s;
}

json Store::task_json(const ReviewTask& t) const {
  json j{{"doc_id", t.doc_id},
         {"category", t.category.str()},
         {"status", t.status},
         {"opened_seq", t.opened_seq},
         {"opened_at", t.opened_at},
         {"resolved_at", t.resolved_at.empty() ? json(nullptr) : json(t.resolved_at)},
         {"corrections", t.corrections},
         {"confirmations", t.confirmations},
         {"inheritance_updates", t.inheritance_updates}};
  auto secs = t.review_seconds();
  j["review_seconds"] = secs ? json(*secs) : json(nullptr);
  if (const PipelineState* d = doc(t.doc_id)) {
    j["stage"] = d->stage;
    j["prompt_version"] = d->prompt_version;
    j["reasons"] = d->validation ? json(d->validation->routing.reasons) : json::array();
  }
  return j;
}

json Store::queue_json(std::optional<TaskStatus> status) const {
  json out = json::array();
  for (const auto& t : queue(status)) out.push_back(task_json(t));
  return out;
}

json Store::document_json(const std::string& id, const PipelineConfig& config) const {
  const PipelineState* d = doc(id);
  if (!d) throw NotFoundError("no document " + id);
  json j{{"doc_id", d->doc_id},
         {"stage", d->stage},
         {"parent", d->parent ? json(*d->parent) : json(nullptr)},
         {"source_name", d->source_name},
         {"category", d->category},
         {"prompt_version", d->prompt_version},
         {"inheritance_round", d->inheritance_round},
         {"notes", d->notes},
         {"split_ambiguous", d->split_ambiguous},
         {"extraction_failed", d->extraction_failed},
         {"extraction", records_json(d->extraction)}};
  if (d->is_container()) {
    json units = json::array();
    for (const auto& u : d->units) units.push_back(u);
    j["units"] = units;
  }
  j["markdown"] = d->parsed ? json(d->parsed->markdown) : json(nullptr);
  j["parsed"] = d->parsed ? json(*d->parsed) : json(nullptr);
  j["validation"] = d->validation ? json(*d->validation) : json(nullptr);

  // Per-field review hints: raw vs normalized, effective threshold, and
  // whether the field needs a reviewer's attention.
  std::set<std::string> failing;
  if (d->validation)
    for (const auto& o : d->validation->outcomes)
      if (o.status == CheckStatus::fail)
        failing.insert(o.affected_fields.begin(), o.affected_fields.end());
  json fields = json::array();
  const CategoryKey category = d->category.key();
  for (const auto& r : d->extraction) {
    FieldValue v = r.chosen;
    if (d->validation)
      for (const auto& a : d->validation->adjusted)
        if (a.field == r.field) v.confidence = a.confidence;
    double threshold = config.threshold_for(category, r.field);
    bool attention = r.flagged || v.missing || v.confidence < threshold || failing.count(r.field);
    fields.push_back({{"field", r.field},
                      {"raw", v.raw},
                      {"normalized", v.normalized},
                      {"missing", v.missing},
                      {"confidence", v.confidence},
                      {"threshold", threshold},
                      {"agreement", r.agreement},
                      {"flagged", r.flagged},
                      {"failed_check", failing.count(r.field) > 0},
                      {"needs_attention", attention},
                      {"backend_id", v.backend_id},
                      {"prompt_version", v.prompt_version}});
  }
  j["fields"] = fields;
  auto t = tasks_.find(id);
  j["task"] = t == tasks_.end() ? json(nullptr) : task_json(t->second);
  return j;
}

json Store::prompt_versions_json(const CategoryKey& category) const {
  json versions = json::array();
  for (const auto& v : prompts_.versions(category)) versions.push_back(v);
  return json{{"category", category.str()},
              {"head", prompts_.head(category).version_id()},
              {"versions", versions}};
}

json Store::prompt_heads_json() const {
  json out = json::object();
  for (const auto& c : prompts_.categories()) out[c.str()] = prompts_.head(c).version_id();
  return out;
}

}  // namespace madp
