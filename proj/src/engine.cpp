#include "madp/engine.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "madp/normalize.hpp"
#include "madp/parser.hpp"
#include "madp/splitter.hpp"
#include "madp/validator.hpp"

namespace madp {

namespace {

FieldSchema field(std::string name, FieldKind kind, bool required) {
  FieldSchema f;
  f.name = std::move(name);
  f.kind = kind;
  f.required = required;
  return f;
}

json output_json(const StageOutput& out) {
  json j;
  to_json(j, out);
  return j;
}

DocBundle bundle_of(const PipelineState& doc) {
  return {doc.doc_id, doc.source_name, doc.pages, doc.received_at};
}

std::string padded(std::size_t n) {
  std::ostringstream out;
  out << std::setw(4) << std::setfill('0') << n;
  return out.str();
}

}  // namespace

std::map<DocType, Schema> default_schemas() {
  using K = FieldKind;
  return {
      {DocType::invoice,
       {field("invoice_number", K::text, true), field("invoice_date", K::date, true),
        field("due_date", K::date, false), field("supplier_name", K::text, true),
        field("supplier_vat", K::tax_id, true), field("customer_name", K::text, false),
        field("currency", K::currency_code, true), field("subtotal", K::money, true),
        field("vat_rate", K::percentage, true), field("tax_amount", K::money, true),
        field("total_amount", K::money, true), field("line_items", K::line_items, false)}},
      {DocType::delivery_note,
       {field("delivery_number", K::text, true), field("delivery_date", K::date, true),
        field("supplier_name", K::text, true), field("supplier_vat", K::tax_id, false),
        field("order_reference", K::text, false), field("line_items", K::line_items, true),
        field("total_quantity", K::quantity, true)}},
  };
}

const std::set<std::string>& ablation_stages() {
  static const std::set<std::string> kStages{"classifier", "splitter", "parser", "validator"};
  return kStages;
}

std::set<std::string> parse_ablation(const std::string& csv) {
  std::set<std::string> out;
  std::istringstream in(csv);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (item.empty()) continue;
    if (!ablation_stages().count(item))
      throw ValidationError("unknown ablation stage '" + item +
                            "' (expected classifier, splitter, parser or validator)");
    out.insert(item);
  }
  return out;
}

struct Engine::Step {
  std::string kind;
  json payload;
};

Engine::Engine(EngineOptions options)
    : options_(std::move(options)),
      log_(options_.store_dir.empty() ? std::filesystem::path{}
                                      : options_.store_dir / "events.jsonl",
           options_.clock) {
  validate_config(options_.config);
  const auto& cfg = options_.config;
  if (options_.signatures.empty() && cfg.signatures_path)
    options_.signatures = classificator::load_signatures(*cfg.signatures_path);
  if (options_.backends.empty()) options_.backends = extraction::make_backends(cfg.backends);
  if (!options_.classifier_endpoint && cfg.classifier_endpoint)
    options_.classifier_endpoint =
        std::make_shared<HttpEndpoint>(*cfg.classifier_endpoint, std::chrono::seconds(30));
  if (!options_.parser_endpoint && cfg.parser_endpoint)
    options_.parser_endpoint =
        std::make_shared<HttpEndpoint>(*cfg.parser_endpoint, std::chrono::seconds(30));
  int timeout = 0;
  for (const auto& b : cfg.backends) timeout = std::max(timeout, b.timeout_ms);
  if (timeout > 0) backend_timeout_ = std::chrono::milliseconds(timeout);
  if (!options_.retry.sleep) options_.retry = RetryPolicy::standard();
  if (options_.jobs == 0) options_.jobs = 1;

  store_ = Store::replay(log_.snapshot());
  if (!options_.store_dir.empty()) {
    feedback_log_.emplace(options_.store_dir / "feedback.jsonl");
    disk_prompts_.emplace(options_.store_dir / "prompts");
    for (const auto& c : store_.prompts().categories())
      for (const auto& v : store_.prompts().versions(c)) disk_prompts_->commit(v);
  }
}

Engine::~Engine() = default;

Event Engine::append(const std::string& doc_id, const std::string& kind, const json& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  return log_.append(doc_id, kind, payload, [&](const Event& e) {
    store_.apply(e);
    if (hook_) hook_(e, store_);
  });
}

bool Engine::commit(const std::string& doc_id, std::uint64_t expected_seq,
                    const std::string& kind, const json& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  if (store_.doc_seq(doc_id) != expected_seq) return false;
  log_.append(doc_id, kind, payload, [&](const Event& e) {
    store_.apply(e);
    if (hook_) hook_(e, store_);
  });
  return true;
}

std::optional<std::pair<PipelineState, std::uint64_t>> Engine::doc_at(
    const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const PipelineState* d = store_.doc(id);
  if (!d) return std::nullopt;
  return std::make_pair(*d, store_.doc_seq(id));
}

void Engine::set_event_hook(std::function<void(const Event&, const Store&)> hook) {
  std::lock_guard<std::mutex> lock(mu_);
  hook_ = std::move(hook);
}

const Schema* Engine::schema_for(const PipelineState& doc) const {
  DocType t = doc.category.doc_type;
  if (t == DocType::other && options_.ablate.count("classifier")) t = DocType::invoice;
  auto it = options_.schemas.find(t);
  return it == options_.schemas.end() ? nullptr : &it->second;
}

void Engine::ingest(const DocBundle& bundle) {
  validate_bundle(bundle);
  append(bundle.doc_id, event_kind::kIngested, bundle);
}

std::vector<std::string> Engine::ingest_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ValidationError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> added;
  for (const auto& f : files) {
    std::ifstream in(f);
    DocBundle b;
    try {
      b = json::parse(in).get<DocBundle>();
    } catch (const json::parse_error& e) {
      throw ParseError(f.string() + ": " + e.what(), 0);
    } catch (const json::exception& e) {
      throw ValidationError(f.string() + ": " + e.what());
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (store_.doc(b.doc_id)) continue;
    }
    ingest(b);
    added.push_back(b.doc_id);
  }
  return added;
}

ValidationReport Engine::validate_doc(const PipelineState& doc,
                                      const std::vector<ConsensusRecord>& records) const {
  std::vector<std::string> extra;
  if (doc.extraction_failed)
    extra.push_back("extraction failed: " + doc.extraction_failure);
  if (doc.split_ambiguous)
    extra.push_back("splitter found no document boundary in a long bundle");
  if (options_.ablate.count("validator")) {
    ValidationReport r;
    r.doc_id = doc.doc_id;
    r.adjusted = validator::chosen_values(records);
    r.routing.reasons = extra;
    r.routing.route = extra.empty() ? Route::auto_accept : Route::human_review;
    return r;
  }
  const Schema* schema = schema_for(doc);
  static const Schema kEmpty;
  return validator::validate(doc.doc_id, records, schema ? *schema : kEmpty,
                             doc.category.key(), options_.config, extra);
}

Engine::Step Engine::next_step(const PipelineState& doc) {
  const auto& cfg = options_.config;
  switch (doc.stage) {
    case Stage::ingested: {
      ClassifierOutput out;
      for (const auto& page : doc.pages) {
        if (options_.ablate.count("classifier")) {
          out.page_labels.push_back(CategoryLabel::unknown());
        } else if (options_.classifier_endpoint) {
          auto ext = classificator::classify_external(page, std::nullopt,
                                                      *options_.classifier_endpoint, cfg,
                                                      options_.retry);
          if (ext.fallback) return {"fallback", output_json(FallbackOutput{ext.fallback->reasons})};
          out.page_labels.push_back(*ext.label);
        } else if (!options_.signatures.empty()) {
          out.page_labels.push_back(classificator::classify(page, options_.signatures, cfg));
        } else {
          out.page_labels.push_back(CategoryLabel::unknown());
        }
      }
      return {"classified", output_json(out)};
    }
    case Stage::classified: {
      SplitterOutput out;
      if (options_.ablate.count("splitter")) {
        out.units.push_back({doc.doc_id, 0, static_cast<int>(doc.pages.size()) - 1,
                             doc.page_labels.empty() ? CategoryLabel::unknown()
                                                     : doc.page_labels.front()});
      } else {
        auto split = splitter::detect_boundaries(bundle_of(doc), doc.page_labels, cfg);
        out.units = std::move(split.units);
        out.ambiguous = split.ambiguous;
      }
      return {"split", output_json(out)};
    }
    case Stage::split: {
      if (!schema_for(doc))
        return {"fallback",
                output_json(FallbackOutput{{"unrecognised document category " +
                                            doc.category.key().str()}})};
      ParserConfig pcfg;
      {
        std::lock_guard<std::mutex> lock(mu_);
        pcfg = store_.parser_config();
      }
      ParserOutput out;
      if (options_.ablate.count("parser")) {
        out.parsed = parser::passthrough(doc.pages, pcfg, doc.doc_id);
      } else if (options_.parser_endpoint) {
        auto ext = parser::parse_external(doc.pages, doc.doc_id, *options_.parser_endpoint, pcfg,
                                          options_.retry);
        out.parsed = std::move(ext.parsed);
        out.used_fallback_renderer = ext.fell_back;
      } else {
        out.parsed = parser::render_markdown(doc.pages, pcfg, doc.doc_id);
      }
      return {"parsed", output_json(out)};
    }
    case Stage::parsed: {
      const Schema& schema = *schema_for(doc);
      const CategoryKey category = doc.category.key();
      PromptVersion head;
      {
        std::lock_guard<std::mutex> lock(mu_);
        head = store_.prompts().head(category);
      }
      ExtractionOutput out;
      out.prompt_version = head.version_id();
      if (options_.backends.empty()) {
        out.failed = true;
        out.failure_reason = "no extraction backend configured";
      } else {
        auto prompt =
            extraction::assemble_prompt(schema, *doc.parsed, head, category, cfg.max_examples);
        auto res = extraction::extract_parallel(prompt, options_.backends, schema, doc.doc_id,
                                                backend_timeout_);
        out.records = std::move(res.records);
        out.failed = res.failed;
        out.failure_reason = res.failure_reason;
      }
      return {"extracted", output_json(out)};
    }
    case Stage::extracted:
      return {"validated", output_json(ValidationOutput{validate_doc(doc, doc.extraction)})};
    case Stage::validated:
      return {"finalized", output_json(Finalize{})};
    default:
      break;
  }
  throw StateMismatchError("document " + doc.doc_id + " has no pending stage");
}

void Engine::run_document(const std::string& doc_id) {
  auto start = std::chrono::steady_clock::now();
  bool leaf_work = false;
  for (;;) {
    auto snap = doc_at(doc_id);
    if (!snap) throw NotFoundError("no document " + doc_id);
    const auto& [doc, seq] = *snap;
    if (doc.is_container()) {
      for (const auto& u : doc.units) {
        if (!doc_at(u.unit_id))
          commit(u.unit_id, 0, event_kind::kUnit, json{{"parent", doc_id}, {"unit", u}});
        run_document(u.unit_id);
      }
      return;
    }
    if (doc.is_terminal()) break;
    leaf_work = true;
    Step step = next_step(doc);
    commit(doc_id, seq, step.kind, step.payload);
  }
  if (leaf_work) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard<std::mutex> lock(mu_);
    durations_[doc_id] += secs;
  }
}

std::size_t Engine::run() {
  std::vector<std::string> roots;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& id : store_.order()) {
      const PipelineState* d = store_.doc(id);
      if (!d->parent) roots.push_back(id);
    }
  }
  auto before = snapshot().last_seq();
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= roots.size()) return;
      try {
        run_document(roots[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::size_t n = std::min(options_.jobs, std::max<std::size_t>(roots.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  // documents whose state changed during this run
  std::set<std::string> touched;
  for (const auto& e : log_.snapshot())
    if (e.seq > before && !e.doc_id.empty()) touched.insert(e.doc_id);
  return touched.size();
}

json Engine::correct(const std::string& doc_id, const std::string& field_name,
                     const std::string& value, const std::string& reviewer_id) {
  std::lock_guard<std::mutex> review(review_mu_);
  auto snap = doc_at(doc_id);
  if (!snap || snap->first.is_container()) throw NotFoundError("no document " + doc_id);
  const PipelineState doc = snap->first;
  std::size_t feedback_count;
  PromptVersion head;
  ParserConfig pcfg;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto t = store_.tasks().find(doc_id);
    if (t == store_.tasks().end())
      throw ConflictError("document " + doc_id + " has no review task");
    if (t->second.status == TaskStatus::resolved)
      throw ConflictError("review task for " + doc_id + " is already resolved");
    feedback_count = store_.feedback().size();
    head = store_.prompts().head(doc.category.key());
    pcfg = store_.parser_config();
  }
  const Schema* schema = schema_for(doc);
  if (!schema) throw ValidationError("document " + doc_id + " has no field schema");
  const FieldSchema* fs = find_field(*schema, field_name);
  if (!fs) throw ValidationError("field '" + field_name + "' is not in the schema");
  std::string normalized = normalize_value(fs->kind, value);
  if (fs->kind != FieldKind::text && normalized.empty())
    throw ValidationError("'" + value + "' is not a valid " + to_string(fs->kind));

  CorrectionFeedback fb;
  fb.feedback_id = "fb-" + padded(feedback_count + 1);
  fb.doc_id = doc_id;
  fb.field = field_name;
  const ConsensusRecord* rec = doc.record(field_name);
  fb.original_missing = !rec || rec->chosen.missing;
  fb.original_value = fb.original_missing ? "" : rec->chosen.raw;
  fb.corrected_value = value;
  fb.doc_type = doc.category.doc_type;
  fb.supplier_id = doc.category.supplier_id;
  fb.reviewer_id = reviewer_id;
  fb.ts = options_.clock();
  pftfi::validate_feedback(fb, *schema);
  ErrorPattern pattern = pftfi::classify_error(fb, *schema);

  append(doc_id, event_kind::kFeedback, json{{"feedback", fb}, {"pattern", pattern}});
  if (feedback_log_) feedback_log_->append(fb);

  auto outcome = pftfi::apply_feedback(fb, pattern, head, pcfg,
                                       doc.parsed ? doc.parsed->markdown : std::string(),
                                       *schema, options_.config.max_examples);
  if (outcome.prompt) {
    append(doc_id, event_kind::kPromptCommitted, *outcome.prompt);
    if (disk_prompts_) disk_prompts_->commit(*outcome.prompt);
  }
  if (outcome.parser) append(doc_id, event_kind::kParserConfig, *outcome.parser);

  ConsensusRecord corrected;
  corrected.field = field_name;
  corrected.agreement = Agreement::single;
  corrected.chosen.field = field_name;
  corrected.chosen.raw = value;
  corrected.chosen.normalized = normalized;
  corrected.chosen.confidence = 1.0;
  corrected.chosen.backend_id = "human:" + reviewer_id;
  corrected.chosen.prompt_version = outcome.prompt ? outcome.prompt->version_id()
                                                   : head.version_id();
  {
    auto now = doc_at(doc_id);
    PipelineState current = now->first;
    std::vector<ConsensusRecord> records = current.extraction;
    bool replaced = false;
    for (auto& r : records)
      if (r.field == field_name) {
        r = corrected;
        replaced = true;
      }
    if (!replaced) records.push_back(corrected);
    ReviewUpdate upd;
    upd.records = {corrected};
    upd.report = validate_doc(current, records);
    append(doc_id, "review_update", output_json(upd));
  }

  json inherited = json::array();
  if (outcome.prompt) {
    std::vector<pftfi::PendingDoc> pending;
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const auto& id : store_.order()) {
        const PipelineState& d = *store_.doc(id);
        if (d.is_container()) continue;
        if (d.stage != Stage::extracted && d.stage != Stage::in_review) continue;
        pftfi::PendingDoc p;
        p.doc_id = id;
        p.category = d.category.key();
        p.extracted = true;
        const ConsensusRecord* r = d.record(field_name);
        p.field_version = r && !r->chosen.prompt_version.empty() ? r->chosen.prompt_version
                                                                 : d.prompt_version;
        pending.push_back(std::move(p));
      }
    }
    auto tasks = pftfi::inherit(fb, *outcome.prompt, pending, doc.inheritance_round + 1);
    for (const auto& t : tasks) {
      inherited.push_back(t.doc_id);
      append(t.doc_id, event_kind::kInheritance,
             json{{"feedback_id", t.feedback_id},
                  {"field", t.field},
                  {"version_id", t.version_id},
                  {"round", t.round}});
      reextract_field(t);
    }
  }
  json view = document_json(doc_id);
  view["feedback_id"] = fb.feedback_id;
  view["error_class"] = pattern.error_class;
  view["inherited"] = inherited;
  return view;
}

void Engine::reextract_field(const pftfi::InheritanceTask& task) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    auto snap = doc_at(task.doc_id);
    if (!snap) return;
    const auto& [doc, seq] = *snap;
    if (doc.stage != Stage::extracted && doc.stage != Stage::in_review) return;
    if (!doc.parsed) return;
    const Schema* schema = schema_for(doc);
    if (!schema || options_.backends.empty()) return;
    std::optional<PromptVersion> version;
    {
      std::lock_guard<std::mutex> lock(mu_);
      version = store_.prompts().get(doc.category.key(), pftfi::version_number(task.version_id));
    }
    if (!version) return;
    auto prompt = extraction::assemble_prompt(*schema, *doc.parsed, *version,
                                              doc.category.key(),
                                              options_.config.max_examples);
    auto res = extraction::extract_parallel(prompt, options_.backends, *schema, doc.doc_id,
                                            backend_timeout_);
    if (res.failed) return;
    auto rec = std::find_if(res.records.begin(), res.records.end(),
                            [&](const ConsensusRecord& r) { return r.field == task.field; });
    if (rec == res.records.end()) return;

    ReviewUpdate upd;
    upd.records = {*rec};
    upd.prompt_version = task.version_id;
    upd.inheritance_round = task.round;
    if (doc.stage == Stage::in_review) {
      std::vector<ConsensusRecord> records = doc.extraction;
      bool replaced = false;
      for (auto& r : records)
        if (r.field == task.field) {
          r = *rec;
          replaced = true;
        }
      if (!replaced) records.push_back(*rec);
      PipelineState revalidated = doc;
      revalidated.extraction_failed = false;
      upd.report = validate_doc(revalidated, records);
      upd.auto_resolve = true;
    }
    if (commit(task.doc_id, seq, "review_update", output_json(upd))) return;
  }
}

json Engine::confirm(const std::string& doc_id, const std::string& reviewer_id) {
  std::lock_guard<std::mutex> review(review_mu_);
  auto snap = doc_at(doc_id);
  if (!snap || snap->first.is_container()) throw NotFoundError("no document " + doc_id);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto t = store_.tasks().find(doc_id);
    if (t == store_.tasks().end())
      throw ConflictError("document " + doc_id + " has no review task");
    if (t->second.status == TaskStatus::resolved)
      throw ConflictError("review task for " + doc_id + " is already resolved");
  }
  ReviewUpdate upd;
  upd.confirm = true;
  json payload = output_json(upd);
  payload["reviewer_id"] = reviewer_id;
  append(doc_id, "review_update", payload);
  return document_json(doc_id);
}

json Engine::queue_json(std::optional<TaskStatus> status) const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.queue_json(status);
}

json Engine::stats_json() const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.stats_json();
}

json Engine::document_json(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.document_json(id, options_.config);
}

json Engine::prompt_versions_json(const CategoryKey& category) const {
  std::lock_guard<std::mutex> lock(mu_);
  bool known = false;
  for (const auto& c : store_.prompts().categories()) known = known || c == category;
  for (const auto& [_, d] : store_.docs()) known = known || d.category.key() == category;
  for (const auto& s : options_.signatures) known = known || s.key() == category;
  if (!known) throw NotFoundError("no category " + category.str());
  return store_.prompt_versions_json(category);
}

json Engine::prompt_heads_json() const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_.prompt_heads_json();
}

Store Engine::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return store_;
}

std::map<std::string, double> Engine::durations() const {
  std::lock_guard<std::mutex> lock(mu_);
  return durations_;
}

}  // namespace madp
