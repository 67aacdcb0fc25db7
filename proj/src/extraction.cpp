#include "madp/extraction.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "madp/normalize.hpp"

namespace madp::extraction {

namespace {

const char* kOutputFormat =
    "Return one JSON object and nothing else. Each key is a field name from "
    "the list above; each value is an object {\"value\": <string, or null when "
    "absent>, \"confidence\": <number between 0 and 1>}. line_items values are "
    "arrays of {\"description\", \"quantity\", \"unit_price\", \"line_total\"}.";

const char* kMissingInstructions =
    "If a field does not appear in the document, return null with confidence "
    "0; never guess or invent a value. If several candidates conflict, return "
    "the one printed closest to its label and lower the confidence. Copy "
    "amounts and identifiers exactly as printed.";

const char* kRepairReminder =
    "Your previous answer was not valid JSON. Answer again with a single JSON "
    "object exactly as specified in the output format section.";

std::string describe_field(const FieldSchema& f) {
  std::string line = "- " + f.name + " (" + to_string(f.kind) + ", " +
                     (f.required ? "required" : "optional");
  if (f.admissible_values && !f.admissible_values->empty()) {
    line += "; one of:";
    for (const auto& v : *f.admissible_values) line += " " + v;
  }
  return line + ")";
}

std::string value_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

}  // namespace

PromptBundle assemble_prompt(const Schema& schema, const ParsedDoc& parsed,
                             const PromptVersion& version,
                             const CategoryKey& doc_category,
                             std::size_t max_examples) {
  validate_schema(schema);
  if (!(version.category == doc_category))
    throw ValidationError("prompt version " + version.version_id() + " belongs to " +
                          version.category.str() + ", not " + doc_category.str());
  PromptBundle p;
  p.category = version.category;
  p.version_id = version.version_id();

  std::string type_name = to_string(version.category.doc_type);
  std::replace(type_name.begin(), type_name.end(), '_', ' ');
  p.doc_type_statement = "You are extracting structured metadata from a " +
                         type_name + " issued by supplier " +
                         version.category.supplier_id + ".";

  for (const auto& f : schema) p.field_schema += describe_field(f) + "\n";

  p.output_format = kOutputFormat;
  for (const auto& line : version.instruction_lines) p.output_format += "\n- " + line;

  std::size_t first = version.examples.size() > max_examples
                          ? version.examples.size() - max_examples
                          : 0;
  p.examples.assign(version.examples.begin() + static_cast<long>(first),
                    version.examples.end());
  p.missing_instructions = kMissingInstructions;

  std::ostringstream out;
  out << "### Document type\n" << p.doc_type_statement << "\n\n";
  out << "### Fields\n" << p.field_schema << "\n";
  out << "### Output format\n" << p.output_format << "\n\n";
  if (!p.examples.empty()) {
    out << "### Examples\n";
    for (std::size_t i = 0; i < p.examples.size(); ++i) {
      const auto& ex = p.examples[i];
      out << "Example " << (i + 1) << " (" << ex.field << "):\n"
          << ex.excerpt << "\n=> " << json(ex.value).dump() << "\n\n";
    }
  }
  out << "### Missing or ambiguous information\n" << p.missing_instructions << "\n\n";
  out << "### Document\n" << parsed.markdown << "\n";
  p.rendered_text = out.str();
  return p;
}

std::string ExtractionRequest::text() const {
  std::string t = prompt ? prompt->rendered_text : std::string{};
  if (repair) t += "\n" + std::string(kRepairReminder) + "\n";
  return t;
}

// --- backends --------------------------------------------------------------

HttpBackend::HttpBackend(std::string id, std::unique_ptr<ModelEndpoint> endpoint,
                         int max_tokens)
    : id_(std::move(id)), endpoint_(std::move(endpoint)), max_tokens_(max_tokens) {}

std::string HttpBackend::complete(const ExtractionRequest& request) {
  json res = endpoint_->post(
      {{"prompt", request.text()}, {"max_tokens", max_tokens_}, {"temperature", 0}});
  if (!res.is_object() || !res.contains("text") || !res["text"].is_string())
    throw AdapterError(id_ + ": completion response lacks text");
  return res["text"].get<std::string>();
}

ScriptedBackend::ScriptedBackend(std::string id, std::filesystem::path dir)
    : id_(std::move(id)), dir_(std::move(dir)) {}

const json* ScriptedBackend::sidecar(const std::string& doc_id) {
  auto it = cache_.find(doc_id);
  if (it == cache_.end()) {
    json j = nullptr;
    std::ifstream in(dir_ / (doc_id + ".json"));
    if (in) {
      j = json::parse(in, nullptr, false);
      if (j.is_discarded()) throw AdapterError("sidecar for " + doc_id + " is not JSON");
    }
    it = cache_.emplace(doc_id, std::move(j)).first;
  }
  return it->second.is_null() ? nullptr : &it->second;
}

std::string ScriptedBackend::complete(const ExtractionRequest& request) {
  const std::string version = request.prompt ? request.prompt->version_id : "";
  json answer;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const json* sc = sidecar(request.doc_id);
    if (!sc) throw RetriableError(id_ + ": no scripted answers for " + request.doc_id);
    const json& backends = sc->at("backends");
    const json* mine = nullptr;
    if (backends.contains(id_)) mine = &backends.at(id_);
    else if (backends.contains("*")) mine = &backends.at("*");
    if (!mine) throw RetriableError(id_ + ": not scripted for " + request.doc_id);
    const json* by_version = nullptr;
    if (mine->contains(version)) by_version = &mine->at(version);
    else if (mine->contains("*")) by_version = &mine->at("*");
    if (!by_version)
      throw RetriableError(id_ + ": no answer for " + request.doc_id + "@" + version);
    int call = calls_[request.doc_id + "@" + version]++;
    if (by_version->is_array()) {
      if (by_version->empty()) throw AdapterError("empty scripted answer list");
      auto idx = std::min<std::size_t>(static_cast<std::size_t>(call), by_version->size() - 1);
      answer = (*by_version)[idx];
    } else {
      answer = *by_version;
    }
  }

  if (answer.contains("delay_ms"))
    std::this_thread::sleep_for(std::chrono::milliseconds(answer["delay_ms"].get<int>()));
  if (answer.contains("error"))
    throw RetriableError(id_ + ": " + answer["error"].get<std::string>());
  if (answer.contains("raw")) return answer["raw"].get<std::string>();

  const std::string haystack = collapse_whitespace(request.text());
  json out = json::object();
  const json fields = answer.value("fields", json::object());
  for (const auto& [name, spec] : fields.items()) {
    const json* chosen = &spec;
    if (spec.contains("evidence")) {
      std::string needle = collapse_whitespace(spec["evidence"].get<std::string>());
      if (haystack.find(needle) == std::string::npos) {
        if (!spec.contains("otherwise")) continue;
        chosen = &spec["otherwise"];
      }
    }
    if (!chosen->is_object()) continue;
    out[name] = {{"value", chosen->value("value", json(nullptr))},
                 {"confidence", chosen->value("confidence", 0.0)}};
  }
  return out.dump();
}

std::vector<std::shared_ptr<Backend>> make_backends(const std::vector<BackendSpec>& specs) {
  std::vector<std::shared_ptr<Backend>> out;
  for (const auto& s : specs) {
    if (s.kind == "scripted") {
      out.push_back(std::make_shared<ScriptedBackend>(s.backend_id, s.endpoint));
    } else if (s.kind == "http") {
      out.push_back(std::make_shared<HttpBackend>(
          s.backend_id,
          std::make_unique<HttpEndpoint>(s.endpoint, std::chrono::milliseconds(s.timeout_ms))));
    } else {
      throw ValidationError("unknown backend kind " + s.kind);
    }
  }
  return out;
}

// --- extraction ------------------------------------------------------------

std::optional<std::vector<FieldValue>> parse_answer(const std::string& text,
                                                    const Schema& schema,
                                                    const std::string& backend_id,
                                                    const std::string& prompt_version) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;

  std::vector<FieldValue> out;
  for (const auto& f : schema) {
    FieldValue v;
    v.field = f.name;
    v.backend_id = backend_id;
    v.prompt_version = prompt_version;
    v.missing = true;
    auto it = j.find(f.name);
    if (it != j.end() && it->is_object()) {
      const json& value = it->contains("value") ? (*it)["value"] : json(nullptr);
      std::string raw = f.kind == FieldKind::text ? trim(value_text(value))
                                                  : value_text(value);
      double conf = 0.0;
      if (auto c = it->find("confidence"); c != it->end() && c->is_number())
        conf = std::clamp(c->get<double>(), 0.0, 1.0);
      if (!value.is_null() && !trim(raw).empty()) {
        v.missing = false;
        v.raw = raw;
        v.normalized = normalize_value(f.kind, raw);
        v.confidence = conf;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

ExtractResult extract(const PromptBundle& prompt, Backend& backend,
                      const Schema& schema, const std::string& doc_id) {
  ExtractResult result;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ExtractionRequest req{doc_id, &prompt, attempt > 0};
    ++result.attempts;
    std::string text = backend.complete(req);
    auto values = parse_answer(text, schema, backend.id(), prompt.version_id);
    if (values) {
      result.values = std::move(*values);
      return result;
    }
  }
  result.failed = true;
  result.failure_reason = backend.id() + ": answer was not JSON after a repair attempt";
  return result;
}

std::vector<ConsensusRecord> consensus(
    const std::vector<std::pair<std::string, std::vector<FieldValue>>>& results,
    const Schema& schema) {
  if (results.empty()) throw ValidationError("consensus needs at least one result");

  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& f : schema)
    if (seen.insert(f.name).second) order.push_back(f.name);
  std::set<std::string> extras;
  for (const auto& [_, values] : results)
    for (const auto& v : values)
      if (!seen.count(v.field)) extras.insert(v.field);
  order.insert(order.end(), extras.begin(), extras.end());

  auto better = [](const std::pair<std::string, const FieldValue*>& a,
                   const std::pair<std::string, const FieldValue*>& b) {
    if (a.second->confidence != b.second->confidence)
      return a.second->confidence > b.second->confidence;
    return a.first < b.first;
  };

  std::vector<ConsensusRecord> out;
  for (const auto& name : order) {
    const FieldSchema* fs = find_field(schema, name);
    FieldKind kind = fs ? fs->kind : FieldKind::text;

    std::vector<std::pair<std::string, const FieldValue*>> votes;
    for (const auto& [backend, values] : results)
      for (const auto& v : values)
        if (v.field == name) votes.emplace_back(backend, &v);
    if (votes.empty()) continue;
    std::sort(votes.begin(), votes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    ConsensusRecord rec;
    rec.field = name;
    if (votes.size() == 1) {
      rec.chosen = *votes.front().second;
      rec.agreement = Agreement::single;
      out.push_back(std::move(rec));
      continue;
    }

    std::map<std::string, std::vector<std::pair<std::string, const FieldValue*>>> groups;
    for (const auto& v : votes) groups[equality_key(kind, *v.second)].push_back(v);

    auto best_of = [&](const auto& group) {
      return *std::min_element(group.begin(), group.end(), better);
    };

    if (groups.size() == 1) {
      const auto& group = groups.begin()->second;
      rec.chosen = *best_of(group).second;
      double miss = 1.0;
      for (const auto& v : group) miss *= 1.0 - v.second->confidence;
      rec.chosen.confidence = std::min(kConsensusCap, 1.0 - miss);
      rec.agreement = Agreement::unanimous;
    } else {
      const std::vector<std::pair<std::string, const FieldValue*>>* largest = nullptr;
      for (const auto& [_, g] : groups)
        if (!largest || g.size() > largest->size()) largest = &g;
      if (kind != FieldKind::line_items && largest->size() * 2 > votes.size()) {
        rec.chosen = *best_of(*largest).second;
        rec.agreement = Agreement::majority;
      } else {
        rec.chosen = *best_of(votes).second;
        rec.agreement = Agreement::split;
        rec.flagged = true;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

ParallelResult extract_parallel(const PromptBundle& prompt,
                                const std::vector<std::shared_ptr<Backend>>& backends,
                                const Schema& schema, const std::string& doc_id,
                                std::chrono::milliseconds timeout) {
  struct Slot {
    bool done = false;
    std::optional<ExtractResult> result;
    std::string error;
  };
  struct Shared {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<Slot> slots;
    PromptBundle prompt;
    Schema schema;
  };
  auto shared = std::make_shared<Shared>();
  shared->slots.resize(backends.size());
  shared->prompt = prompt;
  shared->schema = schema;

  // Workers are detached so a hung backend cannot hold up the join; they
  // keep the shared state alive until they finish.
  for (std::size_t i = 0; i < backends.size(); ++i) {
    std::thread([shared, backend = backends[i], i, doc_id] {
      Slot slot;
      try {
        slot.result = extract(shared->prompt, *backend, shared->schema, doc_id);
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
      slot.done = true;
      std::lock_guard<std::mutex> lock(shared->mu);
      shared->slots[i] = std::move(slot);
      shared->cv.notify_all();
    }).detach();
  }

  std::vector<Slot> slots;
  {
    std::unique_lock<std::mutex> lock(shared->mu);
    shared->cv.wait_for(lock, timeout, [&] {
      return std::all_of(shared->slots.begin(), shared->slots.end(),
                         [](const Slot& s) { return s.done; });
    });
    slots = shared->slots;
  }

  ParallelResult out;
  std::vector<std::pair<std::string, std::vector<FieldValue>>> results;
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < backends.size(); ++i) {
    const auto& id = backends[i]->id();
    const Slot& s = slots[i];
    if (!s.done) {
      out.absent.push_back(id);
      failures.push_back(id + ": timed out");
    } else if (!s.result) {
      out.absent.push_back(id);
      failures.push_back(s.error);
    } else if (s.result->failed) {
      out.absent.push_back(id);
      failures.push_back(s.result->failure_reason);
    } else {
      out.responding.push_back(id);
      results.emplace_back(id, s.result->values);
    }
  }
  if (results.empty()) {
    out.failed = true;
    out.failure_reason = "extraction failed";
    for (const auto& f : failures) out.failure_reason += "; " + f;
    return out;
  }
  out.records = consensus(results, schema);
  return out;
}

}  // namespace madp::extraction
