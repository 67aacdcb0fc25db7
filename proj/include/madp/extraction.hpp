#pragma once

// Schema-driven extraction: prompt assembly, model backends, JSON answer
// validation and consensus voting across parallel backends.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "madp/config.hpp"
#include "madp/endpoint.hpp"
#include "madp/types.hpp"

namespace madp::extraction {

inline constexpr double kConsensusCap = 0.99;

struct PromptBundle {
  CategoryKey category;
  std::string version_id;
  std::string doc_type_statement;
  std::string field_schema;
  std::string output_format;
  std::vector<FewShotExample> examples;
  std::string missing_instructions;
  std::string rendered_text;
};

/// Sections in fixed order (document type, fields, output format, examples,
/// missing/ambiguity guidance) followed by the parsed document. Only the
/// newest `max_examples` examples are kept. Throws ValidationError for an
/// empty schema or a version from another category.
PromptBundle assemble_prompt(const Schema& schema, const ParsedDoc& parsed,
                             const PromptVersion& version,
                             const CategoryKey& doc_category,
                             std::size_t max_examples = 8);

struct ExtractionRequest {
  std::string doc_id;
  const PromptBundle* prompt = nullptr;
  /// Second attempt after an answer that was not JSON.
  bool repair = false;

  std::string text() const;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  /// The model's raw text answer. RetriableError for transport failures.
  virtual std::string complete(const ExtractionRequest& request) = 0;
};

/// Chat-completion-style JSON over HTTP: {prompt, max_tokens, temperature}
/// -> {text}.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string id, std::unique_ptr<ModelEndpoint> endpoint,
              int max_tokens = 2048);
  const std::string& id() const override { return id_; }
  std::string complete(const ExtractionRequest& request) override;

 private:
  std::string id_;
  std::unique_ptr<ModelEndpoint> endpoint_;
  int max_tokens_;
};

/// Answers from per-document sidecar files `<dir>/<doc_id>.json`:
///
///   {"backends": {"<backend_id>|*": {"<version_id>|*": ANSWER}}}
///
/// ANSWER is {"fields": {name: {"value", "confidence", "evidence"?,
/// "otherwise"?}}}, {"raw": text}, {"error": msg}, optionally with
/// "delay_ms", or an array of ANSWERs consumed one per call. A field with
/// "evidence" is answered only when that text occurs (whitespace-collapsed)
/// in the prompt; otherwise its "otherwise" answer, or nothing, is given.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(std::string id, std::filesystem::path dir);
  const std::string& id() const override { return id_; }
  std::string complete(const ExtractionRequest& request) override;

 private:
  const json* sidecar(const std::string& doc_id);

  std::string id_;
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, json> cache_;
  std::map<std::string, int> calls_;  // doc_id/version -> calls so far
};

std::vector<std::shared_ptr<Backend>> make_backends(const std::vector<BackendSpec>& specs);

struct ExtractResult {
  std::vector<FieldValue> values;
  bool failed = false;
  std::string failure_reason;
  int attempts = 0;
};

/// Validates the answer against the schema: unknown fields dropped, absent
/// fields emitted as missing with confidence 0, values normalized. A non-JSON
/// answer gets one repair attempt; a second one marks the result failed.
ExtractResult extract(const PromptBundle& prompt, Backend& backend,
                      const Schema& schema, const std::string& doc_id);

/// Parses one answer text; nullopt when it is not a JSON object.
std::optional<std::vector<FieldValue>> parse_answer(const std::string& text,
                                                    const Schema& schema,
                                                    const std::string& backend_id,
                                                    const std::string& prompt_version);

/// Per field: unanimous -> noisy-or confidence capped at 0.99; strict
/// majority -> majority value at the best agreeing confidence; otherwise
/// split -> highest-confidence value, flagged. One voter -> single.
/// Ties go to the lexicographically smallest backend_id. line_items fields
/// are never majority: any row mismatch splits them.
std::vector<ConsensusRecord> consensus(
    const std::vector<std::pair<std::string, std::vector<FieldValue>>>& results,
    const Schema& schema);

struct ParallelResult {
  std::vector<ConsensusRecord> records;
  std::vector<std::string> responding;  // backend ids that produced values
  std::vector<std::string> absent;      // timed out, unreachable or failed
  bool failed = false;
  std::string failure_reason;
};

/// Runs every backend concurrently and joins per document. A backend that
/// times out or fails counts as absent; consensus runs over the rest.
ParallelResult extract_parallel(const PromptBundle& prompt,
                                const std::vector<std::shared_ptr<Backend>>& backends,
                                const Schema& schema, const std::string& doc_id,
                                std::chrono::milliseconds timeout);

}  // namespace madp::extraction
