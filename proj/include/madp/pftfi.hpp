#pragma once

// Prompt fine-tuning with feedback inheritance: reviewer corrections are
// classified, turned into new prompt (or parser config) versions, and pushed
// to pending documents of the same category.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madp/types.hpp"

namespace madp::pftfi {

/// Lines of context kept on each side of the corrected value.
inline constexpr int kExcerptRadius = 2;

/// Throws ValidationError for an unknown field or a correction that does not
/// change anything (same raw text as the original).
void validate_feedback(const CorrectionFeedback& fb, const Schema& schema);

/// missing -> format (same canonical value, different text) -> layout
/// (line items) -> value.
ErrorPattern classify_error(const CorrectionFeedback& fb, const Schema& schema);

/// Non-empty markdown lines around the first line that contains `needle`
/// (or, failing that, `fallback`); the first lines when neither occurs.
std::string excerpt_around(const std::string& markdown, const std::string& needle,
                           const std::string& fallback = {}, int radius = kExcerptRadius);

/// Instruction line that states the canonical format for a field kind.
std::string format_instruction(FieldKind kind, const std::string& field);

/// "p1" -> "p2"; any other string gets "-2", "-3", ... appended or bumped.
std::string bump_parser_version(const std::string& version);

struct FeedbackOutcome {
  std::optional<PromptVersion> prompt;   // missing / format / value
  std::optional<ParserConfig> parser;    // layout
};

/// Builds (does not commit) the next version. `current` must be the
/// category head; PromptStore::commit rejects it otherwise.
FeedbackOutcome apply_feedback(const CorrectionFeedback& fb, const ErrorPattern& pattern,
                               const PromptVersion& current, const ParserConfig& parser_cfg,
                               const std::string& parsed_markdown, const Schema& schema,
                               std::size_t max_examples = 8);

/// The implicit first version of every category.
PromptVersion base_version(const CategoryKey& category);

/// Versioned prompt lineage per category. Committed versions are immutable;
/// with a directory the store mirrors every version to
/// `<dir>/<supplier>.<doc_type>/v<n>.json` plus a `HEAD` file.
class PromptStore {
 public:
  explicit PromptStore(std::filesystem::path dir = {});

  PromptVersion head(const CategoryKey& category) const;
  /// Oldest first, starting with v1.
  std::vector<PromptVersion> versions(const CategoryKey& category) const;
  std::optional<PromptVersion> get(const CategoryKey& category, int number) const;
  std::vector<CategoryKey> categories() const;

  /// Throws ConflictError unless `v` extends the current head by one.
  void commit(const PromptVersion& v);

  /// Reloads every category found under `dir`.
  static PromptStore load(const std::filesystem::path& dir);

 private:
  void mirror(const PromptVersion& v) const;

  std::filesystem::path dir_;
  std::map<CategoryKey, std::vector<PromptVersion>> lineages_;
};

/// Append-only JSONL of corrections.
class FeedbackLog {
 public:
  explicit FeedbackLog(std::filesystem::path path) : path_(std::move(path)) {}
  void append(const CorrectionFeedback& fb) const;
  std::vector<CorrectionFeedback> read() const;

 private:
  std::filesystem::path path_;
};

/// What the inheritance step needs to know about a queued document.
struct PendingDoc {
  std::string doc_id;
  CategoryKey category;
  bool extracted = false;        // has an extraction (extracted or in_review)
  std::string field_version;     // prompt version behind the corrected field
};

struct InheritanceTask {
  std::string doc_id;
  std::string field;
  std::string version_id;
  std::string feedback_id;
  int round = 1;

  bool operator==(const InheritanceTask&) const = default;
};

/// Pending documents of the correction's category, other than the corrected
/// one, whose corrected field was extracted under an older version get a
/// field-level re-extraction under `new_version`. Documents not extracted yet
/// pick up the head version on their own and need no task.
std::vector<InheritanceTask> inherit(const CorrectionFeedback& fb,
                                     const PromptVersion& new_version,
                                     const std::vector<PendingDoc>& pending, int round = 1);

/// "v7" -> 7; 0 when the id is not of that form.
int version_number(const std::string& version_id);

}  // namespace madp::pftfi
