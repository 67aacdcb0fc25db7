#pragma once

// Corpus metrics: document accuracy, field-level precision/recall/F1,
// intervention rate, per-category accuracy sums and token reduction.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madp/types.hpp"

namespace madp::evaluation {

struct GroundTruth {
  std::string doc_id;
  CategoryKey category;
  /// nullopt marks a field that is explicitly absent from the document.
  std::map<std::string, std::optional<std::string>> fields;

  bool operator==(const GroundTruth&) const = default;
};

void to_json(json& j, const GroundTruth& g);
void from_json(const json& j, GroundTruth& g);

struct FieldCounts {
  long tp = 0, fp = 0, fn = 0;

  FieldCounts& operator+=(const FieldCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const FieldCounts&) const = default;
};

struct Prf {
  FieldCounts counts;
  double precision = 0, recall = 0, f1 = 0;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each 0 when undefined.
Prf prf(const FieldCounts& c);

struct DocScore {
  std::string doc_id;
  CategoryKey category;
  std::map<std::string, FieldCounts> fields;
  bool doc_correct = false;
};

/// Match on canonical values. A wrong value counts as fp and fn. The document
/// is correct iff every required field matches (or is absent on both sides).
/// Throws ValidationError when truth and schema disagree on the field set.
DocScore score_document(const std::vector<FieldValue>& extracted, const GroundTruth& truth,
                        const Schema& schema);

/// Sum over categories of the fraction of correct documents. Throws
/// ValidationError for an empty input.
double categories_ok(const std::vector<DocScore>& scores);
std::size_t category_count(const std::vector<DocScore>& scores);

/// One processed document as the evaluator sees it.
struct DocRun {
  std::string doc_id;
  DocType doc_type = DocType::other;
  std::vector<FieldValue> fields;  // final values
  bool reviewed = false;           // routed to human review
  double seconds = 0;
  long raw_tokens = 0;
  long parsed_tokens = 0;
};

struct EvalReport {
  std::string label;
  std::size_t doc_count = 0;
  double doc_accuracy = 0;
  std::map<std::string, Prf> per_field;
  Prf micro;
  double intervention_rate = 0;
  double categories_ok = 0;
  std::size_t category_count = 0;
  double mean_seconds_per_doc = 0;
  double token_reduction_pct = 0;
  std::vector<std::string> incorrect_docs;
  std::vector<std::string> unscored_docs;  // runs without ground truth
};

/// Scores every run that has ground truth; a truth without a run counts as a
/// document with every field missing.
EvalReport corpus_report(const std::vector<DocRun>& runs,
                         const std::vector<GroundTruth>& truths,
                         const std::map<DocType, Schema>& schemas,
                         const std::string& label = "full");

json to_json(const EvalReport& r);
/// Accuracy / categories table followed by a precision / recall / F1 table.
std::string render_markdown(const std::vector<EvalReport>& reports);

}  // namespace madp::evaluation
