#pragma once

// Deterministic synthetic corpus: 20 supplier categories x 5 documents with
// ground truth and scripted-backend sidecars, plus the runner that pushes a
// corpus through the engine and scores it.
//
// Layout on disk:
//   bundles/<bundle_id>.json   DocBundle (standalone documents and batches)
//   truth/<doc_id>.json        GroundTruth, keyed by logical document id
//   answers/<doc_id>.json      ScriptedBackend sidecars
//   config.json                pipeline config (three scripted backends)
//   signatures.json            classifier signatures
//   manifest.json              per-document scripting and batch partitions

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "madp/config.hpp"
#include "madp/engine.hpp"
#include "madp/evaluation.hpp"

namespace madp::corpus {

/// Share of raw tokens the parser should remove on every fixture document.
inline constexpr double kTokenReductionTarget = 0.35;

struct DocSpec {
  std::string doc_id;  // unit id for documents inside a batch
  CategoryKey category;
  std::string bundle_id;
  int start_page = 0;
  int end_page = 0;
  bool two_column = false;
  std::string flag;       // low_confidence | split | arithmetic, empty when clean
  std::string scripting;  // majority | repair | backend_error, empty when plain
};

struct BatchSpec {
  std::string bundle_id;
  std::vector<LogicalUnit> units;  // the partition the splitter must recover
};

struct Corpus {
  std::uint64_t seed = 0;
  std::vector<DocBundle> bundles;
  std::vector<evaluation::GroundTruth> truths;
  std::map<std::string, json> answers;  // doc_id -> sidecar
  std::vector<DocSpec> docs;
  std::vector<BatchSpec> batches;
  std::vector<classificator::CategorySignature> signatures;
  PipelineConfig config;  // backend endpoints relative to the corpus dir
};

Corpus generate(std::uint64_t seed = 2026);
void write(const Corpus& corpus, const std::filesystem::path& dir);

struct LoadedCorpus {
  std::filesystem::path dir;
  PipelineConfig config;  // paths resolved
  std::vector<evaluation::GroundTruth> truths;
  std::vector<DocSpec> docs;
  std::vector<BatchSpec> batches;
};

/// Throws ParseError / ValidationError for a malformed corpus directory.
LoadedCorpus load(const std::filesystem::path& dir);

struct CorpusRun {
  std::vector<evaluation::DocRun> runs;
  evaluation::EvalReport report;
  Store store;
};

/// Ingests every bundle into a fresh engine (events under `store_dir`, or in
/// memory when empty), runs it to terminal states and scores the result.
CorpusRun run_corpus(const LoadedCorpus& corpus, const std::set<std::string>& ablate = {},
                     const std::filesystem::path& store_dir = {}, std::size_t jobs = 4,
                     const std::string& label = "Full pipeline");

/// Final field values of a document as the reviewer would see them.
std::vector<FieldValue> final_fields(const PipelineState& doc);

void to_json(json& j, const DocSpec& d);
void from_json(const json& j, DocSpec& d);

}  // namespace madp::corpus
