#pragma once

// Header-region document classification. The reference classifier is a
// nearest-centroid model over hashed character trigrams of the page's header
// crop; a JSON-over-HTTP adapter forwards the same crop to an external model.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "madp/config.hpp"
#include "madp/endpoint.hpp"
#include "madp/types.hpp"

namespace madp::classificator {

inline constexpr std::uint32_t kHashSpace = 1u << 16;
inline constexpr double kUnknownThreshold = 0.3;

using SparseVector = std::map<std::uint32_t, double>;

struct CategorySignature {
  std::string supplier_id;
  DocType doc_type = DocType::other;
  SparseVector centroid;  // L2-normalized
  int sample_count = 1;

  CategoryKey key() const { return {supplier_id, doc_type}; }
  bool operator==(const CategorySignature&) const = default;
};

/// Blocks whose top edge lies above `fraction` of the page height, in their
/// original order. Throws ValidationError unless 0 < fraction <= 1.
std::vector<TextBlock> crop_header(const Page& page, double fraction);

std::string header_text(const std::vector<TextBlock>& blocks);

std::uint32_t trigram_hash(std::string_view trigram);

/// Sum of per-block trigram counts; a block contributes the trigrams of its
/// lower-cased, whitespace-collapsed text padded with one space each side.
SparseVector trigram_bag(const std::vector<TextBlock>& blocks);
SparseVector l2_normalize(SparseVector v);
double cosine(const SparseVector& a, const SparseVector& b);

/// Best centroid by cosine similarity; (unknown, other, s) below 0.3 and
/// (unknown, other, 0) for a page without header text.
CategoryLabel classify(const Page& page,
                       const std::vector<CategorySignature>& signatures,
                       const PipelineConfig& config);

/// One signature per distinct (supplier, doc_type); centroid is the
/// normalized mean of the examples' normalized first-page header bags.
std::vector<CategorySignature> train_signatures(
    const std::vector<std::pair<DocBundle, CategoryLabel>>& labeled,
    double crop_fraction = 0.4);

void save_signatures(const std::filesystem::path& path,
                     const std::vector<CategorySignature>& signatures);
std::vector<CategorySignature> load_signatures(const std::filesystem::path& path);

void to_json(json& j, const CategorySignature& s);
void from_json(const json& j, CategorySignature& s);

/// Outcome of the external adapter: a label, or a fallback routing once
/// retries are exhausted.
struct ExternalClassification {
  std::optional<CategoryLabel> label;
  std::optional<RoutingDecision> fallback;
};

/// POSTs {header_text, image_ref?} and maps {supplier, doc_type, confidence}.
/// Malformed answers throw AdapterError.
ExternalClassification classify_external(const Page& page,
                                         const std::optional<std::string>& image_ref,
                                         ModelEndpoint& endpoint,
                                         const PipelineConfig& config,
                                         const RetryPolicy& policy);

}  // namespace madp::classificator
