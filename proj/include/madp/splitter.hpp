#pragma once

#include <optional>
#include <string>
#include <vector>

#include "madp/config.hpp"
#include "madp/types.hpp"

namespace madp::splitter {

struct Pagination {
  int current = 0;
  int total = 0;
  bool operator==(const Pagination&) const = default;
};

/// "Page N of M", "Pag. N/M" or a bare "N / M", case-insensitive, anywhere
/// in the footer. Requires 1 <= N <= M.
std::optional<Pagination> parse_pagination(const std::string& footer_text);

struct SplitResult {
  std::vector<LogicalUnit> units;
  /// No head signal past page 0 on a bundle longer than 10 pages.
  bool ambiguous = false;
};

/// Boundary rules for page i > 0, first match wins:
///   1. footer pagination present: boundary iff it reads current = 1;
///   2. label confidence >= split_confidence and doc_type != other;
///   3. otherwise the page continues the current unit.
/// A bundle that stays one unit keeps its doc_id; otherwise units are
/// "<doc_id>.<k>" with k from 1.
SplitResult detect_boundaries(const DocBundle& bundle,
                              const std::vector<CategoryLabel>& page_labels,
                              const PipelineConfig& config);

}  // namespace madp::splitter
