#pragma once

// Page layout -> hierarchical markdown. Reading order comes from two-level
// gap clustering: full-width blocks cut the page into horizontal bands, and
// inside a band blocks are grouped into columns wherever consecutive
// x-centres are more than column_gap_threshold apart.

#include <optional>
#include <string>
#include <vector>

#include "madp/endpoint.hpp"
#include "madp/types.hpp"

namespace madp::parser {

/// Blocks wider than this span the page and separate bands.
inline constexpr double kSpanningWidth = 0.6;
/// Blocks repeated from an earlier page of the unit inside this top margin
/// are running headers and are rendered once.
inline constexpr double kRunningHeaderBand = 0.12;

std::vector<TextBlock> reading_order(std::vector<TextBlock> blocks,
                                     const ParserConfig& config);

/// Number of whitespace-separated tokens.
long count_tokens(const std::string& text);
/// Tokens of rendered markdown that are not pure markup (pipes, rule
/// dashes, alignment colons, heading hashes).
long count_content_tokens(const std::string& markdown);

/// Raw-OCR baseline: every block in stored order, table cells row-major and
/// footers, space-joined.
std::string naive_concatenation(const std::vector<Page>& pages);

std::string render_pipe_table(const TableGrid& table);

ParsedDoc render_markdown(const std::vector<Page>& pages, const ParserConfig& config,
                          const std::string& unit_id = {});

/// Parser-ablation passthrough: the naive concatenation as the "markdown".
ParsedDoc passthrough(const std::vector<Page>& pages, const ParserConfig& config,
                      const std::string& unit_id = {});

struct ExternalParse {
  ParsedDoc parsed;
  bool fell_back = false;
  std::string reason;
};

/// POSTs {doc_id, pages} and expects {markdown}. Exhausted retries, malformed
/// answers and empty markdown all degrade to render_markdown.
ExternalParse parse_external(const std::vector<Page>& pages, const std::string& unit_id,
                             ModelEndpoint& endpoint, const ParserConfig& config,
                             const RetryPolicy& policy);

}  // namespace madp::parser
