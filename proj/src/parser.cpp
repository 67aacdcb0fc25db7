#include "madp/parser.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "madp/normalize.hpp"

namespace madp::parser {

namespace {

auto block_key(const TextBlock& b) {
  return std::tie(b.y0, b.x0, b.y1, b.x1, b.text, b.font_size_hint);
}

bool by_position(const TextBlock& a, const TextBlock& b) {
  return block_key(a) < block_key(b);
}

std::vector<TextBlock> order_columns(std::vector<TextBlock> blocks, double gap) {
  if (blocks.empty()) return blocks;
  std::stable_sort(blocks.begin(), blocks.end(), [](const TextBlock& a, const TextBlock& b) {
    if (a.x_center() != b.x_center()) return a.x_center() < b.x_center();
    return by_position(a, b);
  });
  std::vector<std::vector<TextBlock>> columns{{blocks.front()}};
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i].x_center() - blocks[i - 1].x_center() > gap) columns.emplace_back();
    columns.back().push_back(blocks[i]);
  }
  std::vector<TextBlock> out;
  for (auto& col : columns) {
    std::stable_sort(col.begin(), col.end(), by_position);
    out.insert(out.end(), col.begin(), col.end());
  }
  return out;
}

bool is_markup_token(const std::string& tok) {
  return std::all_of(tok.begin(), tok.end(),
                     [](char c) { return c == '|' || c == '-' || c == ':' || c == '#'; });
}

std::string escape_cell(const std::string& s) {
  std::string out;
  for (char c : collapse_whitespace(s)) {
    if (c == '|') out += "\\|";
    else out.push_back(c);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::vector<TextBlock> reading_order(std::vector<TextBlock> blocks,
                                     const ParserConfig& config) {
  std::stable_sort(blocks.begin(), blocks.end(), by_position);
  std::vector<TextBlock> spanning, rest;
  for (auto& b : blocks)
    ((b.x1 - b.x0) > kSpanningWidth ? spanning : rest).push_back(std::move(b));

  std::vector<TextBlock> out;
  std::size_t next = 0;  // into rest, which is y-sorted
  for (const auto& s : spanning) {
    std::vector<TextBlock> band;
    while (next < rest.size() && by_position(rest[next], s)) band.push_back(rest[next++]);
    auto ordered = order_columns(std::move(band), config.column_gap_threshold);
    out.insert(out.end(), ordered.begin(), ordered.end());
    out.push_back(s);
  }
  std::vector<TextBlock> tail(rest.begin() + static_cast<long>(next), rest.end());
  auto ordered = order_columns(std::move(tail), config.column_gap_threshold);
  out.insert(out.end(), ordered.begin(), ordered.end());
  return out;
}

long count_tokens(const std::string& text) {
  std::istringstream in(text);
  long n = 0;
  for (std::string tok; in >> tok;) ++n;
  return n;
}

long count_content_tokens(const std::string& markdown) {
  std::istringstream in(markdown);
  long n = 0;
  for (std::string tok; in >> tok;)
    if (!is_markup_token(tok)) ++n;
  return n;
}

std::string naive_concatenation(const std::vector<Page>& pages) {
  std::vector<std::string> parts;
  for (const auto& p : pages) {
    for (const auto& b : p.blocks) parts.push_back(b.text);
    for (const auto& t : p.tables)
      for (const auto& c : t.cells) parts.push_back(c);
    if (p.footer_text) parts.push_back(*p.footer_text);
  }
  std::string out;
  for (const auto& s : parts) {
    std::string c = collapse_whitespace(s);
    if (c.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += c;
  }
  return out;
}

std::string render_pipe_table(const TableGrid& t) {
  if (t.rows == 0 || t.cols == 0) return {};
  std::string out;
  auto row = [&](int r) {
    std::string line = "|";
    for (int c = 0; c < t.cols; ++c) line += " " + escape_cell(t.cell(r, c)) + " |";
    return line;
  };
  out += row(0) + "\n|";
  for (int c = 0; c < t.cols; ++c) out += " --- |";
  for (int r = 1; r < t.rows; ++r) out += "\n" + row(r);
  return out;
}

ParsedDoc render_markdown(const std::vector<Page>& pages, const ParserConfig& config,
                          const std::string& unit_id) {
  ParsedDoc doc;
  doc.unit_id = unit_id;
  doc.parser_config_version = config.version;

  std::vector<double> fonts;
  for (const auto& p : pages)
    for (const auto& b : p.blocks)
      if (!collapse_whitespace(b.text).empty()) fonts.push_back(b.font_size_hint);
  const double heading_min = config.heading_font_ratio * median(fonts);

  std::set<double, std::greater<>> heading_sizes;
  for (double f : fonts)
    if (f >= heading_min) heading_sizes.insert(f);
  auto level_of = [&](double f) {
    int rank = static_cast<int>(std::distance(heading_sizes.begin(), heading_sizes.find(f))) + 1;
    return std::min(rank, 3);
  };

  std::vector<std::string> pieces;
  std::set<std::string> seen_running;
  for (std::size_t pi = 0; pi < pages.size(); ++pi) {
    const Page& page = pages[pi];
    auto blocks = reading_order(page.blocks, config);
    auto tables = page.tables;
    std::stable_sort(tables.begin(), tables.end(),
                     [](const TableGrid& a, const TableGrid& b) { return a.y0 < b.y0; });
    std::size_t ti = 0;
    auto flush_tables_before = [&](double y) {
      while (ti < tables.size() && tables[ti].y0 < y) {
        auto t = render_pipe_table(tables[ti++]);
        if (!t.empty()) pieces.push_back(std::move(t));
      }
    };
    std::set<std::string> running_here;
    for (const auto& b : blocks) {
      std::string text = collapse_whitespace(b.text);
      if (text.empty()) continue;
      if (b.y0 < kRunningHeaderBand) {
        if (pi > 0 && seen_running.count(text)) continue;
        running_here.insert(text);
      }
      flush_tables_before(b.y0);
      if (!fonts.empty() && b.font_size_hint >= heading_min) {
        int level = level_of(b.font_size_hint);
        doc.heading_outline.push_back({level, text});
        pieces.push_back(std::string(static_cast<std::size_t>(level), '#') + " " + text);
      } else {
        pieces.push_back(text);
      }
    }
    flush_tables_before(2.0);
    seen_running.insert(running_here.begin(), running_here.end());
  }

  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i) doc.markdown += "\n\n";
    doc.markdown += pieces[i];
  }
  doc.raw_token_count = count_tokens(naive_concatenation(pages));
  doc.parsed_token_count = count_content_tokens(doc.markdown);
  return doc;
}

ParsedDoc passthrough(const std::vector<Page>& pages, const ParserConfig& config,
                      const std::string& unit_id) {
  ParsedDoc doc;
  doc.unit_id = unit_id;
  doc.parser_config_version = config.version + "+passthrough";
  doc.markdown = naive_concatenation(pages);
  doc.raw_token_count = count_tokens(doc.markdown);
  doc.parsed_token_count = doc.raw_token_count;
  return doc;
}

ExternalParse parse_external(const std::vector<Page>& pages, const std::string& unit_id,
                             ModelEndpoint& endpoint, const ParserConfig& config,
                             const RetryPolicy& policy) {
  json req{{"doc_id", unit_id}, {"pages", pages}};
  std::string reason;
  try {
    json res = post_with_retry(endpoint, req, policy);
    if (!res.is_object() || !res.contains("markdown") || !res["markdown"].is_string())
      throw AdapterError("parser response lacks markdown");
    std::string md = res["markdown"].get<std::string>();
    if (trim(md).empty()) throw AdapterError("parser returned empty markdown");
    ExternalParse out;
    out.parsed.unit_id = unit_id;
    out.parsed.markdown = std::move(md);
    out.parsed.parser_config_version = config.version + "+external";
    out.parsed.raw_token_count = count_tokens(naive_concatenation(pages));
    out.parsed.parsed_token_count = count_content_tokens(out.parsed.markdown);
    return out;
  } catch (const RetriableError& e) {
    reason = e.what();
  } catch (const AdapterError& e) {
    reason = e.what();
  }
  return {render_markdown(pages, config, unit_id), true,
          "external parser failed, reference renderer used: " + reason};
}

}  // namespace madp::parser
