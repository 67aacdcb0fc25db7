#include "madp/splitter.hpp"

#include <regex>

namespace madp::splitter {

std::optional<Pagination> parse_pagination(const std::string& footer_text) {
  static const std::regex kPatterns[] = {
      std::regex(R"(\bpage\s+(\d{1,4})\s+of\s+(\d{1,4})\b)", std::regex::icase),
      std::regex(R"(\bpag\.?\s*(\d{1,4})\s*/\s*(\d{1,4})\b)", std::regex::icase),
      std::regex(R"((?:^|\s)(\d{1,4})\s*/\s*(\d{1,4})(?=\s|$))", std::regex::icase),
  };
  for (const auto& re : kPatterns) {
    std::smatch m;
    if (std::regex_search(footer_text, m, re)) {
      Pagination p{std::stoi(m[1].str()), std::stoi(m[2].str())};
      if (p.current >= 1 && p.current <= p.total) return p;
    }
  }
  return std::nullopt;
}

SplitResult detect_boundaries(const DocBundle& bundle,
                              const std::vector<CategoryLabel>& page_labels,
                              const PipelineConfig& config) {
  if (page_labels.size() != bundle.pages.size())
    throw ValidationError("detect_boundaries needs one label per page");
  SplitResult result;
  if (bundle.pages.empty()) return result;

  std::vector<int> starts{0};
  bool head_signal = false;
  for (std::size_t i = 1; i < bundle.pages.size(); ++i) {
    const Page& page = bundle.pages[i];
    std::optional<Pagination> pag;
    if (page.footer_text) pag = parse_pagination(*page.footer_text);
    bool boundary;
    if (pag) {
      boundary = pag->current == 1;
      head_signal = true;
    } else {
      const CategoryLabel& l = page_labels[i];
      boundary = l.confidence >= config.split_confidence && l.doc_type != DocType::other;
      head_signal = head_signal || boundary;
    }
    if (boundary) starts.push_back(static_cast<int>(i));
  }

  const int pages = static_cast<int>(bundle.pages.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    int end = k + 1 < starts.size() ? starts[k + 1] - 1 : pages - 1;
    LogicalUnit u;
    u.unit_id = starts.size() == 1 ? bundle.doc_id
                                   : bundle.doc_id + "." + std::to_string(k + 1);
    u.start_page = starts[k];
    u.end_page = end;
    u.head_label = page_labels[static_cast<std::size_t>(starts[k])];
    result.units.push_back(std::move(u));
  }
  result.ambiguous = !head_signal && pages > 10;
  return result;
}

}  // namespace madp::splitter
