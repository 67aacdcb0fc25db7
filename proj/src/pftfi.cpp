#include "madp/pftfi.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "madp/normalize.hpp"

namespace madp::pftfi {

namespace {

const FieldSchema& schema_field(const Schema& schema, const std::string& name) {
  const FieldSchema* fs = find_field(schema, name);
  if (!fs) throw ValidationError("field '" + name + "' is not in the schema");
  return *fs;
}

std::vector<std::string> content_lines(const std::string& markdown) {
  std::vector<std::string> lines;
  std::istringstream in(markdown);
  for (std::string line; std::getline(in, line);)
    if (!trim(line).empty()) lines.push_back(line);
  return lines;
}

std::string category_dirname(const CategoryKey& c) {
  std::string s = c.supplier_id + "." + to_string(c.doc_type);
  for (char& ch : s)
    if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
  return s;
}

}  // namespace

void validate_feedback(const CorrectionFeedback& fb, const Schema& schema) {
  schema_field(schema, fb.field);
  if (!fb.original_missing &&
      collapse_whitespace(fb.original_value) == collapse_whitespace(fb.corrected_value))
    throw ValidationError("correction of " + fb.field + " does not change its value");
}

ErrorPattern classify_error(const CorrectionFeedback& fb, const Schema& schema) {
  const FieldSchema& fs = schema_field(schema, fb.field);
  ErrorPattern p;
  p.feedback_id = fb.feedback_id;
  if (fb.original_missing) {
    p.error_class = ErrorClass::missing;
    p.description = fb.field + " was not extracted; expected '" + fb.corrected_value + "'";
    return p;
  }
  std::string a = normalize_value(fs.kind, fb.original_value);
  std::string b = normalize_value(fs.kind, fb.corrected_value);
  if (!a.empty() && a == b && fb.original_value != fb.corrected_value) {
    p.error_class = ErrorClass::format;
    p.description = fb.field + " had the right value in the wrong format: '" +
                    fb.original_value + "' should read '" + fb.corrected_value + "'";
  } else if (fs.kind == FieldKind::line_items) {
    p.error_class = ErrorClass::layout;
    p.description = "table rows of " + fb.field + " were misread (reordered or merged)";
  } else {
    p.error_class = ErrorClass::value;
    p.description = fb.field + " extracted as '" + fb.original_value + "', corrected to '" +
                    fb.corrected_value + "'";
  }
  return p;
}

std::string excerpt_around(const std::string& markdown, const std::string& needle,
                           const std::string& fallback, int radius) {
  auto lines = content_lines(markdown);
  if (lines.empty()) return {};
  auto locate = [&](const std::string& what) -> std::optional<std::size_t> {
    std::string w = collapse_whitespace(what);
    if (w.empty()) return std::nullopt;
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (collapse_whitespace(lines[i]).find(w) != std::string::npos) return i;
    return std::nullopt;
  };
  auto at = locate(needle);
  if (!at) at = locate(fallback);
  std::size_t lo = 0, hi = std::min(lines.size(), static_cast<std::size_t>(2 * radius + 1));
  if (at) {
    lo = *at >= static_cast<std::size_t>(radius) ? *at - radius : 0;
    hi = std::min(lines.size(), *at + radius + 1);
  }
  std::string out;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!out.empty()) out += "\n";
    out += lines[i];
  }
  return out;
}

std::string format_instruction(FieldKind kind, const std::string& field) {
  switch (kind) {
    case FieldKind::date: return "dates must be ISO-8601";
    case FieldKind::money: return "amounts must use a dot as decimal separator and no thousands separator";
    case FieldKind::percentage: return "percentages must be plain numbers without the % sign";
    case FieldKind::currency_code: return "currencies must be ISO 4217 codes";
    case FieldKind::tax_id: return "tax ids must be written without spaces or punctuation";
    case FieldKind::quantity: return "quantities must be plain decimal numbers";
    case FieldKind::line_items: return "line items must be a JSON array of objects";
    case FieldKind::text: break;
  }
  return field + " must be copied exactly as printed";
}

std::string bump_parser_version(const std::string& version) {
  if (version.size() > 1 && version[0] == 'p' &&
      std::all_of(version.begin() + 1, version.end(), ::isdigit))
    return "p" + std::to_string(std::stoi(version.substr(1)) + 1);
  auto dash = version.rfind('-');
  if (dash != std::string::npos && dash + 1 < version.size() &&
      std::all_of(version.begin() + static_cast<long>(dash) + 1, version.end(), ::isdigit))
    return version.substr(0, dash + 1) + std::to_string(std::stoi(version.substr(dash + 1)) + 1);
  return version + "-2";
}

FeedbackOutcome apply_feedback(const CorrectionFeedback& fb, const ErrorPattern& pattern,
                               const PromptVersion& current, const ParserConfig& parser_cfg,
                               const std::string& parsed_markdown, const Schema& schema,
                               std::size_t max_examples) {
  if (!(current.category == fb.category()))
    throw ValidationError("prompt " + current.category.str() + "/" + current.version_id() +
                          " does not belong to category " + fb.category().str());
  FeedbackOutcome out;
  if (pattern.error_class == ErrorClass::layout) {
    ParserConfig next = parser_cfg;
    next.version = bump_parser_version(parser_cfg.version);
    next.layout_hints[fb.category().str()].push_back(
        {fb.field, pattern.description, fb.feedback_id});
    out.parser = std::move(next);
    return out;
  }

  const FieldSchema& fs = schema_field(schema, fb.field);
  PromptVersion next;
  next.number = current.number + 1;
  next.category = current.category;
  next.parent = current.number;
  next.instruction_lines = current.instruction_lines;
  next.examples = current.examples;
  next.created_from = current.created_from;
  next.created_from.push_back(fb.feedback_id);

  std::string needle = fb.original_missing ? fb.corrected_value : fb.original_value;
  next.examples.push_back(
      {excerpt_around(parsed_markdown, needle, fb.corrected_value), fb.field,
       fb.corrected_value});
  while (next.examples.size() > max_examples) next.examples.erase(next.examples.begin());

  if (pattern.error_class == ErrorClass::format) {
    std::string line = format_instruction(fs.kind, fb.field);
    if (std::find(next.instruction_lines.begin(), next.instruction_lines.end(), line) ==
        next.instruction_lines.end())
      next.instruction_lines.push_back(line);
  }
  out.prompt = std::move(next);
  return out;
}

PromptVersion base_version(const CategoryKey& category) {
  PromptVersion v;
  v.number = 1;
  v.category = category;
  return v;
}

PromptStore::PromptStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

PromptVersion PromptStore::head(const CategoryKey& category) const {
  auto it = lineages_.find(category);
  if (it == lineages_.end() || it->second.empty()) return base_version(category);
  return it->second.back();
}

std::vector<PromptVersion> PromptStore::versions(const CategoryKey& category) const {
  auto it = lineages_.find(category);
  if (it == lineages_.end() || it->second.empty()) return {base_version(category)};
  return it->second;
}

std::optional<PromptVersion> PromptStore::get(const CategoryKey& category, int number) const {
  for (const auto& v : versions(category))
    if (v.number == number) return v;
  return std::nullopt;
}

std::vector<CategoryKey> PromptStore::categories() const {
  std::vector<CategoryKey> out;
  for (const auto& [k, _] : lineages_) out.push_back(k);
  return out;
}

void PromptStore::commit(const PromptVersion& v) {
  PromptVersion current = head(v.category);
  if (v.number == 1 && !v.parent && !lineages_.count(v.category)) {
    lineages_[v.category].push_back(v);
    mirror(v);
    return;
  }
  if (!v.parent || *v.parent != current.number || v.number != current.number + 1)
    throw ConflictError("prompt " + v.category.str() + "/" + v.version_id() +
                        " does not extend head " + current.version_id());
  auto& lineage = lineages_[v.category];
  if (lineage.empty()) {
    lineage.push_back(current);
    mirror(current);
  }
  lineage.push_back(v);
  mirror(v);
}

void PromptStore::mirror(const PromptVersion& v) const {
  if (dir_.empty()) return;
  auto cat_dir = dir_ / category_dirname(v.category);
  std::filesystem::create_directories(cat_dir);
  auto file = cat_dir / (v.version_id() + ".json");
  {
    std::ofstream out(file);
    out << json(v).dump(2) << "\n";
  }
  std::ofstream head(cat_dir / "HEAD");
  head << v.version_id() << "\n";
}

PromptStore PromptStore::load(const std::filesystem::path& dir) {
  PromptStore store;
  if (!std::filesystem::exists(dir)) {
    store.dir_ = dir;
    return store;
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    std::vector<PromptVersion> lineage;
    for (const auto& f : std::filesystem::directory_iterator(entry.path())) {
      if (f.path().extension() != ".json") continue;
      std::ifstream in(f.path());
      try {
        lineage.push_back(json::parse(in).get<PromptVersion>());
      } catch (const json::exception& e) {
        throw ParseError(f.path().string() + ": " + e.what(), 0);
      }
    }
    std::sort(lineage.begin(), lineage.end(),
              [](const PromptVersion& a, const PromptVersion& b) { return a.number < b.number; });
    for (const auto& v : lineage) store.commit(v);
  }
  store.dir_ = dir;
  return store;
}

void FeedbackLog::append(const CorrectionFeedback& fb) const {
  std::ofstream out(path_, std::ios::app);
  out << json(fb).dump() << "\n";
}

std::vector<CorrectionFeedback> FeedbackLog::read() const {
  std::vector<CorrectionFeedback> out;
  std::ifstream in(path_);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<CorrectionFeedback>());
    } catch (const json::exception& e) {
      throw ParseError(path_.string() + ": " + e.what(), n);
    }
  }
  return out;
}

int version_number(const std::string& version_id) {
  if (version_id.size() < 2 || version_id[0] != 'v') return 0;
  if (!std::all_of(version_id.begin() + 1, version_id.end(), ::isdigit)) return 0;
  return std::stoi(version_id.substr(1));
}

std::vector<InheritanceTask> inherit(const CorrectionFeedback& fb,
                                     const PromptVersion& new_version,
                                     const std::vector<PendingDoc>& pending, int round) {
  std::vector<InheritanceTask> tasks;
  const CategoryKey category = fb.category();
  for (const auto& doc : pending) {
    if (doc.doc_id == fb.doc_id || !(doc.category == category) || !doc.extracted) continue;
    if (version_number(doc.field_version) >= new_version.number) continue;
    tasks.push_back({doc.doc_id, fb.field, new_version.version_id(), fb.feedback_id, round});
  }
  return tasks;
}

}  // namespace madp::pftfi
