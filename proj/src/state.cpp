#include "madp/state.hpp"

#include <algorithm>

namespace madp {

namespace {

[[noreturn]] void mismatch(const PipelineState& s, const std::string& output) {
  throw StateMismatchError("document " + s.doc_id + " is " + to_string(s.stage) +
                           "; cannot apply " + output);
}

void expect(const PipelineState& s, Stage awaited, const std::string& output) {
  if (s.stage != awaited) mismatch(s, output);
}

void replace_records(std::vector<ConsensusRecord>& into,
                     const std::vector<ConsensusRecord>& updates) {
  for (const auto& u : updates) {
    auto it = std::find_if(into.begin(), into.end(),
                           [&](const ConsensusRecord& r) { return r.field == u.field; });
    if (it == into.end())
      into.push_back(u);
    else
      *it = u;
  }
}

struct Apply {
  const PipelineState& in;
  PipelineState out;

  PipelineState operator()(const ClassifierOutput& o) {
    expect(in, Stage::ingested, "classifier output");
    if (o.page_labels.size() != in.pages.size())
      throw ValidationError("classifier output for " + in.doc_id +
                            " must carry one label per page");
    out.page_labels = o.page_labels;
    out.category = o.page_labels.empty() ? CategoryLabel::unknown()
                                         : o.page_labels.front();
    out.stage = Stage::classified;
    return out;
  }

  PipelineState operator()(const SplitterOutput& o) {
    expect(in, Stage::classified, "splitter output");
    if (o.units.empty())
      throw ValidationError("splitter output for " + in.doc_id + " has no units");
    if (o.units.size() > 1) {
      out.units = o.units;
    } else {
      out.category = o.units.front().head_label;
    }
    out.split_ambiguous = o.ambiguous;
    out.stage = Stage::split;
    return out;
  }

  PipelineState operator()(const ParserOutput& o) {
    expect(in, Stage::split, "parser output");
    if (in.is_container()) mismatch(in, "parser output (document was split)");
    out.parsed = o.parsed;
    if (o.used_fallback_renderer)
      out.notes.push_back("external parser unavailable; reference renderer used");
    out.stage = Stage::parsed;
    return out;
  }

  PipelineState operator()(const ExtractionOutput& o) {
    expect(in, Stage::parsed, "extraction output");
    if (!in.parsed) mismatch(in, "extraction output without parsed markdown");
    out.extraction = o.records;
    out.prompt_version = o.prompt_version;
    out.extraction_failed = o.failed;
    out.extraction_failure = o.failure_reason;
    out.stage = Stage::extracted;
    return out;
  }

  PipelineState operator()(const ValidationOutput& o) {
    expect(in, Stage::extracted, "validation output");
    out.validation = o.report;
    out.stage = Stage::validated;
    return out;
  }

  PipelineState operator()(const Finalize&) {
    expect(in, Stage::validated, "finalize");
    switch (in.validation->routing.route) {
      case Route::auto_accept: out.stage = Stage::accepted; break;
      case Route::human_review: out.stage = Stage::in_review; break;
      case Route::non_ai_fallback: out.stage = Stage::fallback; break;
    }
    return out;
  }

  PipelineState operator()(const FallbackOutput& o) {
    if (in.is_terminal()) mismatch(in, "fallback");
    out.stage = Stage::fallback;
    for (const auto& r : o.reasons) out.notes.push_back(r);
    return out;
  }

  PipelineState operator()(const ReviewUpdate& o) {
    bool at_extracted = in.stage == Stage::extracted;
    if (!at_extracted && in.stage != Stage::in_review) mismatch(in, "review update");
    if (at_extracted && (o.confirm || o.report))
      mismatch(in, "review update (document not yet validated)");
    replace_records(out.extraction, o.records);
    if (!o.prompt_version.empty()) out.prompt_version = o.prompt_version;
    if (o.inheritance_round > out.inheritance_round)
      out.inheritance_round = o.inheritance_round;
    if (o.report) out.validation = o.report;
    if (o.confirm) {
      for (auto& r : out.extraction) r.chosen.confidence = 1.0;
      if (out.validation)
        for (auto& f : out.validation->adjusted) f.confidence = 1.0;
      out.stage = Stage::accepted;
    } else if (o.auto_resolve && out.validation &&
               out.validation->routing.route == Route::auto_accept) {
      out.stage = Stage::accepted;
    }
    return out;
  }
};

}  // namespace

std::string to_string(Stage s) { return json(s).get<std::string>(); }

std::optional<Stage> stage_from_string(const std::string& s) {
  for (Stage st : {Stage::ingested, Stage::classified, Stage::split, Stage::parsed,
                   Stage::extracted, Stage::validated, Stage::accepted,
                   Stage::in_review, Stage::fallback})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

bool PipelineState::is_terminal() const {
  return stage == Stage::accepted || stage == Stage::in_review ||
         stage == Stage::fallback || (stage == Stage::split && is_container());
}

const ConsensusRecord* PipelineState::record(const std::string& field) const {
  for (const auto& r : extraction)
    if (r.field == field) return &r;
  return nullptr;
}

PipelineState make_ingested(const DocBundle& bundle) {
  validate_bundle(bundle);
  PipelineState s;
  s.doc_id = bundle.doc_id;
  s.stage = Stage::ingested;
  s.source_name = bundle.source_name;
  s.received_at = bundle.received_at;
  s.pages = bundle.pages;
  return s;
}

PipelineState make_unit(const PipelineState& container, const LogicalUnit& unit) {
  if (unit.start_page < 0 || unit.end_page < unit.start_page ||
      unit.end_page >= static_cast<int>(container.pages.size()))
    throw ValidationError("unit " + unit.unit_id + " outside its bundle");
  PipelineState s;
  s.doc_id = unit.unit_id;
  s.stage = Stage::split;
  s.parent = container.doc_id;
  s.source_name = container.source_name;
  s.received_at = container.received_at;
  for (int i = unit.start_page; i <= unit.end_page; ++i) {
    Page p = container.pages[static_cast<std::size_t>(i)];
    p.index = i - unit.start_page;
    s.pages.push_back(std::move(p));
    if (static_cast<std::size_t>(i) < container.page_labels.size())
      s.page_labels.push_back(container.page_labels[static_cast<std::size_t>(i)]);
  }
  s.category = unit.head_label;
  s.split_ambiguous = container.split_ambiguous;
  return s;
}

PipelineState advance_state(const PipelineState& state, const StageOutput& output) {
  return std::visit(Apply{state, state}, output);
}

std::string stage_output_kind(const StageOutput& out) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ClassifierOutput>) return "classified";
        if constexpr (std::is_same_v<T, SplitterOutput>) return "split";
        if constexpr (std::is_same_v<T, ParserOutput>) return "parsed";
        if constexpr (std::is_same_v<T, ExtractionOutput>) return "extracted";
        if constexpr (std::is_same_v<T, ValidationOutput>) return "validated";
        if constexpr (std::is_same_v<T, Finalize>) return "finalized";
        if constexpr (std::is_same_v<T, FallbackOutput>) return "fallback";
        if constexpr (std::is_same_v<T, ReviewUpdate>) return "review_update";
      },
      out);
}

void to_json(json& j, const StageOutput& v) {
  j = std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ClassifierOutput>)
          return {{"page_labels", o.page_labels}};
        if constexpr (std::is_same_v<T, SplitterOutput>)
          return {{"units", o.units}, {"ambiguous", o.ambiguous}};
        if constexpr (std::is_same_v<T, ParserOutput>)
          return {{"parsed", o.parsed},
                  {"used_fallback_renderer", o.used_fallback_renderer}};
        if constexpr (std::is_same_v<T, ExtractionOutput>)
          return {{"records", o.records},
                  {"prompt_version", o.prompt_version},
                  {"failed", o.failed},
                  {"failure_reason", o.failure_reason}};
        if constexpr (std::is_same_v<T, ValidationOutput>)
          return {{"report", o.report}};
        if constexpr (std::is_same_v<T, Finalize>) return json::object();
        if constexpr (std::is_same_v<T, FallbackOutput>)
          return {{"reasons", o.reasons}};
        if constexpr (std::is_same_v<T, ReviewUpdate>) {
          json r{{"records", o.records},
                 {"prompt_version", o.prompt_version},
                 {"confirm", o.confirm},
                 {"auto_resolve", o.auto_resolve},
                 {"inheritance_round", o.inheritance_round}};
          r["report"] = o.report ? json(*o.report) : json(nullptr);
          return r;
        }
      },
      v);
  j["output"] = stage_output_kind(v);
}

void from_json(const json& j, StageOutput& v) {
  const std::string kind = j.at("output").get<std::string>();
  if (kind == "classified") {
    v = ClassifierOutput{j.at("page_labels").get<std::vector<CategoryLabel>>()};
  } else if (kind == "split") {
    v = SplitterOutput{j.at("units").get<std::vector<LogicalUnit>>(),
                       j.value("ambiguous", false)};
  } else if (kind == "parsed") {
    v = ParserOutput{j.at("parsed").get<ParsedDoc>(),
                     j.value("used_fallback_renderer", false)};
  } else if (kind == "extracted") {
    v = ExtractionOutput{j.at("records").get<std::vector<ConsensusRecord>>(),
                         j.value("prompt_version", std::string{}),
                         j.value("failed", false),
                         j.value("failure_reason", std::string{})};
  } else if (kind == "validated") {
    v = ValidationOutput{j.at("report").get<ValidationReport>()};
  } else if (kind == "finalized") {
    v = Finalize{};
  } else if (kind == "fallback") {
    v = FallbackOutput{j.value("reasons", std::vector<std::string>{})};
  } else if (kind == "review_update") {
    ReviewUpdate u;
    u.records = j.at("records").get<std::vector<ConsensusRecord>>();
    u.prompt_version = j.value("prompt_version", std::string{});
    u.confirm = j.value("confirm", false);
    u.auto_resolve = j.value("auto_resolve", false);
    u.inheritance_round = j.value("inheritance_round", 0);
    if (j.contains("report") && !j["report"].is_null())
      u.report = j["report"].get<ValidationReport>();
    v = std::move(u);
  } else {
    throw ValidationError("unknown stage output '" + kind + "'");
  }
}

void to_json(json& j, const PipelineState& v) {
  j = json{{"doc_id", v.doc_id},
           {"stage", v.stage},
           {"parent", v.parent ? json(*v.parent) : json(nullptr)},
           {"source_name", v.source_name},
           {"received_at", v.received_at},
           {"page_count", v.pages.size()},
           {"page_labels", v.page_labels},
           {"category", v.category},
           {"units", v.units},
           {"split_ambiguous", v.split_ambiguous},
           {"parsed", v.parsed ? json(*v.parsed) : json(nullptr)},
           {"prompt_version", v.prompt_version},
           {"extraction", v.extraction},
           {"extraction_failed", v.extraction_failed},
           {"extraction_failure", v.extraction_failure},
           {"validation", v.validation ? json(*v.validation) : json(nullptr)},
           {"notes", v.notes},
           {"inheritance_round", v.inheritance_round}};
}

}  // namespace madp
