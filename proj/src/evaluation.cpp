#include "madp/evaluation.hpp"

#include <iomanip>
#include <set>
#include <sstream>

#include "madp/normalize.hpp"

namespace madp::evaluation {

namespace {

std::string pct(double v, int decimals = 1) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << v * 100.0 << "%";
  return out.str();
}

std::string num(double v, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << v;
  std::string s = out.str();
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

json prf_json(const Prf& p) {
  return {{"tp", p.counts.tp},       {"fp", p.counts.fp},     {"fn", p.counts.fn},
          {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

void to_json(json& j, const GroundTruth& g) {
  j = json{{"doc_id", g.doc_id}, {"category", g.category}, {"fields", json::object()}};
  for (const auto& [k, v] : g.fields) j["fields"][k] = v ? json(*v) : json(nullptr);
}

void from_json(const json& j, GroundTruth& g) {
  j.at("doc_id").get_to(g.doc_id);
  j.at("category").get_to(g.category);
  g.fields.clear();
  for (const auto& [k, v] : j.at("fields").items())
    g.fields[k] = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
}

Prf prf(const FieldCounts& c) {
  Prf p;
  p.counts = c;
  if (c.tp + c.fp > 0) p.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) p.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (p.precision + p.recall > 0) p.f1 = 2 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

DocScore score_document(const std::vector<FieldValue>& extracted, const GroundTruth& truth,
                        const Schema& schema) {
  for (const auto& [name, _] : truth.fields)
    if (!find_field(schema, name))
      throw ValidationError("ground truth of " + truth.doc_id + " has field '" + name +
                            "' outside the schema");
  DocScore score;
  score.doc_id = truth.doc_id;
  score.category = truth.category;
  score.doc_correct = true;
  for (const auto& fs : schema) {
    auto t = truth.fields.find(fs.name);
    if (t == truth.fields.end() && fs.required)
      throw ValidationError("ground truth of " + truth.doc_id + " lacks required field '" +
                            fs.name + "'");
    std::optional<std::string> expected =
        t == truth.fields.end() ? std::nullopt : t->second;

    const FieldValue* got = nullptr;
    for (const auto& f : extracted)
      if (f.field == fs.name) got = &f;
    bool got_value = got && !got->missing;

    FieldCounts c;
    bool field_ok;
    if (!expected) {
      if (got_value) c.fp = 1;
      field_ok = !got_value;
    } else if (!got_value) {
      c.fn = 1;
      field_ok = false;
    } else {
      FieldValue want;
      want.raw = *expected;
      want.normalized = normalize_value(fs.kind, *expected);
      if (equality_key(fs.kind, want) == equality_key(fs.kind, *got)) {
        c.tp = 1;
        field_ok = true;
      } else {
        c.fp = 1;
        c.fn = 1;
        field_ok = false;
      }
    }
    score.fields[fs.name] = c;
    if (fs.required && !field_ok) score.doc_correct = false;
  }
  return score;
}

double categories_ok(const std::vector<DocScore>& scores) {
  if (scores.empty()) throw ValidationError("categories_ok needs at least one document");
  std::map<CategoryKey, std::pair<long, long>> per;  // correct, total
  for (const auto& s : scores) {
    auto& [correct, total] = per[s.category];
    correct += s.doc_correct ? 1 : 0;
    total += 1;
  }
  double sum = 0;
  for (const auto& [_, ct] : per)
    sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return sum;
}

std::size_t category_count(const std::vector<DocScore>& scores) {
  std::set<CategoryKey> cats;
  for (const auto& s : scores) cats.insert(s.category);
  return cats.size();
}

EvalReport corpus_report(const std::vector<DocRun>& runs,
                         const std::vector<GroundTruth>& truths,
                         const std::map<DocType, Schema>& schemas, const std::string& label) {
  EvalReport r;
  r.label = label;
  std::map<std::string, const DocRun*> by_id;
  for (const auto& run : runs) by_id[run.doc_id] = &run;

  std::vector<DocScore> scores;
  FieldCounts micro;
  std::map<std::string, FieldCounts> per_field;
  long reviewed = 0;
  double seconds = 0, reduction = 0;
  long reduction_docs = 0;
  std::set<std::string> scored;

  for (const auto& truth : truths) {
    auto schema = schemas.find(truth.category.doc_type);
    if (schema == schemas.end())
      throw ValidationError("no schema for " + to_string(truth.category.doc_type));
    auto it = by_id.find(truth.doc_id);
    static const std::vector<FieldValue> kNothing;
    const DocRun* run = it == by_id.end() ? nullptr : it->second;
    DocScore s = score_document(run ? run->fields : kNothing, truth, schema->second);
    for (const auto& [name, c] : s.fields) {
      micro += c;
      per_field[name] += c;
    }
    if (!s.doc_correct) r.incorrect_docs.push_back(s.doc_id);
    scores.push_back(std::move(s));
    scored.insert(truth.doc_id);
    if (run) {
      reviewed += run->reviewed ? 1 : 0;
      seconds += run->seconds;
      if (run->raw_tokens > 0) {
        reduction += static_cast<double>(run->raw_tokens - run->parsed_tokens) /
                     static_cast<double>(run->raw_tokens);
        ++reduction_docs;
      }
    } else {
      ++reviewed;
    }
  }
  for (const auto& run : runs)
    if (!scored.count(run.doc_id)) r.unscored_docs.push_back(run.doc_id);

  r.doc_count = scores.size();
  if (scores.empty()) return r;
  long correct = 0;
  for (const auto& s : scores) correct += s.doc_correct ? 1 : 0;
  double n = static_cast<double>(scores.size());
  r.doc_accuracy = static_cast<double>(correct) / n;
  r.micro = prf(micro);
  for (const auto& [name, c] : per_field) r.per_field[name] = prf(c);
  r.intervention_rate = static_cast<double>(reviewed) / n;
  r.categories_ok = categories_ok(scores);
  r.category_count = category_count(scores);
  r.mean_seconds_per_doc = seconds / n;
  r.token_reduction_pct =
      reduction_docs ? reduction / static_cast<double>(reduction_docs) * 100.0 : 0.0;
  return r;
}

json to_json(const EvalReport& r) {
  json per_field = json::object();
  for (const auto& [name, p] : r.per_field) per_field[name] = prf_json(p);
  return json{{"label", r.label},
              {"doc_count", r.doc_count},
              {"doc_accuracy", r.doc_accuracy},
              {"micro", prf_json(r.micro)},
              {"per_field", per_field},
              {"intervention_rate", r.intervention_rate},
              {"categories_ok", r.categories_ok},
              {"category_count", r.category_count},
              {"mean_seconds_per_doc", r.mean_seconds_per_doc},
              {"token_reduction_pct", r.token_reduction_pct},
              {"incorrect_docs", r.incorrect_docs},
              {"unscored_docs", r.unscored_docs}};
}

std::string render_markdown(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "| Configuration | Accuracy | Categories OK | Intervention | Token reduction |\n"
      << "| --- | --- | --- | --- | --- |\n";
  for (const auto& r : reports)
    out << "| " << r.label << " | " << pct(r.doc_accuracy) << " | " << num(r.categories_ok, 2)
        << "/" << r.category_count << " | " << pct(r.intervention_rate) << " | "
        << num(r.token_reduction_pct, 1) << "% |\n";
  out << "\n| Configuration | Precision | Recall | F1 | Time/doc (s) |\n"
      << "| --- | --- | --- | --- | --- |\n";
  for (const auto& r : reports)
    out << "| " << r.label << " | " << pct(r.micro.precision) << " | " << pct(r.micro.recall)
        << " | " << pct(r.micro.f1) << " | " << num(r.mean_seconds_per_doc, 4) << " |\n";
  return out.str();
}

}  // namespace madp::evaluation
