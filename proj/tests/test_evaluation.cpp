#include <gtest/gtest.h>

#include <random>

#include "madp/evaluation.hpp"
#include "test_support.hpp"

using namespace madp;
using namespace madp::evaluation;

namespace {

Schema tiny() {
  return {{"number", FieldKind::text, true, {}},
          {"total", FieldKind::money, true, {}},
          {"note", FieldKind::text, false, {}}};
}

FieldValue fv(const std::string& field, const std::string& raw, FieldKind kind) {
  return madp::testing::value(field, raw, 0.9, kind);
}

DocScore scored(const std::string& supplier, bool ok) {
  DocScore s;
  s.category = {supplier, DocType::invoice};
  s.doc_correct = ok;
  return s;
}

}  // namespace

TEST(CategoriesOk, ConstructedExampleSumsTo19Point7) {
  std::vector<DocScore> scores;
  for (int c = 0; c < 18; ++c)
    for (int d = 0; d < 5; ++d) scores.push_back(scored("s" + std::to_string(c), true));
  for (int d = 0; d < 5; ++d) scores.push_back(scored("eighty", d != 0));
  for (int d = 0; d < 10; ++d) scores.push_back(scored("ninety", d != 0));
  EXPECT_NEAR(categories_ok(scores), 19.7, 1e-12);
  EXPECT_EQ(category_count(scores), 20u);
  EXPECT_THROW(categories_ok({}), ValidationError);
}

TEST(Prf, Definitions) {
  auto p = prf({3, 1, 2});
  EXPECT_DOUBLE_EQ(p.precision, 0.75);
  EXPECT_DOUBLE_EQ(p.recall, 0.6);
  EXPECT_DOUBLE_EQ(p.f1, 2 * 0.75 * 0.6 / 1.35);
  auto z = prf({0, 0, 0});
  EXPECT_EQ(z.precision, 0);
  EXPECT_EQ(z.f1, 0);
}

TEST(Score, CountingRules) {
  GroundTruth t{"d", {"a", DocType::invoice}, {{"number", "INV-1"}, {"total", "10.00"}, {"note", std::nullopt}}};
  // right, wrong, spurious
  auto s = score_document({fv("number", "inv-1", FieldKind::text), fv("total", "11.00", FieldKind::money),
                           fv("note", "hello", FieldKind::text)},
                          t, tiny());
  EXPECT_EQ(s.fields["number"], (FieldCounts{1, 0, 0}));
  EXPECT_EQ(s.fields["total"], (FieldCounts{0, 1, 1}));
  EXPECT_EQ(s.fields["note"], (FieldCounts{0, 1, 0}));
  EXPECT_FALSE(s.doc_correct);

  auto ok = score_document({fv("number", "INV-1", FieldKind::text), fv("total", "EUR 10,00", FieldKind::money),
                            madp::testing::missing("note")},
                           t, tiny());
  EXPECT_TRUE(ok.doc_correct);
  EXPECT_EQ(ok.fields["note"], (FieldCounts{0, 0, 0}));

  auto miss = score_document({fv("number", "INV-1", FieldKind::text)}, t, tiny());
  EXPECT_EQ(miss.fields["total"], (FieldCounts{0, 0, 1}));
  EXPECT_FALSE(miss.doc_correct);
}

TEST(Score, OptionalFieldDoesNotDecideCorrectness) {
  GroundTruth t{"d", {"a", DocType::invoice}, {{"number", "1"}, {"total", "1.00"}, {"note", "x"}}};
  auto s = score_document({fv("number", "1", FieldKind::text), fv("total", "1.00", FieldKind::money)},
                          t, tiny());
  EXPECT_TRUE(s.doc_correct);
  EXPECT_EQ(s.fields["note"].fn, 1);
}

TEST(Score, TruthOutsideSchemaIsRejected) {
  GroundTruth t{"d", {"a", DocType::invoice}, {{"number", "1"}, {"total", "1"}, {"colour", "red"}}};
  EXPECT_THROW(score_document({}, t, tiny()), ValidationError);
  GroundTruth lacking{"d", {"a", DocType::invoice}, {{"number", "1"}}};
  EXPECT_THROW(score_document({}, lacking, tiny()), ValidationError);
}

// Micro-F1 over random corpora of up to ten documents, recomputed here
// directly from the per-field comparison rules.
TEST(Report, MicroF1MatchesBruteForce) {
  std::mt19937 rng(99);
  const std::vector<std::string> numbers{"A-1", "A-2", "B-7"};
  const std::vector<std::string> totals{"10.00", "10,00", "11.00"};
  std::map<DocType, Schema> schemas{{DocType::invoice, tiny()}};
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng() % 10);
    std::vector<GroundTruth> truths;
    std::vector<DocRun> runs;
    long tp = 0, fp = 0, fn = 0, correct = 0;
    for (int d = 0; d < n; ++d) {
      std::string id = "d" + std::to_string(d);
      GroundTruth t{id, {"s" + std::to_string(rng() % 3), DocType::invoice}, {}};
      t.fields["number"] = numbers[rng() % 3];
      t.fields["total"] = totals[rng() % 3];
      t.fields["note"] = rng() % 2 ? std::optional<std::string>("x") : std::nullopt;
      DocRun run;
      run.doc_id = id;
      run.doc_type = DocType::invoice;
      bool doc_ok = true;
      for (const auto& fs : tiny()) {
        int pick = static_cast<int>(rng() % 4);  // 3 = missing
        std::string value = fs.name == "number" ? (pick < 3 ? numbers[pick] : "")
                          : fs.name == "total"  ? (pick < 3 ? totals[pick] : "")
                                                : (pick % 2 ? "x" : "");
        bool has = !value.empty();
        if (has) run.fields.push_back(fv(fs.name, value, fs.kind));
        const auto& want = t.fields[fs.name];
        bool ok;
        if (!want) {
          fp += has;
          ok = !has;
        } else if (!has) {
          ++fn;
          ok = false;
        } else if (same_value(fs.kind, *want, value)) {
          ++tp;
          ok = true;
        } else {
          ++fp;
          ++fn;
          ok = false;
        }
        if (fs.required && !ok) doc_ok = false;
      }
      correct += doc_ok;
      truths.push_back(t);
      runs.push_back(run);
    }
    auto r = corpus_report(runs, truths, schemas);
    double p = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0;
    double rc = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0;
    double f1 = p + rc ? 2 * p * rc / (p + rc) : 0;
    ASSERT_EQ(r.micro.counts, (FieldCounts{tp, fp, fn})) << trial;
    EXPECT_NEAR(r.micro.f1, f1, 1e-12);
    EXPECT_NEAR(r.doc_accuracy, static_cast<double>(correct) / n, 1e-12);
  }
}

TEST(Report, InterventionAndTokenReduction) {
  std::map<DocType, Schema> schemas{{DocType::invoice, tiny()}};
  std::vector<GroundTruth> truths;
  std::vector<DocRun> runs;
  for (int i = 0; i < 20; ++i) {
    std::string id = "d" + std::to_string(i);
    truths.push_back({id, {"a", DocType::invoice}, {{"number", "1"}, {"total", "1.00"}}});
    DocRun r;
    r.doc_id = id;
    r.fields = {fv("number", "1", FieldKind::text), fv("total", "1.00", FieldKind::money)};
    r.reviewed = i < 3;
    r.raw_tokens = 100;
    r.parsed_tokens = i % 2 ? 60 : 70;
    runs.push_back(r);
  }
  runs.push_back({"stray", DocType::invoice, {}, false, 0, 0, 0});
  auto r = corpus_report(runs, truths, schemas, "x");
  EXPECT_DOUBLE_EQ(r.doc_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.intervention_rate, 0.15);
  EXPECT_NEAR(r.token_reduction_pct, 35.0, 1e-9);
  EXPECT_EQ(r.unscored_docs, std::vector<std::string>{"stray"});
  EXPECT_DOUBLE_EQ(r.categories_ok, 1.0);
}

TEST(Report, TruthWithoutRunCountsAsMissedAndReviewed) {
  std::map<DocType, Schema> schemas{{DocType::invoice, tiny()}};
  std::vector<GroundTruth> truths{{"d", {"a", DocType::invoice}, {{"number", "1"}, {"total", "1.00"}}}};
  auto r = corpus_report({}, truths, schemas);
  EXPECT_DOUBLE_EQ(r.doc_accuracy, 0.0);
  EXPECT_DOUBLE_EQ(r.intervention_rate, 1.0);
  EXPECT_EQ(r.micro.counts.fn, 2);
}

TEST(Report, MarkdownHasBothTables) {
  EvalReport a;
  a.label = "Full pipeline";
  a.doc_accuracy = 1.0;
  auto md = render_markdown({a});
  EXPECT_NE(md.find("Full pipeline"), std::string::npos);
  EXPECT_NE(md.find("F1"), std::string::npos);
}

TEST(Truth, JsonRoundTrip) {
  GroundTruth t{"d", {"a", DocType::invoice}, {{"number", "1"}, {"note", std::nullopt}}};
  EXPECT_EQ(json(t).get<GroundTruth>(), t);
}
