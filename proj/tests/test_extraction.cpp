#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "madp/extraction.hpp"
#include "test_support.hpp"

using namespace madp;
using namespace madp::extraction;
using madp::testing::TempDir;
using madp::testing::write_file;

namespace {

const CategoryKey kAcme{"acme", DocType::invoice};

Schema small_schema() {
  return {{"invoice_number", FieldKind::text, true, {}},
          {"invoice_date", FieldKind::date, true, {}},
          {"total_amount", FieldKind::money, true, {}}};
}

ParsedDoc parsed(const std::string& md) { return ParsedDoc{"d1", md, {}, 0, 0, "p1"}; }

class CannedBackend : public Backend {
 public:
  CannedBackend(std::string id, std::vector<std::string> answers)
      : id_(std::move(id)), answers_(std::move(answers)) {}
  const std::string& id() const override { return id_; }
  std::string complete(const ExtractionRequest& req) override {
    repairs += req.repair;
    return answers_.at(std::min(calls++, answers_.size() - 1));
  }
  std::size_t calls = 0;
  int repairs = 0;

 private:
  std::string id_;
  std::vector<std::string> answers_;
};

FieldValue fv(const std::string& field, const std::string& raw, double conf,
              const std::string& backend, FieldKind kind = FieldKind::text) {
  FieldValue v;
  v.field = field;
  v.raw = raw;
  v.normalized = normalize_value(kind, raw);
  v.confidence = conf;
  v.backend_id = backend;
  return v;
}

}  // namespace

TEST(Prompt, SectionsInFixedOrderAndDeterministic) {
  auto v = pftfi::base_version(kAcme);
  auto a = assemble_prompt(small_schema(), parsed("INV-42 total 10.00"), v, kAcme);
  auto b = assemble_prompt(small_schema(), parsed("INV-42 total 10.00"), v, kAcme);
  EXPECT_EQ(a.rendered_text, b.rendered_text);
  std::vector<std::string> headings{"### Document type", "### Fields", "### Output format",
                                    "### Missing or ambiguous information", "### Document"};
  std::size_t pos = 0;
  for (const auto& h : headings) {
    auto at = a.rendered_text.find(h, pos);
    ASSERT_NE(at, std::string::npos) << h;
    pos = at;
  }
  EXPECT_NE(a.field_schema.find("- total_amount (money, required)"), std::string::npos);
  EXPECT_EQ(a.version_id, "v1");
}

TEST(Prompt, KeepsOnlyTheNewestExamples) {
  PromptVersion v = pftfi::base_version(kAcme);
  for (int i = 1; i <= 9; ++i)
    v.examples.push_back({"excerpt " + std::to_string(i), "invoice_number", "E" + std::to_string(i)});
  auto p = assemble_prompt(small_schema(), parsed("x"), v, kAcme, 8);
  ASSERT_EQ(p.examples.size(), 8u);
  EXPECT_EQ(p.examples.front().value, "E2");
  EXPECT_EQ(p.examples.back().value, "E9");
  EXPECT_EQ(p.rendered_text.find("excerpt 1\n"), std::string::npos);
}

TEST(Prompt, RejectsForeignVersionAndEmptySchema) {
  auto other = pftfi::base_version({"zeta", DocType::invoice});
  EXPECT_THROW(assemble_prompt(small_schema(), parsed("x"), other, kAcme), ValidationError);
  EXPECT_THROW(assemble_prompt({}, parsed("x"), pftfi::base_version(kAcme), kAcme), ValidationError);
}

TEST(Answer, ValuesPassThroughAndAbsentFieldsAreMissing) {
  auto values = parse_answer(
      R"({"invoice_number":{"value":"INV-42","confidence":0.95},
          "invoice_date":{"value":"10/01/2026","confidence":0.9},
          "surprise":{"value":"x","confidence":1}})",
      small_schema(), "b1", "v1");
  ASSERT_TRUE(values);
  ASSERT_EQ(values->size(), 3u);
  EXPECT_EQ((*values)[0].raw, "INV-42");
  EXPECT_DOUBLE_EQ((*values)[0].confidence, 0.95);
  EXPECT_EQ((*values)[1].normalized, "2026-01-10");
  EXPECT_TRUE((*values)[2].missing);
  EXPECT_EQ((*values)[2].field, "total_amount");
  EXPECT_DOUBLE_EQ((*values)[2].confidence, 0.0);
}

TEST(Answer, NullValueAndClampedConfidence) {
  auto values = parse_answer(
      R"({"invoice_number":{"value":null,"confidence":0.8},
          "total_amount":{"value":"10.00","confidence":7}})",
      small_schema(), "b1", "v1");
  ASSERT_TRUE(values);
  EXPECT_TRUE((*values)[0].missing);
  EXPECT_DOUBLE_EQ((*values)[2].confidence, 1.0);
  EXPECT_FALSE(parse_answer("not json", small_schema(), "b1", "v1"));
  EXPECT_FALSE(parse_answer("[1,2]", small_schema(), "b1", "v1"));
}

TEST(Extract, NonJsonTwiceFails) {
  CannedBackend b("b1", {"not json", "still not json"});
  auto p = assemble_prompt(small_schema(), parsed("x"), pftfi::base_version(kAcme), kAcme);
  auto r = extract(p, b, small_schema(), "d1");
  EXPECT_TRUE(r.failed);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(b.repairs, 1);
}

TEST(Extract, RepairAttemptCanRecover) {
  CannedBackend b("b1", {"Sure! here you go", R"({"invoice_number":{"value":"A","confidence":0.9}})"});
  auto p = assemble_prompt(small_schema(), parsed("x"), pftfi::base_version(kAcme), kAcme);
  auto r = extract(p, b, small_schema(), "d1");
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.values[0].raw, "A");
}

TEST(Scripted, EvidenceGatesTheAnswer) {
  TempDir dir;
  write_file(dir / "d1.json", R"({"backends":{"*":{"*":{"fields":{
      "invoice_number":{"value":"INV-42","confidence":0.9,"evidence":"No. INV-42",
                        "otherwise":{"value":"INV-24","confidence":0.6}},
      "total_amount":{"value":"10.00","confidence":0.9,"evidence":"Total 10.00"}}}}}})");
  ScriptedBackend b("b1", dir.path());
  auto with = assemble_prompt(small_schema(), parsed("Invoice No. INV-42\n\nTotal   10.00"),
                              pftfi::base_version(kAcme), kAcme);
  auto r = extract(with, b, small_schema(), "d1");
  EXPECT_EQ(r.values[0].raw, "INV-42");
  EXPECT_EQ(r.values[2].raw, "10.00");
  auto without = assemble_prompt(small_schema(), parsed("garbled"), pftfi::base_version(kAcme), kAcme);
  r = extract(without, b, small_schema(), "d1");
  EXPECT_EQ(r.values[0].raw, "INV-24");
  EXPECT_TRUE(r.values[2].missing);
}

TEST(Scripted, ErrorsAreRetriable) {
  TempDir dir;
  write_file(dir / "d1.json", R"({"backends":{"b1":{"*":{"error":"HTTP 503"}}}})");
  ScriptedBackend b("b1", dir.path());
  auto p = assemble_prompt(small_schema(), parsed("x"), pftfi::base_version(kAcme), kAcme);
  EXPECT_THROW(extract(p, b, small_schema(), "d1"), RetriableError);
  EXPECT_THROW(extract(p, b, small_schema(), "nope"), RetriableError);
}

TEST(Consensus, UnanimousUsesNoisyOrCapped) {
  auto recs = consensus({{"b1", {fv("invoice_number", "INV-42", 0.8, "b1")}},
                         {"b2", {fv("invoice_number", "inv-42", 0.7, "b2")}}},
                        small_schema());
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].agreement, Agreement::unanimous);
  EXPECT_NEAR(recs[0].chosen.confidence, 1 - 0.2 * 0.3, 1e-12);
  EXPECT_EQ(recs[0].chosen.raw, "INV-42");
  EXPECT_FALSE(recs[0].flagged);

  auto capped = consensus({{"b1", {fv("invoice_number", "A", 0.95, "b1")}},
                           {"b2", {fv("invoice_number", "A", 0.95, "b2")}},
                           {"b3", {fv("invoice_number", "A", 0.9, "b3")}}},
                          small_schema());
  EXPECT_DOUBLE_EQ(capped[0].chosen.confidence, kConsensusCap);
}

TEST(Consensus, MajorityKeepsBestAgreeingConfidence) {
  auto recs = consensus(
      {{"b1", {fv("total_amount", "122.00", 0.8, "b1", FieldKind::money)}},
       {"b2", {fv("total_amount", "122,00", 0.9, "b2", FieldKind::money)}},
       {"b3", {fv("total_amount", "123.00", 0.99, "b3", FieldKind::money)}}},
      small_schema());
  EXPECT_EQ(recs[0].agreement, Agreement::majority);
  EXPECT_EQ(recs[0].chosen.backend_id, "b2");
  EXPECT_DOUBLE_EQ(recs[0].chosen.confidence, 0.9);
  EXPECT_FALSE(recs[0].flagged);
}

TEST(Consensus, SplitFlagsAndTiesGoToSmallestBackend) {
  auto recs = consensus({{"b2", {fv("invoice_number", "A", 0.7, "b2")}},
                         {"b1", {fv("invoice_number", "B", 0.7, "b1")}},
                         {"b3", {fv("invoice_number", "C", 0.6, "b3")}}},
                        small_schema());
  EXPECT_EQ(recs[0].agreement, Agreement::split);
  EXPECT_TRUE(recs[0].flagged);
  EXPECT_EQ(recs[0].chosen.raw, "B");
}

TEST(Consensus, LineItemsNeverTakeAMajority) {
  Schema s{{"line_items", FieldKind::line_items, false, {}}};
  std::string a = R"([{"description":"x","quantity":1,"unit_price":"1.00","line_total":"1.00"}])";
  std::string b = R"([{"description":"y","quantity":1,"unit_price":"1.00","line_total":"1.00"}])";
  auto recs = consensus({{"b1", {fv("line_items", a, 0.9, "b1", FieldKind::line_items)}},
                         {"b2", {fv("line_items", a, 0.9, "b2", FieldKind::line_items)}},
                         {"b3", {fv("line_items", b, 0.9, "b3", FieldKind::line_items)}}},
                        s);
  EXPECT_EQ(recs[0].agreement, Agreement::split);
  EXPECT_TRUE(recs[0].flagged);
}

TEST(Consensus, SingleVoterIsPassedThrough) {
  auto v = fv("invoice_number", "A", 0.42, "b1");
  auto recs = consensus({{"b1", {v}}}, small_schema());
  EXPECT_EQ(recs[0].agreement, Agreement::single);
  EXPECT_EQ(recs[0].chosen, v);
}

// Property: the unanimous confidence is never below the best single voter,
// except where the cap binds.
TEST(Consensus, UnanimousNeverLowersConfidenceBelowCap) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    double c1 = u(rng), c2 = u(rng), c3 = u(rng);
    auto recs = consensus({{"b1", {fv("invoice_number", "A", c1, "b1")}},
                           {"b2", {fv("invoice_number", "A", c2, "b2")}},
                           {"b3", {fv("invoice_number", "A", c3, "b3")}}},
                          small_schema());
    double best = std::max({c1, c2, c3});
    EXPECT_GE(recs[0].chosen.confidence + 1e-12, std::min(best, kConsensusCap));
    EXPECT_LE(recs[0].chosen.confidence, kConsensusCap);
  }
}

TEST(Parallel, AbsentBackendDoesNotBlockConsensus) {
  auto good = std::make_shared<CannedBackend>(
      "b1", std::vector<std::string>{R"({"invoice_number":{"value":"A","confidence":0.9}})"});
  auto bad = std::make_shared<CannedBackend>("b2", std::vector<std::string>{"nope"});
  auto p = assemble_prompt(small_schema(), parsed("x"), pftfi::base_version(kAcme), kAcme);
  auto r = extract_parallel(p, {good, bad}, small_schema(), "d1", std::chrono::seconds(5));
  EXPECT_FALSE(r.failed);
  EXPECT_EQ(r.responding, std::vector<std::string>{"b1"});
  EXPECT_EQ(r.absent, std::vector<std::string>{"b2"});
  EXPECT_EQ(r.records[0].agreement, Agreement::single);

  auto r2 = extract_parallel(p, {bad}, small_schema(), "d1", std::chrono::seconds(5));
  EXPECT_TRUE(r2.failed);
}

TEST(Parallel, SlowBackendTimesOut) {
  TempDir dir;
  write_file(dir / "d1.json", R"({"backends":{
      "b1":{"*":{"fields":{"invoice_number":{"value":"A","confidence":0.9}}}},
      "b2":{"*":{"delay_ms":2000,"fields":{}}}}})");
  std::vector<std::shared_ptr<Backend>> backends{
      std::make_shared<ScriptedBackend>("b1", dir.path()),
      std::make_shared<ScriptedBackend>("b2", dir.path())};
  auto p = assemble_prompt(small_schema(), parsed("x"), pftfi::base_version(kAcme), kAcme);
  auto start = std::chrono::steady_clock::now();
  auto r = extract_parallel(p, backends, small_schema(), "d1", std::chrono::milliseconds(200));
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(1500));
  EXPECT_EQ(r.absent, std::vector<std::string>{"b2"});
  EXPECT_EQ(r.records[0].chosen.raw, "A");
}
