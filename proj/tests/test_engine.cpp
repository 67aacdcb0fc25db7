#include <gtest/gtest.h>

#include "madp/engine.hpp"
#include "test_support.hpp"

using namespace madp;
using madp::testing::LearningScenario;
using madp::testing::TempDir;

namespace {

const PipelineState& doc(const Store& s, const std::string& id) {
  const PipelineState* d = s.doc(id);
  if (!d) throw std::runtime_error("missing " + id);
  return *d;
}

}  // namespace

TEST(Engine, RunsEveryDocumentToATerminalStage) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path()));
  for (const auto& b : LearningScenario::bundles()) engine.ingest(b);
  EXPECT_EQ(engine.run(), 3u);
  auto s = engine.snapshot();
  for (const char* id : {"A", "B", "C"}) {
    EXPECT_EQ(doc(s, id).stage, Stage::in_review) << id;
    EXPECT_EQ(doc(s, id).prompt_version, "v1");
  }
  EXPECT_EQ(doc(s, "A").category.supplier_id, "acme");
  EXPECT_EQ(doc(s, "C").category.supplier_id, "zeta");
  EXPECT_EQ(s.queue(TaskStatus::pending).size(), 3u);
  EXPECT_EQ(engine.run(), 0u);
}

TEST(Engine, DuplicateAndMalformedIngestAreRejected) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path(), false));
  auto b = LearningScenario::bundles()[0];
  engine.ingest(b);
  EXPECT_THROW(engine.ingest(b), ValidationError);
  DocBundle empty{"E", "e.pdf", {}, ""};
  EXPECT_THROW(engine.ingest(empty), ValidationError);
}

TEST(Engine, CorrectionTeachesTheCategory) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path()));
  for (const auto& b : LearningScenario::bundles()) engine.ingest(b);
  engine.run();
  const json c_before = engine.document_json("C");

  json view = engine.correct("A", "invoice_number", "INV-A1", "alice");
  EXPECT_EQ(view["error_class"], "value");
  EXPECT_EQ(view["inherited"], json::array({"B"}));

  auto s = engine.snapshot();
  auto versions = s.prompts().versions({"acme", DocType::invoice});
  ASSERT_EQ(versions.size(), 2u);
  EXPECT_EQ(versions[1].parent, std::optional<int>(1));
  ASSERT_EQ(versions[1].examples.size(), 1u);
  EXPECT_EQ(versions[1].examples[0].value, "INV-A1");
  EXPECT_NE(versions[1].examples[0].excerpt.find("INV-A1"), std::string::npos);

  const auto& b = doc(s, "B");
  EXPECT_EQ(b.stage, Stage::accepted);
  EXPECT_EQ(b.record("invoice_number")->chosen.prompt_version, "v2");
  const auto& task_b = s.tasks().at("B");
  EXPECT_EQ(task_b.status, TaskStatus::resolved);
  EXPECT_EQ(task_b.corrections + task_b.confirmations, 0);
  EXPECT_EQ(task_b.inheritance_updates, 1);

  EXPECT_EQ(engine.document_json("C"), c_before);
  EXPECT_EQ(s.prompts().head({"zeta", DocType::invoice}).number, 1);

  // A itself still waits for a reviewer: corrections alone never resolve a task.
  EXPECT_EQ(doc(s, "A").stage, Stage::in_review);
  EXPECT_EQ(s.tasks().at("A").status, TaskStatus::in_progress);
  EXPECT_EQ(doc(s, "A").record("invoice_number")->chosen.confidence, 1.0);
  engine.confirm("A", "alice");
  EXPECT_EQ(engine.snapshot().tasks().at("A").status, TaskStatus::resolved);
}

TEST(Engine, ReviewErrors) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path(), false));
  for (const auto& b : LearningScenario::bundles()) engine.ingest(b);
  engine.run();
  EXPECT_THROW(engine.correct("nope", "invoice_number", "x"), NotFoundError);
  EXPECT_THROW(engine.correct("A", "colour", "x"), ValidationError);
  EXPECT_THROW(engine.correct("A", "total_amount", "a lot"), ValidationError);
  EXPECT_THROW(engine.correct("A", "invoice_number", "INV-A7"), ValidationError);
  engine.confirm("C");
  EXPECT_THROW(engine.confirm("C"), ConflictError);
  EXPECT_THROW(engine.correct("C", "invoice_number", "ZT-10"), ConflictError);
  EXPECT_THROW(engine.confirm("nope"), NotFoundError);
}

TEST(Engine, RestartReplaysToTheSameState) {
  TempDir dir;
  json queue, stats, heads, doc_b;
  {
    Engine engine(LearningScenario::options(dir.path()));
    for (const auto& b : LearningScenario::bundles()) engine.ingest(b);
    engine.run();
    engine.correct("A", "invoice_number", "INV-A1");
    queue = engine.queue_json();
    stats = engine.stats_json();
    heads = engine.prompt_heads_json();
    doc_b = engine.document_json("B");
  }
  Engine again(LearningScenario::options(dir.path()));
  EXPECT_EQ(again.queue_json().dump(), queue.dump());
  EXPECT_EQ(again.stats_json().dump(), stats.dump());
  EXPECT_EQ(again.prompt_heads_json().dump(), heads.dump());
  EXPECT_EQ(again.document_json("B").dump(), doc_b.dump());
  EXPECT_TRUE(std::filesystem::exists(dir / "store/prompts/acme.invoice/v2.json"));
  EXPECT_EQ(pftfi::FeedbackLog(dir / "store/feedback.jsonl").read().size(), 1u);
}

TEST(Engine, LiveStateEqualsReplayAfterEveryEvent) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path(), false));
  std::vector<std::string> live;
  engine.set_event_hook([&](const Event&, const Store& s) {
    live.push_back(s.queue_json().dump() + s.stats_json().dump() + s.prompt_heads_json().dump());
  });
  for (const auto& b : LearningScenario::bundles()) engine.ingest(b);
  engine.run();
  engine.correct("A", "invoice_number", "INV-A1");
  auto events = engine.events();
  ASSERT_EQ(events.size(), live.size());
  for (std::size_t k = 1; k <= events.size(); ++k) {
    Store s = Store::replay({events.begin(), events.begin() + static_cast<long>(k)});
    EXPECT_EQ(s.queue_json().dump() + s.stats_json().dump() + s.prompt_heads_json().dump(),
              live[k - 1])
        << "after event " << k;
  }
}

TEST(Engine, PaginatedBatchIsSplitIntoUnits) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path(), false));
  auto pages = LearningScenario::bundles();
  std::vector<Page> batch;
  for (int k = 0; k < 2; ++k) {
    for (int i = 1; i <= 2; ++i) {
      Page p = pages[static_cast<std::size_t>(k)].pages[0];
      p.footer_text = "Page " + std::to_string(i) + " of 2";
      batch.push_back(p);
    }
  }
  engine.ingest(madp::testing::bundle_of("batch", batch));
  engine.run();
  auto s = engine.snapshot();
  const auto& container = doc(s, "batch");
  ASSERT_TRUE(container.is_container());
  ASSERT_EQ(container.units.size(), 2u);
  EXPECT_EQ(container.units[1].start_page, 2);
  for (const char* id : {"batch.1", "batch.2"}) {
    EXPECT_TRUE(doc(s, id).is_terminal()) << id;
    EXPECT_EQ(doc(s, id).parent, std::optional<std::string>("batch"));
  }
  EXPECT_EQ(s.stats().total_docs, 2);
}

TEST(Engine, UnknownCategoryFallsBack) {
  TempDir dir;
  Engine engine(LearningScenario::options(dir.path(), false));
  engine.ingest(madp::testing::bundle_of(
      "X", {LearningScenario::invoice_page("qqqq wwww xxxx", "1", "1.00")}));
  engine.run();
  auto s = engine.snapshot();
  EXPECT_EQ(doc(s, "X").stage, Stage::fallback);
  EXPECT_EQ(s.stats().fallback_docs, 1);
  EXPECT_TRUE(s.queue().empty());
}

TEST(Engine, AllBackendsFailingRoutesToReview) {
  TempDir dir;
  auto o = LearningScenario::options(dir.path(), false);
  std::filesystem::remove_all(dir / "answers");
  Engine engine(std::move(o));
  engine.ingest(LearningScenario::bundles()[0]);
  engine.run();
  auto s = engine.snapshot();
  EXPECT_EQ(doc(s, "A").stage, Stage::in_review);
  EXPECT_TRUE(doc(s, "A").extraction_failed);
}

TEST(Ablation, ParsesKnownStagesOnly) {
  EXPECT_EQ(parse_ablation("parser, splitter"), (std::set<std::string>{"parser", "splitter"}));
  EXPECT_TRUE(parse_ablation("").empty());
  EXPECT_THROW(parse_ablation("parser,magic"), ValidationError);
}

TEST(Ingest, DirectoryInNameOrderSkippingKnownIds) {
  TempDir dir;
  for (const auto& b : LearningScenario::bundles())
    madp::testing::write_file(dir / ("in/" + b.doc_id + ".json"), json(b).dump());
  Engine engine(LearningScenario::options(dir.path(), false));
  EXPECT_EQ(engine.ingest_dir(dir / "in"), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_TRUE(engine.ingest_dir(dir / "in").empty());
}
