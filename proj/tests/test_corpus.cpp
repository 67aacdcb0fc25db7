#include <gtest/gtest.h>

#include "madp/corpus.hpp"
#include "madp/parser.hpp"
#include "madp/splitter.hpp"
#include "test_support.hpp"

using namespace madp;
using madp::testing::TempDir;

namespace {

struct CorpusFixture : ::testing::Test {
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    corpus::write(corpus::generate(2026), dir_->path());
    loaded_ = new corpus::LoadedCorpus(corpus::load(dir_->path()));
    full_ = new corpus::CorpusRun(corpus::run_corpus(*loaded_));
  }
  static void TearDownTestSuite() {
    delete full_;
    delete loaded_;
    delete dir_;
  }
  static TempDir* dir_;
  static corpus::LoadedCorpus* loaded_;
  static corpus::CorpusRun* full_;
};

TempDir* CorpusFixture::dir_ = nullptr;
corpus::LoadedCorpus* CorpusFixture::loaded_ = nullptr;
corpus::CorpusRun* CorpusFixture::full_ = nullptr;

}  // namespace

TEST(CorpusGen, DeterministicAndWellFormed) {
  auto a = corpus::generate(7);
  auto b = corpus::generate(7);
  EXPECT_EQ(json(a.bundles), json(b.bundles));
  EXPECT_EQ(a.truths.size(), 100u);
  std::map<std::string, int> per_category;
  for (const auto& t : a.truths) ++per_category[t.category.str()];
  EXPECT_EQ(per_category.size(), 20u);
  for (const auto& [c, n] : per_category) EXPECT_EQ(n, 5) << c;
  EXPECT_GE(a.batches.size(), 1u);
  for (const auto& bundle : a.bundles) EXPECT_NO_THROW(validate_bundle(bundle));
}

TEST(CorpusGen, MalformedDirectoryIsRejected) {
  TempDir dir;
  EXPECT_ANY_THROW(corpus::load(dir.path()));
  corpus::write(corpus::generate(1), dir.path());
  madp::testing::write_file(dir / "config.json", "{ broken");
  EXPECT_THROW(corpus::load(dir.path()), ParseError);
}

TEST_F(CorpusFixture, FullPipelineScoresEveryDocument) {
  const auto& r = full_->report;
  EXPECT_EQ(r.doc_count, 100u);
  EXPECT_DOUBLE_EQ(r.doc_accuracy, 1.0) << json(r.incorrect_docs).dump();
  EXPECT_NEAR(r.intervention_rate, 0.15, 1e-9);
  EXPECT_NEAR(r.token_reduction_pct, 35.0, 5.0);
  EXPECT_TRUE(r.unscored_docs.empty());
  EXPECT_NEAR(r.categories_ok, 20.0, 1e-9);
}

TEST_F(CorpusFixture, SplitterRecoversBatchPartitions) {
  for (const auto& batch : loaded_->batches) {
    const PipelineState* doc = full_->store.doc(batch.bundle_id);
    ASSERT_NE(doc, nullptr) << batch.bundle_id;
    ASSERT_EQ(doc->units.size(), batch.units.size()) << batch.bundle_id;
    for (std::size_t i = 0; i < batch.units.size(); ++i) {
      EXPECT_EQ(doc->units[i].unit_id, batch.units[i].unit_id);
      EXPECT_EQ(doc->units[i].start_page, batch.units[i].start_page);
      EXPECT_EQ(doc->units[i].end_page, batch.units[i].end_page);
    }
  }
}

TEST_F(CorpusFixture, TableCellsSurviveParsing) {
  int tables = 0;
  for (const auto& [id, doc] : full_->store.docs()) {
    if (doc.is_container() || !doc.parsed) continue;
    for (const auto& page : doc.pages)
      for (const auto& t : page.tables) {
        ++tables;
        for (const auto& cell : t.cells)
          if (!cell.empty()) {
            EXPECT_NE(doc.parsed->markdown.find(cell), std::string::npos) << id << " " << cell;
          }
      }
  }
  EXPECT_GT(tables, 0);
}

TEST_F(CorpusFixture, EveryDocumentReachesATerminalState) {
  for (const auto& [id, doc] : full_->store.docs())
    if (!doc.is_container()) {
      EXPECT_TRUE(doc.is_terminal()) << id;
    }
}

TEST_F(CorpusFixture, ParserAblationLowersAccuracy) {
  auto ablated = corpus::run_corpus(*loaded_, {"parser"}, {}, 4, "Without parser");
  EXPECT_LT(ablated.report.doc_accuracy, full_->report.doc_accuracy);
  EXPECT_EQ(ablated.report.token_reduction_pct, 0.0);
}

TEST_F(CorpusFixture, RunIsReproducible) {
  auto again = corpus::run_corpus(*loaded_);
  auto a = evaluation::to_json(again.report);
  auto b = evaluation::to_json(full_->report);
  a.erase("mean_seconds_per_doc");
  b.erase("mean_seconds_per_doc");
  EXPECT_EQ(a, b);
  // Workers interleave differently between runs, so compare outcomes rather
  // than sequence numbers.
  auto outcomes = [](const Store& s) {
    std::map<std::string, json> out;
    for (const auto& t : s.queue()) out[t.doc_id] = {t.status, s.doc(t.doc_id)->validation->routing.reasons};
    return out;
  };
  EXPECT_EQ(outcomes(again.store), outcomes(full_->store));
}
