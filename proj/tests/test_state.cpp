#include <gtest/gtest.h>

#include "madp/state.hpp"
#include "test_support.hpp"

using namespace madp;
using madp::testing::bundle_of;
using madp::testing::page_of;
using madp::testing::text_block;
using madp::testing::value;

namespace {

PipelineState two_pages() {
  return make_ingested(bundle_of("d1", {page_of({text_block("a", 0.1, 0.1)}),
                                        page_of({text_block("b", 0.1, 0.1)})}));
}

CategoryLabel acme() { return {"acme", DocType::invoice, 0.9}; }

PipelineState through_extraction() {
  auto s = two_pages();
  s = advance_state(s, ClassifierOutput{{acme(), acme()}});
  s = advance_state(s, SplitterOutput{{LogicalUnit{"d1", 0, 1, acme()}}, false});
  s = advance_state(s, ParserOutput{ParsedDoc{"d1", "a\n\nb", {}, 2, 2, "p1"}, false});
  ConsensusRecord r{"invoice_number", value("invoice_number", "INV-1"), Agreement::unanimous,
                    false};
  return advance_state(s, ExtractionOutput{{r}, "v1", false, ""});
}

ValidationReport report_with(Route route) {
  ValidationReport r;
  r.doc_id = "d1";
  r.routing.route = route;
  return r;
}

}  // namespace

TEST(State, HappyPathReachesAccepted) {
  auto s = through_extraction();
  EXPECT_EQ(s.stage, Stage::extracted);
  s = advance_state(s, ValidationOutput{report_with(Route::auto_accept)});
  EXPECT_EQ(s.stage, Stage::validated);
  s = advance_state(s, Finalize{});
  EXPECT_EQ(s.stage, Stage::accepted);
  EXPECT_TRUE(s.is_terminal());
}

TEST(State, RoutingSelectsTerminalStage) {
  auto base = through_extraction();
  EXPECT_EQ(advance_state(advance_state(base, ValidationOutput{report_with(Route::human_review)}),
                          Finalize{})
                .stage,
            Stage::in_review);
  EXPECT_EQ(advance_state(advance_state(base, ValidationOutput{report_with(Route::non_ai_fallback)}),
                          Finalize{})
                .stage,
            Stage::fallback);
}

TEST(State, OutOfOrderOutputIsAMismatch) {
  auto s = two_pages();
  EXPECT_THROW(advance_state(s, Finalize{}), StateMismatchError);
  EXPECT_THROW(advance_state(s, ParserOutput{}), StateMismatchError);
  auto done = advance_state(advance_state(through_extraction(),
                                          ValidationOutput{report_with(Route::auto_accept)}),
                            Finalize{});
  EXPECT_THROW(advance_state(done, FallbackOutput{{"late"}}), StateMismatchError);
  EXPECT_THROW(advance_state(done, ReviewUpdate{}), StateMismatchError);
}

TEST(State, ClassifierNeedsOneLabelPerPage) {
  EXPECT_THROW(advance_state(two_pages(), ClassifierOutput{{acme()}}), ValidationError);
}

TEST(State, ContainerStopsAtSplitAndSpawnsUnits) {
  auto s = advance_state(two_pages(), ClassifierOutput{{acme(), acme()}});
  s = advance_state(s, SplitterOutput{{LogicalUnit{"d1.1", 0, 0, acme()},
                                       LogicalUnit{"d1.2", 1, 1, acme()}},
                                      false});
  EXPECT_TRUE(s.is_container());
  EXPECT_TRUE(s.is_terminal());
  EXPECT_THROW(advance_state(s, ParserOutput{}), StateMismatchError);
  auto unit = make_unit(s, s.units[1]);
  EXPECT_EQ(unit.stage, Stage::split);
  EXPECT_EQ(unit.parent, std::optional<std::string>("d1"));
  ASSERT_EQ(unit.pages.size(), 1u);
  EXPECT_EQ(unit.pages[0].index, 0);
  EXPECT_EQ(unit.pages[0].blocks[0].text, "b");
  EXPECT_THROW(make_unit(s, LogicalUnit{"bad", 1, 2, acme()}), ValidationError);
}

TEST(State, ConfirmAcceptsAndRaisesConfidence) {
  auto s = advance_state(advance_state(through_extraction(),
                                       ValidationOutput{report_with(Route::human_review)}),
                         Finalize{});
  ReviewUpdate u;
  u.confirm = true;
  s = advance_state(s, u);
  EXPECT_EQ(s.stage, Stage::accepted);
  EXPECT_DOUBLE_EQ(s.extraction[0].chosen.confidence, 1.0);
}

TEST(State, AutoResolveOnlyWhenReportAccepts) {
  auto s = advance_state(advance_state(through_extraction(),
                                       ValidationOutput{report_with(Route::human_review)}),
                         Finalize{});
  ReviewUpdate still;
  still.auto_resolve = true;
  still.report = report_with(Route::human_review);
  EXPECT_EQ(advance_state(s, still).stage, Stage::in_review);
  ReviewUpdate ok = still;
  ok.report = report_with(Route::auto_accept);
  EXPECT_EQ(advance_state(s, ok).stage, Stage::accepted);
}

TEST(State, StageOutputJsonRoundTrip) {
  ReviewUpdate u;
  u.records.push_back({"total_amount", value("total_amount", "10.00"), Agreement::majority, true});
  u.report = report_with(Route::auto_accept);
  u.inheritance_round = 2;
  std::vector<StageOutput> outs{ClassifierOutput{{acme()}},
                                SplitterOutput{{LogicalUnit{"u", 0, 0, acme()}}, true},
                                Finalize{}, FallbackOutput{{"x"}}, u};
  for (const auto& o : outs) {
    json j = o;
    StageOutput back = j.get<StageOutput>();
    EXPECT_EQ(json(back), j);
    EXPECT_EQ(j["output"], stage_output_kind(o));
  }
}
