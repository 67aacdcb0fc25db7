#include <gtest/gtest.h>

#include "madp/classificator.hpp"
#include "test_support.hpp"

using namespace madp;
using namespace madp::classificator;
using madp::testing::bundle_of;
using madp::testing::page_of;
using madp::testing::text_block;

namespace {

Page header_page(const std::string& supplier_line, const std::string& title) {
  return page_of({text_block(supplier_line, 0.05, 0.05, 0.6),
                  text_block(title, 0.05, 0.15, 0.6),
                  text_block("body text that should not matter", 0.05, 0.7)});
}

std::vector<CategorySignature> two_suppliers() {
  return train_signatures(
      {{bundle_of("a", {header_page("ACME Industrial Supplies S.p.A. Via Roma 1", "INVOICE")}),
        {"acme", DocType::invoice, 1}},
       {bundle_of("b", {header_page("Zeta Logistica Srl Corso Italia 9", "DELIVERY NOTE")}),
        {"zeta", DocType::delivery_note, 1}}});
}

}  // namespace

TEST(Crop, KeepsBlocksAboveTheFraction) {
  Page p = page_of({text_block("top", 0.1, 0.05), text_block("mid", 0.1, 0.39),
                    text_block("edge", 0.1, 0.40), text_block("low", 0.1, 0.8)});
  auto kept = crop_header(p, 0.4);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].text, "top");
  EXPECT_EQ(kept[1].text, "mid");
  EXPECT_EQ(crop_header(p, 1.0).size(), 4u);
  EXPECT_THROW(crop_header(p, 0.0), ValidationError);
  EXPECT_THROW(crop_header(p, 1.1), ValidationError);
}

TEST(Classify, EmptyHeaderIsUnknownWithZeroConfidence) {
  Page p = page_of({text_block("only body", 0.1, 0.8)});
  EXPECT_EQ(classify(p, two_suppliers(), PipelineConfig{}), CategoryLabel::unknown(0.0));
}

TEST(Classify, IdenticalHeaderScoresOne) {
  auto sigs = two_suppliers();
  auto label = classify(header_page("ACME Industrial Supplies S.p.A. Via Roma 1", "INVOICE"),
                        sigs, PipelineConfig{});
  EXPECT_EQ(label.supplier_id, "acme");
  EXPECT_EQ(label.doc_type, DocType::invoice);
  EXPECT_NEAR(label.confidence, 1.0, 1e-9);
}

TEST(Classify, UnrelatedHeaderFallsToUnknown) {
  auto label = classify(header_page("qqqq wwww", "xxxx"), two_suppliers(), PipelineConfig{});
  EXPECT_EQ(label.supplier_id, "unknown");
  EXPECT_EQ(label.doc_type, DocType::other);
  EXPECT_LT(label.confidence, kUnknownThreshold);
}

TEST(Classify, ConfidenceIsTheCosineOfTheBestCentroid) {
  auto sigs = two_suppliers();
  Page p = header_page("ACME Industrial Supplies", "INVOICE no. 7");
  auto label = classify(p, sigs, PipelineConfig{});
  auto bag = trigram_bag(crop_header(p, 0.4));
  double best = 0;
  for (const auto& s : sigs) best = std::max(best, cosine(bag, s.centroid));
  EXPECT_NEAR(label.confidence, best, 1e-12);
}

// Adding more of the signature's own header text never lowers similarity to it.
TEST(Classify, ConfidenceIsMonotoneInSharedHeaderText) {
  auto sigs = two_suppliers();
  const std::string full = "ACME Industrial Supplies S.p.A. Via Roma 1";
  double prev = -1;
  for (std::size_t len = 8; len <= full.size(); len += 6) {
    Page p = page_of({text_block(full.substr(0, len), 0.05, 0.05, 0.6),
                      text_block("INVOICE", 0.05, 0.15, 0.6)});
    auto bag = trigram_bag(crop_header(p, 0.4));
    double sim = cosine(bag, sigs[0].centroid);
    EXPECT_GE(sim + 1e-9, prev) << len;
    prev = sim;
  }
}

TEST(Signatures, JsonRoundTrip) {
  auto sigs = two_suppliers();
  std::vector<CategorySignature> back = json(sigs).get<std::vector<CategorySignature>>();
  EXPECT_EQ(back, sigs);
  double norm = 0;
  for (const auto& [_, x] : sigs[0].centroid) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(External, MapsWellFormedAnswer) {
  FunctionEndpoint ep([](const json& req) -> json {
    EXPECT_TRUE(req.contains("header_text"));
    return {{"supplier", "acme"}, {"doc_type", "invoice"}, {"confidence", 0.93}};
  });
  auto out = classify_external(header_page("ACME", "INVOICE"), std::nullopt, ep, PipelineConfig{},
                               RetryPolicy::no_wait());
  ASSERT_TRUE(out.label);
  EXPECT_EQ(*out.label, (CategoryLabel{"acme", DocType::invoice, 0.93}));
}

TEST(External, ThreeServerErrorsRouteToFallback) {
  int calls = 0;
  FunctionEndpoint ep([&](const json&) -> json {
    ++calls;
    throw RetriableError("HTTP 500");
  });
  auto out = classify_external(header_page("ACME", "INVOICE"), std::nullopt, ep, PipelineConfig{},
                               RetryPolicy::no_wait(3));
  EXPECT_EQ(calls, 3);
  EXPECT_FALSE(out.label);
  ASSERT_TRUE(out.fallback);
  EXPECT_EQ(out.fallback->route, Route::non_ai_fallback);
}

TEST(External, MissingConfidenceIsAnAdapterError) {
  FunctionEndpoint ep([](const json&) -> json {
    return {{"supplier", "acme"}, {"doc_type", "invoice"}};
  });
  EXPECT_THROW(classify_external(header_page("ACME", "INVOICE"), std::nullopt, ep,
                                 PipelineConfig{}, RetryPolicy::no_wait()),
               AdapterError);
}
