#include <gtest/gtest.h>

#include "madp/config.hpp"
#include "test_support.hpp"

using namespace madp;
using madp::testing::TempDir;
using madp::testing::write_file;

TEST(Config, EmptyObjectYieldsDefaults) {
  TempDir dir;
  write_file(dir / "c.json", "{}");
  PipelineConfig c = load_config(dir / "c.json");
  EXPECT_EQ(c, PipelineConfig{});
  EXPECT_DOUBLE_EQ(c.confidence_threshold_default, 0.85);
  EXPECT_EQ(c.arithmetic_tolerance_minor_units, 2);
  EXPECT_EQ(c.max_examples, 8u);
  EXPECT_EQ(c.vat_table.at("IT").count("22"), 1u);
}

TEST(Config, OverrideInsideBandIsAccepted) {
  PipelineConfig c = config_from_json({{"confidence_threshold_default", 0.9}});
  EXPECT_DOUBLE_EQ(c.confidence_threshold_default, 0.9);
}

TEST(Config, OutOfRangeThresholdsAreRejected) {
  EXPECT_THROW(config_from_json({{"confidence_threshold_default", 1.5}}), ValidationError);
  EXPECT_THROW(config_from_json({{"confidence_threshold_default", 0.5}}), ValidationError);
  EXPECT_THROW(config_from_json({{"field_thresholds", {{"total_amount", -0.1}}}}),
               ValidationError);
  EXPECT_THROW(config_from_json({{"header_crop_fraction", 0.0}}), ValidationError);
  EXPECT_THROW(config_from_json({{"confidence_threshold_default", "high"}}), ValidationError);
}

TEST(Config, MalformedJsonReportsTheLine) {
  TempDir dir;
  write_file(dir / "c.json", "{\n  \"max_examples\": 4,\n  oops\n}\n");
  try {
    load_config(dir / "c.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Config, ThresholdPrecedenceFieldThenCategoryThenDefault) {
  PipelineConfig c;
  c.category_thresholds["acme:invoice"] = 0.88;
  c.field_thresholds["total_amount"] = 0.95;
  CategoryKey acme{"acme", DocType::invoice};
  CategoryKey other{"other", DocType::invoice};
  EXPECT_DOUBLE_EQ(c.threshold_for(acme, "total_amount"), 0.95);
  EXPECT_DOUBLE_EQ(c.threshold_for(acme, "invoice_number"), 0.88);
  EXPECT_DOUBLE_EQ(c.threshold_for(other, "invoice_number"), 0.85);
}

TEST(Config, CheckTogglesApplyToPrefixes) {
  PipelineConfig c;
  c.checks_enabled["format"] = false;
  c.checks_enabled["format.invoice_date"] = true;
  EXPECT_FALSE(c.check_enabled("format.total_amount"));
  EXPECT_TRUE(c.check_enabled("format.invoice_date"));
  EXPECT_TRUE(c.check_enabled("arithmetic.total"));
}

TEST(Config, JsonRoundTrip) {
  PipelineConfig c;
  c.category_thresholds["acme:invoice"] = 0.8;
  c.backends.push_back(BackendSpec{"b1", "scripted", "answers", 1000});
  c.signatures_path = "signatures.json";
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
}
