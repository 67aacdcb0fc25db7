#include <gtest/gtest.h>

#include "madp/validator.hpp"
#include "test_support.hpp"

using namespace madp;
using namespace madp::validator;

namespace {

FieldValue fv(const std::string& field, const std::string& raw, FieldKind kind,
              double conf = 0.9) {
  return madp::testing::value(field, raw, conf, kind);
}

Schema invoice() { return default_schemas().at(DocType::invoice); }

std::vector<FieldValue> clean_invoice() {
  return {fv("invoice_number", "INV-42", FieldKind::text),
          fv("invoice_date", "10/01/2026", FieldKind::date),
          fv("due_date", "2026-02-10", FieldKind::date),
          fv("supplier_name", "ACME srl", FieldKind::text),
          fv("supplier_vat", "IT01234567890", FieldKind::tax_id),
          fv("currency", "EUR", FieldKind::currency_code),
          fv("subtotal", "100.00", FieldKind::money),
          fv("vat_rate", "22", FieldKind::percentage),
          fv("tax_amount", "22.00", FieldKind::money),
          fv("total_amount", "122.00", FieldKind::money)};
}

void set(std::vector<FieldValue>& fields, const std::string& name, const std::string& raw,
         FieldKind kind) {
  for (auto& f : fields)
    if (f.field == name) f = fv(name, raw, kind, f.confidence);
}

const CheckOutcome& outcome(const std::vector<CheckOutcome>& out, const std::string& id) {
  for (const auto& o : out)
    if (o.check_id == id) return o;
  throw std::runtime_error("no outcome " + id);
}

std::vector<ConsensusRecord> records_of(const std::vector<FieldValue>& fields) {
  std::vector<ConsensusRecord> out;
  for (const auto& f : fields) out.push_back({f.field, f, Agreement::unanimous, false});
  return out;
}

}  // namespace

TEST(Checks, CleanInvoicePassesEverything) {
  auto out = run_checks(clean_invoice(), invoice(), PipelineConfig{});
  for (const auto& o : out)
    if (o.check_id != "format.line_items") {
      EXPECT_NE(o.status, CheckStatus::fail) << o.check_id << ": " << o.detail;
    }
  EXPECT_EQ(outcome(out, "arithmetic").status, CheckStatus::pass);
  EXPECT_EQ(outcome(out, "vat_rate").status, CheckStatus::pass);
  EXPECT_EQ(outcome(out, "currency").status, CheckStatus::pass);
  EXPECT_EQ(outcome(out, "date_order").status, CheckStatus::pass);
}

TEST(Checks, ArithmeticToleranceIsTwoMinorUnits) {
  for (auto [total, status] : std::vector<std::pair<std::string, CheckStatus>>{
           {"122.02", CheckStatus::pass}, {"121.98", CheckStatus::pass},
           {"122.03", CheckStatus::fail}, {"123.00", CheckStatus::fail}}) {
    auto f = clean_invoice();
    set(f, "total_amount", total, FieldKind::money);
    EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "arithmetic").status, status)
        << total;
  }
}

TEST(Checks, MissingPrerequisiteSkips) {
  auto f = clean_invoice();
  f.erase(std::remove_if(f.begin(), f.end(),
                         [](const FieldValue& v) { return v.field == "tax_amount"; }),
          f.end());
  auto o = outcome(run_checks(f, invoice(), PipelineConfig{}), "arithmetic");
  EXPECT_EQ(o.status, CheckStatus::skipped);
}

TEST(Checks, VatRateAgainstCountryTable) {
  auto f = clean_invoice();
  set(f, "vat_rate", "21%", FieldKind::percentage);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "vat_rate").status,
            CheckStatus::fail);
  set(f, "vat_rate", "10%", FieldKind::percentage);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "vat_rate").status,
            CheckStatus::pass);
  set(f, "supplier_vat", "DE123456789", FieldKind::tax_id);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "vat_rate").status,
            CheckStatus::skipped);
}

TEST(Checks, CurrencyMustBeIso4217) {
  auto f = clean_invoice();
  set(f, "currency", "EURO", FieldKind::currency_code);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "currency").status,
            CheckStatus::fail);
  EXPECT_TRUE(iso4217_codes().count("USD"));
}

TEST(Checks, DueDateBeforeIssueFails) {
  auto f = clean_invoice();
  set(f, "due_date", "09/01/2026", FieldKind::date);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "date_order").status,
            CheckStatus::fail);
  set(f, "due_date", "10/01/2026", FieldKind::date);
  EXPECT_EQ(outcome(run_checks(f, invoice(), PipelineConfig{}), "date_order").status,
            CheckStatus::pass);
}

TEST(Checks, FormatChecksCatchUnparseableValues) {
  auto f = clean_invoice();
  set(f, "invoice_date", "31/02/2026", FieldKind::date);
  set(f, "supplier_vat", "IT123", FieldKind::tax_id);
  auto out = run_checks(f, invoice(), PipelineConfig{});
  EXPECT_EQ(outcome(out, "format.invoice_date").status, CheckStatus::fail);
  EXPECT_EQ(outcome(out, "format.supplier_vat").status, CheckStatus::fail);
  EXPECT_EQ(outcome(out, "format.total_amount").status, CheckStatus::pass);
}

TEST(Checks, DisabledChecksDoNotRun) {
  PipelineConfig c;
  c.checks_enabled["arithmetic"] = false;
  auto f = clean_invoice();
  set(f, "total_amount", "999.00", FieldKind::money);
  for (const auto& o : run_checks(f, invoice(), c)) EXPECT_NE(o.check_id, "arithmetic");
}

TEST(Checks, LineItemsAndQuantityTotals) {
  Schema dn = default_schemas().at(DocType::delivery_note);
  std::string items =
      R"([{"description":"a","quantity":"2","unit_price":"1.00","line_total":"2.00"},
          {"description":"b","quantity":"3.5","unit_price":"1.00","line_total":"3.50"}])";
  std::vector<FieldValue> f{fv("line_items", items, FieldKind::line_items),
                            fv("total_quantity", "5.5", FieldKind::quantity)};
  EXPECT_EQ(outcome(run_checks(f, dn, PipelineConfig{}), "quantity_total").status,
            CheckStatus::pass);
  f[1] = fv("total_quantity", "6", FieldKind::quantity);
  EXPECT_EQ(outcome(run_checks(f, dn, PipelineConfig{}), "quantity_total").status,
            CheckStatus::fail);

  auto inv = clean_invoice();
  inv.push_back(fv("line_items",
                   R"([{"description":"a","quantity":1,"unit_price":"60.00","line_total":"60.00"},
                       {"description":"b","quantity":1,"unit_price":"40.01","line_total":"40.01"}])",
                   FieldKind::line_items));
  EXPECT_EQ(outcome(run_checks(inv, invoice(), PipelineConfig{}), "line_items").status,
            CheckStatus::pass);
}

TEST(Elevation, OnlyFieldsWithPassingChecksRise) {
  std::vector<FieldValue> fields{fv("subtotal", "100.00", FieldKind::money, 0.6),
                                 fv("tax_amount", "22.00", FieldKind::money, 0.7),
                                 fv("total_amount", "122.00", FieldKind::money, 0.95),
                                 fv("invoice_number", "A", FieldKind::text, 0.5)};
  std::vector<CheckOutcome> pass{{"arithmetic", CheckStatus::pass, "", {"subtotal", "tax_amount", "total_amount"}}};
  auto up = elevate_confidence(fields, pass);
  EXPECT_DOUBLE_EQ(up[0].confidence, 0.99);
  EXPECT_DOUBLE_EQ(up[1].confidence, 0.99);
  EXPECT_DOUBLE_EQ(up[2].confidence, 0.99);
  EXPECT_DOUBLE_EQ(up[3].confidence, 0.5);

  auto mixed = pass;
  mixed.push_back({"format.total_amount", CheckStatus::fail, "", {"total_amount"}});
  auto m = elevate_confidence(fields, mixed);
  EXPECT_DOUBLE_EQ(m[2].confidence, 0.95);
  EXPECT_DOUBLE_EQ(m[0].confidence, 0.99);

  std::vector<CheckOutcome> skipped{{"arithmetic", CheckStatus::skipped, "", {"subtotal"}}};
  EXPECT_DOUBLE_EQ(elevate_confidence(fields, skipped)[0].confidence, 0.6);
}

TEST(Routing, CleanHighConfidenceAutoAccepts) {
  auto r = validate("d", records_of(clean_invoice()), invoice(), {"acme", DocType::invoice},
                    PipelineConfig{});
  EXPECT_EQ(r.routing.route, Route::auto_accept) << ::testing::PrintToString(r.routing.reasons);
}

TEST(Routing, LowConfidenceUncheckedFieldGoesToReview) {
  auto f = clean_invoice();
  f[0].confidence = 0.3;  // invoice_number: text, covered by no check
  auto r = validate("d", records_of(f), invoice(), {"acme", DocType::invoice}, PipelineConfig{});
  EXPECT_EQ(r.routing.route, Route::human_review);
  ASSERT_EQ(r.routing.reasons.size(), 1u);
  EXPECT_NE(r.routing.reasons[0].find("invoice_number"), std::string::npos);
}

TEST(Routing, LowConfidenceRescuedByPassingCheck) {
  auto f = clean_invoice();
  for (auto& v : f)
    if (v.field == "total_amount") v.confidence = 0.5;
  auto r = validate("d", records_of(f), invoice(), {"acme", DocType::invoice}, PipelineConfig{});
  EXPECT_EQ(r.routing.route, Route::auto_accept);
}

TEST(Routing, FailedCheckFlagMissingAndExtraReasonsAllBlock) {
  auto f = clean_invoice();
  set(f, "total_amount", "123.00", FieldKind::money);
  EXPECT_EQ(validate("d", records_of(f), invoice(), {"a", DocType::invoice}, PipelineConfig{})
                .routing.route,
            Route::human_review);

  auto recs = records_of(clean_invoice());
  recs[0].flagged = true;
  EXPECT_EQ(validate("d", recs, invoice(), {"a", DocType::invoice}, PipelineConfig{}).routing.route,
            Route::human_review);

  auto g = clean_invoice();
  g[0] = madp::testing::missing("invoice_number");
  EXPECT_EQ(validate("d", records_of(g), invoice(), {"a", DocType::invoice}, PipelineConfig{})
                .routing.route,
            Route::human_review);

  auto x = validate("d", records_of(clean_invoice()), invoice(), {"a", DocType::invoice},
                    PipelineConfig{}, {"split ambiguous"});
  EXPECT_EQ(x.routing.route, Route::human_review);
  EXPECT_EQ(x.routing.reasons.front(), "split ambiguous");
}

TEST(Routing, CategoryThresholdOverridesDefault) {
  auto f = clean_invoice();
  f[0].confidence = 0.82;
  PipelineConfig c;
  c.category_thresholds["acme:invoice"] = 0.8;
  EXPECT_EQ(validate("d", records_of(f), invoice(), {"acme", DocType::invoice}, c).routing.route,
            Route::auto_accept);
  EXPECT_EQ(validate("d", records_of(f), invoice(), {"zeta", DocType::invoice}, c).routing.route,
            Route::human_review);
}

TEST(TaxId, CountryPatterns) {
  EXPECT_TRUE(tax_id_matches("IT01234567890", "IT"));
  EXPECT_TRUE(tax_id_matches("01234567890", "IT"));
  EXPECT_FALSE(tax_id_matches("IT0123456789", "IT"));
  EXPECT_TRUE(tax_id_matches("DE123456789", "DE"));
  EXPECT_FALSE(tax_id_matches("D1", "DE"));
}
