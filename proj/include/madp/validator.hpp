#pragma once

// Format and atomic consistency checks over an extracted field set,
// confidence elevation for fields whose checks all pass, and routing.
//
// Checks address fields by conventional names: subtotal, tax_amount,
// total_amount, invoice_date, due_date, vat_rate, currency, country,
// line_items, total_quantity. A check runs only when its fields are in the
// schema, and is skipped when one of them was not extracted.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "madp/config.hpp"
#include "madp/types.hpp"

namespace madp::validator {

inline constexpr double kElevatedConfidence = 0.99;

/// Active ISO 4217 alphabetic codes.
const std::set<std::string>& iso4217_codes();
/// One code per line; '#' starts a comment.
std::set<std::string> load_currency_codes(const std::filesystem::path& path);

/// IT: optional "IT" + 11 digits. Elsewhere: two letters + 2..13 alphanumerics.
bool tax_id_matches(const std::string& normalized_tax_id, const std::string& country);

/// Country for VAT/tax-id rules: the "country" field, else a two-letter
/// tax-id prefix, else config.default_country.
std::string document_country(const std::vector<FieldValue>& fields,
                             const PipelineConfig& config);

std::vector<FieldValue> chosen_values(const std::vector<ConsensusRecord>& records);

/// Runs, in order: format.<field> checks, arithmetic, line_items,
/// quantity_total, date_order, vat_rate, currency.
std::vector<CheckOutcome> run_checks(const std::vector<FieldValue>& fields,
                                     const Schema& schema,
                                     const PipelineConfig& config,
                                     const std::set<std::string>& currency_codes = iso4217_codes());

/// Fields covered only by passing checks rise to max(c, 0.99); fields in a
/// failing check or in no check are untouched.
std::vector<FieldValue> elevate_confidence(const std::vector<FieldValue>& fields,
                                           const std::vector<CheckOutcome>& outcomes);

/// auto_accept iff no failing check, no consensus flag, no extra reason and
/// every required field meets its effective threshold; else human_review.
RoutingDecision route(const std::vector<FieldValue>& adjusted,
                      const std::vector<ConsensusRecord>& records,
                      const std::vector<CheckOutcome>& outcomes, const Schema& schema,
                      const CategoryKey& category, const PipelineConfig& config,
                      const std::vector<std::string>& extra_reasons = {});

/// run_checks + elevate_confidence + route.
ValidationReport validate(const std::string& doc_id,
                          const std::vector<ConsensusRecord>& records,
                          const Schema& schema, const CategoryKey& category,
                          const PipelineConfig& config,
                          const std::vector<std::string>& extra_reasons = {});

}  // namespace madp::validator
