#pragma once

// Canonical forms for extracted values. Consensus, validation, error
// classification and scoring all compare values through these functions, so
// "10/01/2026" and "2026-01-10" are the same date everywhere.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "madp/types.hpp"

namespace madp {

struct Date {
  int year = 0, month = 0, day = 0;
  auto operator<=>(const Date&) const = default;
  std::string iso() const;
};

struct Money {
  std::int64_t minor = 0;  // cents; two minor digits for every currency
  std::string currency;    // ISO code when the raw value carried one
  bool operator==(const Money&) const = default;
};

struct LineItem {
  std::string description;
  std::int64_t quantity_milli = 0;
  std::int64_t unit_price_minor = 0;
  std::int64_t line_total_minor = 0;
  bool operator==(const LineItem&) const = default;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
/// Collapse every whitespace run to one space and trim.
std::string collapse_whitespace(std::string_view s);

/// ISO yyyy-mm-dd, European dd/mm/yyyy (also '.' and '-'), yyyy/mm/dd and
/// "10 January 2026" / "January 10, 2026" (English and Italian month names).
std::optional<Date> parse_date(std::string_view raw);

/// Amounts with optional currency symbol or ISO code, either decimal
/// convention ("1.234,56" or "1,234.56"), leading minus or parentheses.
std::optional<Money> parse_money(std::string_view raw);
std::string format_minor(std::int64_t minor);

/// Percentages in hundredths of a percent: "22%" -> 2200.
std::optional<std::int64_t> parse_percentage(std::string_view raw);
/// Decimal quantity in thousandths: "2.5" -> 2500.
std::optional<std::int64_t> parse_quantity(std::string_view raw);
std::string format_fixed(std::int64_t scaled, int decimals);

/// JSON array of {description, quantity, unit_price, line_total}.
std::optional<std::vector<LineItem>> parse_line_items(std::string_view raw);
std::string canonical_line_items(const std::vector<LineItem>& items);

/// Canonical string for a raw value of the given kind; empty when a typed
/// kind does not parse.
std::string normalize_value(FieldKind kind, std::string_view raw);

/// Key under which two values of the same field count as equal: normalized
/// form, with text case-folded. Missing values share a single key.
std::string equality_key(FieldKind kind, const FieldValue& value);
/// Same relation for two raw strings.
bool same_value(FieldKind kind, std::string_view a, std::string_view b);

/// Money stored in a FieldValue's normalized form ("12200 EUR" or "12200").
std::optional<Money> money_from_normalized(std::string_view normalized);

}  // namespace madp
