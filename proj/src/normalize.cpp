#include "madp/normalize.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace madp {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30,
                                            31, 31, 30, 31, 30, 31};
  if (m == 2 && leap(y)) return 29;
  return kDays[static_cast<std::size_t>(m - 1)];
}

std::optional<Date> make_date(int y, int m, int d) {
  if (y < 1000 || y > 9999 || m < 1 || m > 12 || d < 1) return std::nullopt;
  if (d > days_in_month(y, m)) return std::nullopt;
  return Date{y, m, d};
}

std::vector<std::string> split_any(std::string_view s, std::string_view seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string_view::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

int month_from_name(std::string name) {
  name = to_lower(name);
  if (!name.empty() && name.back() == '.') name.pop_back();
  static const std::array<std::array<const char*, 2>, 12> kNames{{
      {"january", "gennaio"},   {"february", "febbraio"}, {"march", "marzo"},
      {"april", "aprile"},      {"may", "maggio"},        {"june", "giugno"},
      {"july", "luglio"},       {"august", "agosto"},     {"september", "settembre"},
      {"october", "ottobre"},   {"november", "novembre"}, {"december", "dicembre"},
  }};
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    for (const char* n : kNames[i]) {
      std::string full = n;
      if (name == full || (name.size() >= 3 && full.rfind(name, 0) == 0))
        return static_cast<int>(i) + 1;
    }
  }
  return 0;
}

// Parse an unsigned decimal with the given separator into a value scaled by
// 10^decimals. Rejects more fractional digits than `decimals`.
std::optional<std::int64_t> scaled_decimal(std::string_view digits,
                                           char decimal_sep, int decimals) {
  std::int64_t whole = 0, frac = 0;
  int frac_digits = 0;
  bool seen_sep = false, any = false;
  for (char c : digits) {
    if (c == decimal_sep) {
      if (seen_sep) return std::nullopt;
      seen_sep = true;
      continue;
    }
    if (!is_digit(c)) return std::nullopt;
    any = true;
    if (seen_sep) {
      if (++frac_digits > decimals) return std::nullopt;
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > (std::int64_t{1} << 50)) return std::nullopt;
    }
  }
  if (!any) return std::nullopt;
  for (int i = frac_digits; i < decimals; ++i) frac *= 10;
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  return whole * scale + frac;
}

// Decide which of '.' / ',' is the decimal separator and strip the other.
std::optional<std::string> canonical_number(std::string s) {
  auto last_dot = s.rfind('.');
  auto last_comma = s.rfind(',');
  char dec = 0;
  if (last_dot != std::string::npos && last_comma != std::string::npos) {
    dec = last_dot > last_comma ? '.' : ',';
  } else if (last_dot != std::string::npos || last_comma != std::string::npos) {
    char sep = last_dot != std::string::npos ? '.' : ',';
    auto count = std::count(s.begin(), s.end(), sep);
    auto tail = s.size() - s.rfind(sep) - 1;
    dec = (count == 1 && tail != 3) ? sep : 0;
    // a single separator followed by exactly three digits is a thousands
    // grouping ("1.234", "1,234")
  }
  std::string out;
  for (char c : s) {
    if (c == '.' || c == ',') {
      if (c == dec) out.push_back('.');
    } else {
      out.push_back(c);
    }
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

std::optional<Date> parse_date(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;

  auto numeric = split_any(s, "-/.");
  if (numeric.size() == 3 && std::all_of(numeric.begin(), numeric.end(),
                                         [](const std::string& p) { return all_digits(p); })) {
    if (numeric[0].size() == 4)
      return make_date(std::stoi(numeric[0]), std::stoi(numeric[1]),
                       std::stoi(numeric[2]));
    if (numeric[2].size() == 4 && numeric[0].size() <= 2 && numeric[1].size() <= 2)
      return make_date(std::stoi(numeric[2]), std::stoi(numeric[1]),
                       std::stoi(numeric[0]));
    return std::nullopt;
  }

  auto words = split_any(s, " ,");
  if (words.size() == 3) {
    // "10 January 2026"
    if (all_digits(words[0]) && all_digits(words[2]) && words[2].size() == 4) {
      int m = month_from_name(words[1]);
      if (m) return make_date(std::stoi(words[2]), m, std::stoi(words[0]));
    }
    // "January 10, 2026"
    if (all_digits(words[1]) && all_digits(words[2]) && words[2].size() == 4) {
      int m = month_from_name(words[0]);
      if (m) return make_date(std::stoi(words[2]), m, std::stoi(words[1]));
    }
  }
  return std::nullopt;
}

std::optional<Money> parse_money(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;

  Money m;
  bool negative = false;
  if (s.front() == '(' && s.back() == ')') {
    negative = true;
    s = trim(std::string_view(s).substr(1, s.size() - 2));
  }

  // Currency: symbol or a three-letter code at either end.
  static const std::array<std::pair<const char*, const char*>, 4> kSymbols{{
      {"\xE2\x82\xAC", "EUR"}, {"$", "USD"}, {"\xC2\xA3", "GBP"}, {"CHF", "CHF"}}};
  for (const auto& [sym, code] : kSymbols) {
    auto pos = s.find(sym);
    if (pos != std::string::npos) {
      m.currency = code;
      s.erase(pos, std::string_view(sym).size());
      break;
    }
  }
  s = trim(s);
  if (m.currency.empty() && s.size() > 3) {
    auto head = s.substr(0, 3), tail = s.substr(s.size() - 3);
    if (std::all_of(head.begin(), head.end(), is_alpha)) {
      m.currency = to_upper(head);
      s = trim(std::string_view(s).substr(3));
    } else if (std::all_of(tail.begin(), tail.end(), is_alpha)) {
      m.currency = to_upper(tail);
      s = trim(std::string_view(s).substr(0, s.size() - 3));
    }
  }
  if (!s.empty() && s.front() == '-') {
    negative = !negative;
    s = trim(std::string_view(s).substr(1));
  }
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](char c) { return c == ' ' || c == '\'' ; }),
          s.end());
  auto number = canonical_number(s);
  if (!number) return std::nullopt;
  auto minor = scaled_decimal(*number, '.', 2);
  if (!minor) return std::nullopt;
  m.minor = negative ? -*minor : *minor;
  return m;
}

std::string format_fixed(std::int64_t scaled, int decimals) {
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  bool neg = scaled < 0;
  std::uint64_t a = neg ? static_cast<std::uint64_t>(-scaled)
                        : static_cast<std::uint64_t>(scaled);
  std::string out = (neg ? "-" : "") + std::to_string(a / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(a % scale);
    out += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  return out;
}

std::string format_minor(std::int64_t minor) { return format_fixed(minor, 2); }

namespace {

// Minimal decimal rendering: 2200 (hundredths) -> "22", 550 -> "5.5".
std::string format_trimmed(std::int64_t scaled, int decimals) {
  std::string s = format_fixed(scaled, decimals);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

std::optional<std::int64_t> parse_scaled(std::string_view raw, int decimals) {
  std::string s = trim(raw);
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s = trim(std::string_view(s).substr(1));
  }
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  auto number = canonical_number(s);
  if (!number) return std::nullopt;
  auto v = scaled_decimal(*number, '.', decimals);
  if (!v) return std::nullopt;
  return neg ? -*v : *v;
}

std::string field_as_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(15);
    os << j.get<double>();
    return os.str();
  }
  return {};
}

}  // namespace

std::optional<std::int64_t> parse_percentage(std::string_view raw) {
  std::string s = trim(raw);
  if (!s.empty() && s.back() == '%') s = trim(std::string_view(s).substr(0, s.size() - 1));
  if (s.empty()) return std::nullopt;
  return parse_scaled(s, 2);
}

std::optional<std::int64_t> parse_quantity(std::string_view raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  return parse_scaled(s, 3);
}

std::optional<std::vector<LineItem>> parse_line_items(std::string_view raw) {
  json j = json::parse(raw, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return std::nullopt;
  std::vector<LineItem> items;
  for (const auto& row : j) {
    if (!row.is_object()) return std::nullopt;
    LineItem li;
    li.description = collapse_whitespace(row.value("description", std::string{}));
    auto qty = parse_quantity(field_as_string(row.value("quantity", json("1"))));
    auto price = parse_money(field_as_string(row.value("unit_price", json("0"))));
    if (!row.contains("line_total")) return std::nullopt;
    auto total = parse_money(field_as_string(row.at("line_total")));
    if (!qty || !price || !total) return std::nullopt;
    li.quantity_milli = *qty;
    li.unit_price_minor = price->minor;
    li.line_total_minor = total->minor;
    items.push_back(std::move(li));
  }
  return items;
}

std::string canonical_line_items(const std::vector<LineItem>& items) {
  json arr = json::array();
  for (const auto& li : items) {
    arr.push_back(json{{"description", li.description},
                       {"quantity", format_trimmed(li.quantity_milli, 3)},
                       {"unit_price", li.unit_price_minor},
                       {"line_total", li.line_total_minor}});
  }
  return arr.dump();
}

std::string normalize_value(FieldKind kind, std::string_view raw) {
  switch (kind) {
    case FieldKind::date: {
      auto d = parse_date(raw);
      return d ? d->iso() : std::string{};
    }
    case FieldKind::money: {
      auto m = parse_money(raw);
      if (!m) return {};
      return std::to_string(m->minor) + (m->currency.empty() ? "" : " " + m->currency);
    }
    case FieldKind::percentage: {
      auto p = parse_percentage(raw);
      return p ? format_trimmed(*p, 2) : std::string{};
    }
    case FieldKind::quantity: {
      auto q = parse_quantity(raw);
      return q ? format_trimmed(*q, 3) : std::string{};
    }
    case FieldKind::currency_code: {
      std::string c = to_upper(trim(raw));
      bool ok = c.size() == 3 && std::all_of(c.begin(), c.end(), is_alpha);
      return ok ? c : std::string{};
    }
    case FieldKind::tax_id: {
      std::string out;
      for (char c : raw)
        if (!is_space(c) && c != '.' && c != '-') out.push_back(c);
      out = to_upper(out);
      bool ok = !out.empty() &&
                std::all_of(out.begin(), out.end(), [](char c) {
                  return std::isalnum(static_cast<unsigned char>(c));
                });
      return ok ? out : std::string{};
    }
    case FieldKind::line_items: {
      auto items = parse_line_items(raw);
      return items ? canonical_line_items(*items) : std::string{};
    }
    case FieldKind::text:
      return collapse_whitespace(raw);
  }
  return {};
}

std::string equality_key(FieldKind kind, const FieldValue& value) {
  if (value.missing) return std::string("\x01missing");
  if (kind == FieldKind::text) return to_lower(collapse_whitespace(value.raw));
  if (value.normalized.empty()) return "raw:" + trim(value.raw);
  if (kind == FieldKind::money) {
    // amounts agree regardless of whether a backend echoed the currency
    auto sp = value.normalized.find(' ');
    return value.normalized.substr(0, sp);
  }
  return value.normalized;
}

bool same_value(FieldKind kind, std::string_view a, std::string_view b) {
  FieldValue va, vb;
  va.raw = std::string(a);
  va.normalized = normalize_value(kind, a);
  vb.raw = std::string(b);
  vb.normalized = normalize_value(kind, b);
  return equality_key(kind, va) == equality_key(kind, vb);
}

std::optional<Money> money_from_normalized(std::string_view normalized) {
  if (normalized.empty()) return std::nullopt;
  std::string s(normalized);
  Money m;
  auto sp = s.find(' ');
  try {
    m.minor = std::stoll(s.substr(0, sp));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (sp != std::string::npos) m.currency = s.substr(sp + 1);
  return m;
}

}  // namespace madp
