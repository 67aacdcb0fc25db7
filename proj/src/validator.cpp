#include "madp/validator.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>

#include "madp/normalize.hpp"

namespace madp::validator {

namespace {

const FieldValue* find_value(const std::vector<FieldValue>& fields, const std::string& name) {
  for (const auto& f : fields)
    if (f.field == name) return &f;
  return nullptr;
}

bool present(const FieldValue* v) { return v && !v->missing; }

struct CheckContext {
  const std::vector<FieldValue>& fields;
  const Schema& schema;
  const PipelineConfig& config;
  std::vector<CheckOutcome>& out;

  bool in_schema(std::initializer_list<const char*> names) const {
    for (const char* n : names)
      if (!find_field(schema, n)) return false;
    return true;
  }

  // Emits "skipped" and returns false when a prerequisite was not extracted.
  bool prerequisites(const std::string& id, std::vector<std::string> names) {
    std::vector<std::string> absent;
    for (const auto& n : names)
      if (!present(find_value(fields, n))) absent.push_back(n);
    if (absent.empty()) return true;
    std::string detail = "missing:";
    for (const auto& a : absent) detail += " " + a;
    out.push_back({id, CheckStatus::skipped, detail, names});
    return false;
  }

  void emit(const std::string& id, bool ok, std::string detail,
            std::vector<std::string> affected) {
    out.push_back({id, ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail),
                   std::move(affected)});
  }

  std::optional<std::int64_t> money(const std::string& name) const {
    auto m = money_from_normalized(find_value(fields, name)->normalized);
    if (!m) return std::nullopt;
    return m->minor;
  }
};

}  // namespace

const std::set<std::string>& iso4217_codes() {
  static const std::set<std::string> kCodes{
      "AED", "AFN", "ALL", "AMD", "ANG", "AOA", "ARS", "AUD", "AWG", "AZN", "BAM",
      "BBD", "BDT", "BGN", "BHD", "BIF", "BMD", "BND", "BOB", "BRL", "BSD", "BTN",
      "BWP", "BYN", "BZD", "CAD", "CDF", "CHF", "CLP", "CNY", "COP", "CRC", "CUP",
      "CVE", "CZK", "DJF", "DKK", "DOP", "DZD", "EGP", "ERN", "ETB", "EUR", "FJD",
      "FKP", "GBP", "GEL", "GHS", "GIP", "GMD", "GNF", "GTQ", "GYD", "HKD", "HNL",
      "HTG", "HUF", "IDR", "ILS", "INR", "IQD", "IRR", "ISK", "JMD", "JOD", "JPY",
      "KES", "KGS", "KHR", "KMF", "KPW", "KRW", "KWD", "KYD", "KZT", "LAK", "LBP",
      "LKR", "LRD", "LSL", "LYD", "MAD", "MDL", "MGA", "MKD", "MMK", "MNT", "MOP",
      "MRU", "MUR", "MVR", "MWK", "MXN", "MYR", "MZN", "NAD", "NGN", "NIO", "NOK",
      "NPR", "NZD", "OMR", "PAB", "PEN", "PGK", "PHP", "PKR", "PLN", "PYG", "QAR",
      "RON", "RSD", "RUB", "RWF", "SAR", "SBD", "SCR", "SDG", "SEK", "SGD", "SHP",
      "SLE", "SOS", "SRD", "SSP", "STN", "SVC", "SYP", "SZL", "THB", "TJS", "TMT",
      "TND", "TOP", "TRY", "TTD", "TWD", "TZS", "UAH", "UGX", "USD", "UYU", "UZS",
      "VED", "VES", "VND", "VUV", "WST", "XAF", "XCD", "XOF", "XPF", "YER", "ZAR",
      "ZMW", "ZWL"};
  return kCodes;
}

std::set<std::string> load_currency_codes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::set<std::string> codes;
  for (std::string line; std::getline(in, line);) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (!line.empty()) codes.insert(to_upper(line));
  }
  return codes;
}

bool tax_id_matches(const std::string& id, const std::string& country) {
  static const std::regex kItaly(R"(^(IT)?[0-9]{11}$)");
  static const std::regex kEu(R"(^[A-Z]{2}[0-9A-Z]{2,13}$)");
  if (country == "IT") return std::regex_match(id, kItaly);
  return std::regex_match(id, kEu);
}

std::string document_country(const std::vector<FieldValue>& fields,
                             const PipelineConfig& config) {
  if (auto c = find_value(fields, "country"); present(c)) {
    std::string v = to_upper(trim(c->raw));
    if (v.size() == 2) return v;
  }
  for (const auto& f : fields) {
    if (f.field.find("vat") != std::string::npos && f.field != "vat_rate" && !f.missing &&
        f.normalized.size() > 2 && std::isalpha(static_cast<unsigned char>(f.normalized[0])) &&
        std::isalpha(static_cast<unsigned char>(f.normalized[1])))
      return f.normalized.substr(0, 2);
  }
  return config.default_country;
}

std::vector<FieldValue> chosen_values(const std::vector<ConsensusRecord>& records) {
  std::vector<FieldValue> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.chosen);
  return out;
}

std::vector<CheckOutcome> run_checks(const std::vector<FieldValue>& fields,
                                     const Schema& schema, const PipelineConfig& config,
                                     const std::set<std::string>& currency_codes) {
  std::vector<CheckOutcome> out;
  CheckContext ctx{fields, schema, config, out};
  const std::string country = document_country(fields, config);

  // format checks
  for (const auto& fs : schema) {
    bool typed = fs.kind != FieldKind::text || fs.admissible_values;
    const std::string id = "format." + fs.name;
    if (!typed || !config.check_enabled(id)) continue;
    if (!ctx.prerequisites(id, {fs.name})) continue;
    const FieldValue& v = *find_value(fields, fs.name);
    bool ok = !v.normalized.empty();
    std::string detail = ok ? "parsed as " + to_string(fs.kind)
                            : "'" + v.raw + "' is not a valid " + to_string(fs.kind);
    if (ok && fs.kind == FieldKind::tax_id && !tax_id_matches(v.normalized, country)) {
      ok = false;
      detail = "'" + v.normalized + "' does not match the " + country + " tax id pattern";
    }
    if (ok && fs.admissible_values) {
      const auto& allowed = *fs.admissible_values;
      std::string probe = fs.kind == FieldKind::text ? collapse_whitespace(v.raw) : v.normalized;
      if (!allowed.count(probe)) {
        ok = false;
        detail = "'" + probe + "' is not an admissible value";
      }
    }
    ctx.emit(id, ok, detail, {fs.name});
  }

  const long tol = config.arithmetic_tolerance_minor_units;

  if (ctx.in_schema({"subtotal", "tax_amount", "total_amount"}) &&
      config.check_enabled("arithmetic") &&
      ctx.prerequisites("arithmetic", {"subtotal", "tax_amount", "total_amount"})) {
    auto sub = ctx.money("subtotal"), tax = ctx.money("tax_amount"),
         total = ctx.money("total_amount");
    std::vector<std::string> affected{"subtotal", "tax_amount", "total_amount"};
    if (!sub || !tax || !total) {
      ctx.emit("arithmetic", false, "amounts do not parse", affected);
    } else {
      std::int64_t diff = std::llabs(*sub + *tax - *total);
      ctx.emit("arithmetic", diff <= tol,
               format_minor(*sub) + " + " + format_minor(*tax) + " vs " +
                   format_minor(*total) + " (diff " + std::to_string(diff) +
                   " minor units, tolerance " + std::to_string(tol) + ")",
               affected);
    }
  }

  if (ctx.in_schema({"line_items", "subtotal"}) && config.check_enabled("line_items") &&
      ctx.prerequisites("line_items", {"line_items", "subtotal"})) {
    auto items = parse_line_items(find_value(fields, "line_items")->raw);
    auto sub = ctx.money("subtotal");
    std::vector<std::string> affected{"line_items", "subtotal"};
    if (!items || !sub) {
      ctx.emit("line_items", false, "line items or subtotal do not parse", affected);
    } else {
      std::int64_t sum = 0;
      for (const auto& li : *items) sum += li.line_total_minor;
      std::int64_t allowed = tol * std::max<std::int64_t>(1, static_cast<std::int64_t>(items->size()));
      std::int64_t diff = std::llabs(sum - *sub);
      ctx.emit("line_items", diff <= allowed,
               "sum of " + std::to_string(items->size()) + " lines " + format_minor(sum) +
                   " vs subtotal " + format_minor(*sub) + " (diff " +
                   std::to_string(diff) + ", tolerance " + std::to_string(allowed) + ")",
               affected);
    }
  }

  if (ctx.in_schema({"line_items", "total_quantity"}) &&
      config.check_enabled("quantity_total") &&
      ctx.prerequisites("quantity_total", {"line_items", "total_quantity"})) {
    auto items = parse_line_items(find_value(fields, "line_items")->raw);
    auto total = parse_quantity(find_value(fields, "total_quantity")->raw);
    std::vector<std::string> affected{"line_items", "total_quantity"};
    if (!items || !total) {
      ctx.emit("quantity_total", false, "quantities do not parse", affected);
    } else {
      std::int64_t sum = 0;
      for (const auto& li : *items) sum += li.quantity_milli;
      ctx.emit("quantity_total", sum == *total,
               "sum of line quantities " + format_fixed(sum, 3) + " vs " +
                   format_fixed(*total, 3),
               affected);
    }
  }

  if (ctx.in_schema({"invoice_date", "due_date"}) && config.check_enabled("date_order") &&
      ctx.prerequisites("date_order", {"invoice_date", "due_date"})) {
    auto issued = parse_date(find_value(fields, "invoice_date")->normalized);
    auto due = parse_date(find_value(fields, "due_date")->normalized);
    std::vector<std::string> affected{"invoice_date", "due_date"};
    if (!issued || !due)
      ctx.emit("date_order", false, "dates do not parse", affected);
    else
      ctx.emit("date_order", *issued <= *due,
               "invoice " + issued->iso() + ", due " + due->iso(), affected);
  }

  if (ctx.in_schema({"vat_rate"}) && config.check_enabled("vat_rate") &&
      ctx.prerequisites("vat_rate", {"vat_rate"})) {
    auto rate = parse_percentage(find_value(fields, "vat_rate")->raw);
    auto table = config.vat_table.find(country);
    if (table == config.vat_table.end()) {
      out.push_back({"vat_rate", CheckStatus::skipped,
                     "no VAT table for country " + country, {"vat_rate"}});
    } else {
      bool ok = false;
      for (const auto& legal : table->second) {
        auto l = parse_percentage(legal);
        if (rate && l && *l == *rate) ok = true;
      }
      ctx.emit("vat_rate", ok,
               (rate ? format_fixed(*rate, 2) : std::string("unparseable")) +
                   "% against the " + country + " VAT table",
               {"vat_rate"});
    }
  }

  if (ctx.in_schema({"currency"}) && config.check_enabled("currency") &&
      ctx.prerequisites("currency", {"currency"})) {
    std::string code = to_upper(trim(find_value(fields, "currency")->raw));
    bool ok = currency_codes.count(code) > 0;
    ctx.emit("currency", ok, code + (ok ? " is" : " is not") + " an ISO 4217 code",
             {"currency"});
  }
  return out;
}

std::vector<FieldValue> elevate_confidence(const std::vector<FieldValue>& fields,
                                           const std::vector<CheckOutcome>& outcomes) {
  std::map<std::string, std::pair<int, int>> tally;  // field -> (passes, fails)
  for (const auto& o : outcomes) {
    if (o.status == CheckStatus::skipped) continue;
    for (const auto& f : o.affected_fields)
      (o.status == CheckStatus::pass ? tally[f].first : tally[f].second)++;
  }
  std::vector<FieldValue> out = fields;
  for (auto& f : out) {
    auto it = tally.find(f.field);
    if (it == tally.end() || f.missing) continue;
    if (it->second.first > 0 && it->second.second == 0)
      f.confidence = std::max(f.confidence, kElevatedConfidence);
  }
  return out;
}

RoutingDecision route(const std::vector<FieldValue>& adjusted,
                      const std::vector<ConsensusRecord>& records,
                      const std::vector<CheckOutcome>& outcomes, const Schema& schema,
                      const CategoryKey& category, const PipelineConfig& config,
                      const std::vector<std::string>& extra_reasons) {
  RoutingDecision d;
  d.reasons = extra_reasons;
  for (const auto& o : outcomes)
    if (o.status == CheckStatus::fail) d.reasons.push_back("check " + o.check_id + " failed");
  for (const auto& r : records)
    if (r.flagged) d.reasons.push_back("consensus split on " + r.field);
  for (const auto& fs : schema) {
    if (!fs.required) continue;
    const FieldValue* v = find_value(adjusted, fs.name);
    double threshold = config.threshold_for(category, fs.name);
    if (!v || v->missing) {
      d.reasons.push_back("required field " + fs.name + " missing");
    } else if (v->confidence < threshold) {
      d.reasons.push_back("field " + fs.name + " confidence " +
                          std::to_string(v->confidence).substr(0, 4) + " below " +
                          std::to_string(threshold).substr(0, 4));
    }
  }
  d.route = d.reasons.empty() ? Route::auto_accept : Route::human_review;
  return d;
}

ValidationReport validate(const std::string& doc_id,
                          const std::vector<ConsensusRecord>& records,
                          const Schema& schema, const CategoryKey& category,
                          const PipelineConfig& config,
                          const std::vector<std::string>& extra_reasons) {
  ValidationReport report;
  report.doc_id = doc_id;
  auto fields = chosen_values(records);
  report.outcomes = run_checks(fields, schema, config);
  report.adjusted = elevate_confidence(fields, report.outcomes);
  report.routing = route(report.adjusted, records, report.outcomes, schema, category,
                         config, extra_reasons);
  return report;
}

}  // namespace madp::validator
