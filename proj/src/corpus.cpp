#include "madp/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "madp/normalize.hpp"
#include "madp/parser.hpp"

namespace madp::corpus {

namespace {

constexpr int kSuppliers = 20;
constexpr int kDocsPerSupplier = 5;
constexpr int kFirstDeliverySupplier = 16;
constexpr double kBaseConfidence = 0.9;

const char* const kSupplierNames[kSuppliers] = {
    "Alpina Forniture Srl",       "Bertolini Meccanica SpA",  "Cantieri Navali Ligure Srl",
    "Delta Informatica Srl",      "Elettroveneta SpA",        "Ferramenta Zanetti Snc",
    "Grafiche Orobiche Srl",      "Hotel Supply Italia Srl",  "Idraulica Bresciana Srl",
    "Jolly Packaging SpA",        "Konsulta Studio Associato", "Lavanderie Riunite Srl",
    "Molini del Po SpA",          "Nord Est Logistica Srl",   "Officine Ottiche Marchi Srl",
    "Plastiche Adriatiche SpA",   "Quadrifoglio Trasporti Srl", "Rete Ricambi Auto Srl",
    "Sementi Toscane Coop",       "Tessitura Valseriana SpA"};

const char* const kCities[] = {"Milano",  "Torino",  "Genova",  "Bologna", "Verona",
                               "Padova",  "Bergamo", "Brescia", "Firenze", "Parma"};
const char* const kStreets[] = {"Via Roma",      "Corso Italia",   "Via Garibaldi",
                                "Viale Europa",  "Via Mazzini",    "Via dell'Industria",
                                "Via Cavour",    "Largo Augusto"};
const char* const kCustomers[] = {"Rossi Costruzioni Srl", "Bianchi Alimentari SpA",
                                  "Verdi Hotel Group Srl", "Gallo Trasporti Snc",
                                  "Conti Arredamenti Srl", "Greco Servizi SpA"};
const char* const kItems[] = {"Steel brackets",      "Copy paper A4",       "Hydraulic valve",
                              "Network switch",      "Cleaning service",    "Pallet wrap film",
                              "LED panel 60x60",     "Printer toner",       "Safety gloves",
                              "Consulting hours",    "Cotton towels",       "Flour type 00",
                              "Spare brake pads",    "Seed mix",            "Wool yarn"};
const char* const kBoilerplate[] = {
    "Goods remain the property of the seller until full payment is received.",
    "Late payments accrue statutory interest as provided by applicable law.",
    "Any complaint about delivered goods must be raised within eight days of receipt.",
    "The competent court for any dispute is the court of the seller's registered office.",
    "This document is issued electronically and transmitted through the exchange system.",
    "Personal data are processed according to the privacy notice available on request.",
    "Share capital fully paid, registered with the chamber of commerce."};

/// mt19937_64 output is fixed by the standard; the std distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }
  int between(int lo, int hi) { return lo + below(hi - lo + 1); }

 private:
  std::mt19937_64 gen_;
};

std::string pad(int n, int width) {
  std::ostringstream out;
  out << std::setw(width) << std::setfill('0') << n;
  return out.str();
}

std::string money(std::int64_t minor, bool european) {
  std::string digits = std::to_string(minor / 100);
  std::string grouped;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) grouped += european ? '.' : ',';
    grouped += digits[i];
  }
  return grouped + (european ? ',' : '.') + pad(static_cast<int>(minor % 100), 2);
}

std::string date_text(const Date& d, bool iso) {
  if (iso) return d.iso();
  return pad(d.day, 2) + "/" + pad(d.month, 2) + "/" + std::to_string(d.year);
}

Date add_days(Date d, int days) {
  static const int kLen[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  d.day += days;
  while (d.day > kLen[d.month - 1]) {
    d.day -= kLen[d.month - 1];
    if (++d.month > 12) {
      d.month = 1;
      ++d.year;
    }
  }
  return d;
}

TextBlock block(std::string text, double x0, double y0, double x1, double y1,
                double font = 10.0) {
  return TextBlock{std::move(text), x0, y0, x1, y1, font};
}

struct Supplier {
  std::string id;
  std::string name;
  std::string address;
  std::string vat;
  DocType doc_type = DocType::invoice;
  bool european = true;
  bool iso_dates = false;
  bool two_column = false;
};

struct Item {
  std::string description;
  int quantity = 1;
  std::int64_t unit_minor = 0;
};

// One logical document before it is placed in a bundle.
struct Draft {
  DocSpec spec;
  Supplier supplier;
  std::vector<std::pair<std::string, std::string>> fields;  // name -> printed value
  std::vector<std::pair<std::string, std::string>> evidence;
  std::vector<Page> pages;
};

std::string value_of(const Draft& d, const std::string& name) {
  for (const auto& [k, v] : d.fields)
    if (k == name) return v;
  return {};
}

std::vector<TextBlock> header_blocks(const Supplier& s, bool first_page) {
  std::vector<TextBlock> out{block(s.name, 0.05, 0.03, 0.55, 0.06, 16.0),
                             block(s.address, 0.05, 0.07, 0.55, 0.09, 9.0),
                             block("VAT " + s.vat, 0.05, 0.10, 0.55, 0.115, 9.0)};
  if (first_page)
    out.push_back(block(s.doc_type == DocType::invoice ? "INVOICE" : "DELIVERY NOTE", 0.05,
                        0.16, 0.5, 0.19, 13.0));
  return out;
}

// Row-major storage, the order an OCR engine emits for two columns.
void add_two_columns(std::vector<TextBlock>& out, const std::vector<std::string>& left,
                     const std::vector<std::string>& right, double y) {
  std::size_t n = std::max(left.size(), right.size());
  for (std::size_t i = 0; i < n; ++i) {
    double y0 = y + 0.028 * static_cast<double>(i);
    if (i < left.size()) out.push_back(block(left[i], 0.05, y0, 0.45, y0 + 0.02));
    if (i < right.size()) out.push_back(block(right[i], 0.55, y0, 0.95, y0 + 0.02));
  }
}

TableGrid items_table(const std::vector<Item>& items, bool invoice, bool european, double y0) {
  TableGrid t;
  t.y0 = y0;
  if (invoice) {
    t.cols = 4;
    t.cells = {"Description", "Qty", "Unit price", "Amount"};
    for (const auto& it : items) {
      t.cells.push_back(it.description);
      t.cells.push_back(std::to_string(it.quantity));
      t.cells.push_back(money(it.unit_minor, european));
      t.cells.push_back(money(it.unit_minor * it.quantity, european));
    }
  } else {
    t.cols = 3;
    t.cells = {"Description", "Qty", "Unit"};
    for (const auto& it : items) {
      t.cells.push_back(it.description);
      t.cells.push_back(std::to_string(it.quantity));
      t.cells.push_back("pcs");
    }
  }
  t.rows = static_cast<int>(t.cells.size()) / t.cols;
  return t;
}

std::string items_json(const std::vector<Item>& items, bool invoice, bool european) {
  json arr = json::array();
  for (const auto& it : items) {
    json row{{"description", it.description}, {"quantity", std::to_string(it.quantity)}};
    if (invoice) {
      row["unit_price"] = money(it.unit_minor, european);
      row["line_total"] = money(it.unit_minor * it.quantity, european);
    } else {
      row["line_total"] = "0";
    }
    arr.push_back(row);
  }
  return arr.dump();
}

Draft make_draft(const Supplier& s, int d, int pages, Rng& rng) {
  Draft draft;
  draft.supplier = s;
  draft.spec.doc_id = s.id + "-d" + std::to_string(d + 1);
  draft.spec.category = {s.id, s.doc_type};
  draft.spec.two_column = s.two_column;
  const bool invoice = s.doc_type == DocType::invoice;

  Date issued{2026, rng.between(1, 11), rng.between(1, 28)};
  std::vector<Item> items;
  int n_items = rng.between(2, 4);
  for (int i = 0; i < n_items; ++i)
    items.push_back({kItems[rng.below(std::size(kItems))], rng.between(1, 20),
                     static_cast<std::int64_t>(rng.between(5, 900)) * 100 + rng.between(0, 99)});
  const std::string customer = kCustomers[rng.below(std::size(kCustomers))];
  auto& f = draft.fields;

  std::vector<TextBlock> body;
  std::vector<TextBlock> closing;
  if (invoice) {
    const std::string number = "INV-2026-" + pad(rng.between(1, 9999), 4);
    const int rate = std::vector<int>{22, 22, 10, 4}[static_cast<std::size_t>(rng.below(4))];
    std::int64_t subtotal = 0;
    for (const auto& it : items) subtotal += it.unit_minor * it.quantity;
    const std::int64_t tax = (subtotal * rate + 50) / 100;
    const std::int64_t total = subtotal + tax;
    const std::string issued_s = date_text(issued, s.iso_dates);
    const std::string due_s = date_text(add_days(issued, 30), s.iso_dates);
    const std::string rate_s = std::to_string(rate) + "%";
    f = {{"invoice_number", number},
         {"invoice_date", issued_s},
         {"due_date", due_s},
         {"supplier_name", s.name},
         {"supplier_vat", s.vat},
         {"customer_name", customer},
         {"currency", "EUR"},
         {"subtotal", money(subtotal, s.european)},
         {"vat_rate", rate_s},
         {"tax_amount", money(tax, s.european)},
         {"total_amount", money(total, s.european)},
         {"line_items", items_json(items, true, s.european)}};
    if (s.two_column) {
      add_two_columns(body, {"Invoice number", number, "Invoice date", issued_s, "Due date", due_s},
                      {"Customer", customer, "Currency", "EUR", "Payment terms", "30 days"},
                      0.42);
      add_two_columns(closing,
                      {"Subtotal", value_of(draft, "subtotal"), "VAT " + rate_s,
                       value_of(draft, "tax_amount"), "Total due",
                       "EUR " + value_of(draft, "total_amount")},
                      {"Payment", "Bank transfer", "Reference", number}, 0.78);
      draft.evidence = {{"invoice_number", "Invoice number " + number},
                        {"invoice_date", "Invoice date " + issued_s},
                        {"due_date", "Due date " + due_s},
                        {"customer_name", "Customer " + customer},
                        {"currency", "Currency EUR"},
                        {"subtotal", "Subtotal " + value_of(draft, "subtotal")},
                        {"vat_rate", "VAT " + rate_s + " " + value_of(draft, "tax_amount")},
                        {"tax_amount", "VAT " + rate_s + " " + value_of(draft, "tax_amount")},
                        {"total_amount", "Total due EUR " + value_of(draft, "total_amount")}};
    } else {
      const std::vector<std::string> lines{"Invoice number: " + number,
                                           "Invoice date: " + issued_s,
                                           "Due date: " + due_s, "Customer: " + customer,
                                           "Currency: EUR"};
      for (std::size_t i = 0; i < lines.size(); ++i)
        body.push_back(block(lines[i], 0.05, 0.42 + 0.03 * i, 0.95, 0.44 + 0.03 * i));
      closing = {block("Subtotal: " + value_of(draft, "subtotal"), 0.05, 0.80, 0.95, 0.82),
                 block("VAT " + rate_s + ": " + value_of(draft, "tax_amount"), 0.05, 0.83, 0.95,
                       0.85),
                 block("Total due: EUR " + value_of(draft, "total_amount"), 0.05, 0.86, 0.95,
                       0.88)};
    }
  } else {
    const std::string number = "DDT-" + pad(rng.between(1, 9999), 4);
    const std::string order = "PO-" + pad(rng.between(100, 999), 3) + "-" + customer.substr(0, 3);
    const std::string issued_s = date_text(issued, s.iso_dates);
    int qty = 0;
    for (const auto& it : items) qty += it.quantity;
    f = {{"delivery_number", number},
         {"delivery_date", issued_s},
         {"supplier_name", s.name},
         {"supplier_vat", s.vat},
         {"order_reference", order},
         {"line_items", items_json(items, false, s.european)},
         {"total_quantity", std::to_string(qty)}};
    if (s.two_column) {
      add_two_columns(body, {"Delivery note number", number, "Delivery date", issued_s},
                      {"Order reference", order, "Consignee", customer}, 0.42);
      add_two_columns(closing, {"Total quantity", std::to_string(qty)},
                      {"Carrier", "Express Logistics"}, 0.80);
      draft.evidence = {{"delivery_number", "Delivery note number " + number},
                        {"delivery_date", "Delivery date " + issued_s},
                        {"order_reference", "Order reference " + order},
                        {"total_quantity", "Total quantity " + std::to_string(qty)}};
    } else {
      const std::vector<std::string> lines{"Delivery note number: " + number,
                                           "Delivery date: " + issued_s,
                                           "Order reference: " + order, "Consignee: " + customer};
      for (std::size_t i = 0; i < lines.size(); ++i)
        body.push_back(block(lines[i], 0.05, 0.42 + 0.03 * i, 0.95, 0.44 + 0.03 * i));
      closing = {block("Total quantity: " + std::to_string(qty), 0.05, 0.82, 0.95, 0.84)};
    }
  }

  Page first;
  first.blocks = header_blocks(s, true);
  first.blocks.insert(first.blocks.end(), body.begin(), body.end());
  TableGrid table = items_table(items, invoice, s.european, pages == 1 ? 0.60 : 0.25);
  if (pages == 1) {
    first.tables.push_back(table);
    first.blocks.insert(first.blocks.end(), closing.begin(), closing.end());
    draft.pages = {first};
  } else {
    Page second;
    second.index = 1;
    second.blocks = header_blocks(s, false);
    second.tables.push_back(table);
    second.blocks.insert(second.blocks.end(), closing.begin(), closing.end());
    draft.pages = {first, second};
  }
  return draft;
}

// Pads the last footer with boilerplate until the parser's share of dropped
// tokens reaches the target.
void size_footer(Draft& d) {
  if (d.pages.size() > 1)
    for (std::size_t i = 0; i < d.pages.size(); ++i)
      d.pages[i].footer_text =
          "Page " + std::to_string(i + 1) + " of " + std::to_string(d.pages.size());
  ParserConfig cfg;
  ParsedDoc parsed = parser::render_markdown(d.pages, cfg);
  const double want_raw =
      static_cast<double>(parsed.parsed_token_count) / (1.0 - kTokenReductionTarget);
  long missing = std::lround(want_raw) - parsed.raw_token_count;
  std::string filler;
  for (std::size_t i = 0; missing > 0; i = (i + 1) % std::size(kBoilerplate)) {
    std::istringstream words(kBoilerplate[i]);
    for (std::string w; missing > 0 && words >> w; --missing) filler += (filler.empty() ? "" : " ") + w;
  }
  auto& footer = d.pages.back().footer_text;
  if (!filler.empty()) footer = footer ? *footer + " " + filler : filler;
}

json field_answer(const std::string& value, double confidence, const std::string& evidence) {
  json a{{"value", value}, {"confidence", confidence}};
  if (!evidence.empty()) a["evidence"] = evidence;
  return a;
}

json answers_for(const Draft& d) {
  const std::string id_field =
      d.supplier.doc_type == DocType::invoice ? "invoice_number" : "delivery_number";
  auto fields_for = [&](const std::string& backend) {
    json fields = json::object();
    for (const auto& [name, value] : d.fields) {
      std::string ev;
      for (const auto& [k, e] : d.evidence)
        if (k == name) ev = e;
      std::string v = value;
      double conf = kBaseConfidence;
      if (name == id_field && d.spec.flag == "low_confidence") conf = 0.3;
      if (name == id_field && d.spec.flag == "split") {
        if (backend == "b1") conf = 0.8;
        if (backend == "b2") v += "-A", conf = 0.6;
        if (backend == "b3") v += "-B", conf = 0.5;
      }
      if (name == "total_amount" && d.spec.scripting == "majority" && backend == "b3")
        v = "9" + v;
      fields[name] = field_answer(v, conf, ev);
    }
    return json{{"fields", fields}};
  };
  json backends = json::object();
  for (const std::string b : {"b1", "b2", "b3"}) {
    json answer = fields_for(b);
    if (d.spec.scripting == "repair" && b == "b2")
      answer = json::array({json{{"raw", "Sure, here are the invoice fields you asked for."}},
                            answer});
    if (d.spec.scripting == "backend_error" && b == "b3")
      answer = json{{"error", "upstream model unavailable"}};
    backends[b] = json{{"*", answer}};
  }
  return json{{"backends", backends}};
}

}  // namespace

void to_json(json& j, const DocSpec& d) {
  j = json{{"doc_id", d.doc_id},       {"category", d.category},
           {"bundle_id", d.bundle_id}, {"start_page", d.start_page},
           {"end_page", d.end_page},   {"two_column", d.two_column},
           {"flag", d.flag},           {"scripting", d.scripting}};
}

void from_json(const json& j, DocSpec& d) {
  j.at("doc_id").get_to(d.doc_id);
  j.at("category").get_to(d.category);
  j.at("bundle_id").get_to(d.bundle_id);
  d.start_page = j.value("start_page", 0);
  d.end_page = j.value("end_page", 0);
  d.two_column = j.value("two_column", false);
  d.flag = j.value("flag", std::string{});
  d.scripting = j.value("scripting", std::string{});
}

Corpus generate(std::uint64_t seed) {
  Rng rng(seed);
  Corpus c;
  c.seed = seed;

  std::vector<Supplier> suppliers;
  for (int s = 0; s < kSuppliers; ++s) {
    Supplier sup;
    sup.id = "s" + pad(s + 1, 2);
    sup.name = kSupplierNames[s];
    sup.address = std::string(kStreets[rng.below(std::size(kStreets))]) + " " +
                  std::to_string(rng.between(1, 120)) + ", " +
                  kCities[rng.below(std::size(kCities))];
    sup.vat = "IT" + pad(rng.between(10000, 99999), 5) + pad(rng.between(100000, 999999), 6);
    sup.doc_type = s < kFirstDeliverySupplier ? DocType::invoice : DocType::delivery_note;
    sup.european = s % 2 == 0;
    sup.iso_dates = s % 3 == 0;
    sup.two_column = s == 2 || s == 7 || s == 11 || s == 17;
    suppliers.push_back(sup);
  }

  auto pick = [](std::initializer_list<int> set, int s) {
    return std::find(set.begin(), set.end(), s) != set.end();
  };
  std::vector<Draft> drafts;
  for (int s = 0; s < kSuppliers; ++s) {
    for (int d = 0; d < kDocsPerSupplier; ++d) {
      const bool batched = d == 4 && s < 12;
      const int pages = (batched && s % 3 == 1) ? 1 : (batched || d == 3) ? 2 : 1;
      Draft draft = make_draft(suppliers[static_cast<std::size_t>(s)], d, pages, rng);
      auto& spec = draft.spec;
      if (d == 0 && pick({0, 4, 8, 12, 16}, s)) spec.flag = "low_confidence";
      if (d == 1 && pick({1, 5, 9, 13, 18}, s)) spec.flag = "split";
      if (d == 2 && pick({3, 6, 10, 14, 15}, s)) {
        spec.flag = "arithmetic";
        // the supplier's own document is inconsistent; ground truth is what it prints
        auto total = parse_money(value_of(draft, "total_amount"));
        std::string wrong = money(total->minor + 100, suppliers[static_cast<std::size_t>(s)].european);
        for (auto& [k, v] : draft.fields)
          if (k == "total_amount") v = wrong;
        for (auto& p : draft.pages)
          for (auto& b : p.blocks)
            if (b.text.rfind("Total due", 0) == 0) b.text = "Total due: EUR " + wrong;
            else if (b.text.rfind("EUR ", 0) == 0) b.text = "EUR " + wrong;
        for (auto& [k, e] : draft.evidence)
          if (k == "total_amount") e = "Total due EUR " + wrong;
      }
      if (d == 3 && pick({0, 2, 5, 8, 11}, s)) spec.scripting = "majority";
      if (d == 0 && pick({1, 3, 6}, s)) spec.scripting = "repair";
      if (d == 2 && pick({0, 9}, s)) spec.scripting = "backend_error";
      size_footer(draft);
      drafts.push_back(std::move(draft));
    }
  }

  // classifier signatures from every document's first page
  std::vector<std::pair<DocBundle, CategoryLabel>> labeled;
  for (const auto& d : drafts)
    labeled.push_back({DocBundle{d.spec.doc_id, "", {d.pages.front()}, ""},
                       CategoryLabel{d.spec.category.supplier_id, d.spec.category.doc_type, 1.0}});
  c.signatures = classificator::train_signatures(labeled);

  // bundles: the d5 documents of the first 12 suppliers travel in 4 batches of 3
  std::map<int, std::vector<Draft*>> batch_members;
  for (auto& d : drafts) {
    int s = std::stoi(d.spec.category.supplier_id.substr(1)) - 1;
    if (d.spec.doc_id.back() == '5' && s < 12) batch_members[s / 3].push_back(&d);
  }
  for (auto& d : drafts) {
    int s = std::stoi(d.spec.category.supplier_id.substr(1)) - 1;
    if (d.spec.doc_id.back() == '5' && s < 12) continue;
    d.spec.bundle_id = d.spec.doc_id;
    d.spec.start_page = 0;
    d.spec.end_page = static_cast<int>(d.pages.size()) - 1;
    c.bundles.push_back({d.spec.doc_id, d.spec.doc_id + ".pdf", d.pages, "2026-01-15T09:00:00Z"});
  }
  for (auto& [b, members] : batch_members) {
    BatchSpec batch;
    batch.bundle_id = "batch-" + pad(b + 1, 2);
    DocBundle bundle{batch.bundle_id, batch.bundle_id + ".pdf", {}, "2026-01-15T09:00:00Z"};
    int k = 0;
    for (Draft* d : members) {
      int start = static_cast<int>(bundle.pages.size());
      for (Page p : d->pages) {
        p.index = static_cast<int>(bundle.pages.size());
        bundle.pages.push_back(std::move(p));
      }
      int end = static_cast<int>(bundle.pages.size()) - 1;
      std::string unit_id = batch.bundle_id + "." + std::to_string(++k);
      batch.units.push_back({unit_id, start, end,
                             CategoryLabel{d->spec.category.supplier_id,
                                           d->spec.category.doc_type, 1.0}});
      d->spec.doc_id = unit_id;
      d->spec.bundle_id = batch.bundle_id;
      d->spec.start_page = start;
      d->spec.end_page = end;
    }
    c.bundles.push_back(std::move(bundle));
    c.batches.push_back(std::move(batch));
  }

  for (const auto& d : drafts) {
    evaluation::GroundTruth truth;
    truth.doc_id = d.spec.doc_id;
    truth.category = d.spec.category;
    for (const auto& [k, v] : d.fields) truth.fields[k] = v;
    c.truths.push_back(std::move(truth));
    c.answers[d.spec.doc_id] = answers_for(d);
    c.docs.push_back(d.spec);
  }

  c.config.signatures_path = "signatures.json";
  for (const std::string b : {"b1", "b2", "b3"})
    c.config.backends.push_back({b, "scripted", "answers", 10000});
  return c;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

}  // namespace

void write(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (const char* sub : {"bundles", "truth", "answers"}) {
    fs::remove_all(dir / sub);
    fs::create_directories(dir / sub);
  }
  for (const auto& b : corpus.bundles) write_json(dir / "bundles" / (b.doc_id + ".json"), b);
  for (const auto& t : corpus.truths) write_json(dir / "truth" / (t.doc_id + ".json"), t);
  for (const auto& [id, a] : corpus.answers) write_json(dir / "answers" / (id + ".json"), a);
  write_json(dir / "config.json", config_to_json(corpus.config));
  classificator::save_signatures(dir / "signatures.json", corpus.signatures);

  json batches = json::array();
  for (const auto& b : corpus.batches) batches.push_back({{"bundle_id", b.bundle_id}, {"units", b.units}});
  write_json(dir / "manifest.json",
             json{{"seed", corpus.seed}, {"documents", corpus.docs}, {"batches", batches}});
}

LoadedCorpus load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  LoadedCorpus c;
  c.dir = dir;
  if (!fs::is_directory(dir / "bundles"))
    throw ValidationError(dir.string() + " has no bundles/ directory");
  c.config = fs::exists(dir / "config.json") ? load_config(dir / "config.json") : PipelineConfig{};
  std::vector<fs::path> files;
  if (fs::is_directory(dir / "truth"))
    for (const auto& e : fs::directory_iterator(dir / "truth"))
      if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      c.truths.push_back(read_json(f).get<evaluation::GroundTruth>());
    } catch (const json::exception& e) {
      throw ValidationError(f.string() + ": " + e.what());
    }
  }
  if (fs::exists(dir / "manifest.json")) {
    json m = read_json(dir / "manifest.json");
    try {
      c.docs = m.value("documents", json::array()).get<std::vector<DocSpec>>();
      for (const auto& b : m.value("batches", json::array()))
        c.batches.push_back({b.at("bundle_id"), b.at("units").get<std::vector<LogicalUnit>>()});
    } catch (const json::exception& e) {
      throw ValidationError("manifest.json: " + std::string(e.what()));
    }
  }
  return c;
}

std::vector<FieldValue> final_fields(const PipelineState& doc) {
  if (doc.validation) return doc.validation->adjusted;
  std::vector<FieldValue> out;
  for (const auto& r : doc.extraction) out.push_back(r.chosen);
  return out;
}

CorpusRun run_corpus(const LoadedCorpus& corpus, const std::set<std::string>& ablate,
                     const std::filesystem::path& store_dir, std::size_t jobs,
                     const std::string& label) {
  EngineOptions options;
  options.config = corpus.config;
  options.store_dir = store_dir;
  options.clock = stepping_clock();
  options.ablate = ablate;
  options.retry = RetryPolicy::no_wait();
  options.jobs = jobs;
  if (!store_dir.empty()) std::filesystem::create_directories(store_dir);
  Engine engine(std::move(options));
  engine.ingest_dir(corpus.dir / "bundles");
  engine.run();

  CorpusRun out;
  out.store = engine.snapshot();
  auto durations = engine.durations();
  for (const auto& id : out.store.order()) {
    const PipelineState& d = *out.store.doc(id);
    if (d.is_container()) continue;
    evaluation::DocRun run;
    run.doc_id = id;
    run.doc_type = d.category.doc_type;
    run.fields = final_fields(d);
    run.reviewed = out.store.tasks().count(id) > 0;
    run.seconds = durations.count(id) ? durations.at(id) : 0.0;
    if (d.parsed) {
      run.raw_tokens = d.parsed->raw_token_count;
      run.parsed_tokens = d.parsed->parsed_token_count;
    }
    out.runs.push_back(std::move(run));
  }
  out.report = evaluation::corpus_report(out.runs, corpus.truths, engine.schemas(), label);
  return out;
}

}  // namespace madp::corpus
