#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "madp/engine.hpp"
#include "madp/normalize.hpp"
#include "madp/types.hpp"

namespace madp::testing {

inline TextBlock text_block(std::string text, double x0, double y0, double x1 = 0.95,
                            double y1 = -1, double font = 10.0) {
  return TextBlock{std::move(text), x0, y0, x1, y1 < 0 ? y0 + 0.02 : y1, font};
}

inline Page page_of(std::vector<TextBlock> blocks, int index = 0) {
  Page p;
  p.index = index;
  p.blocks = std::move(blocks);
  return p;
}

inline DocBundle bundle_of(std::string id, std::vector<Page> pages) {
  for (std::size_t i = 0; i < pages.size(); ++i) pages[i].index = static_cast<int>(i);
  return DocBundle{id, id + ".pdf", std::move(pages), "2026-01-15T09:00:00Z"};
}

inline FieldValue value(const std::string& field, const std::string& raw, double conf = 0.9,
                        FieldKind kind = FieldKind::text) {
  FieldValue v;
  v.field = field;
  v.raw = raw;
  v.normalized = normalize_value(kind, raw);
  v.confidence = conf;
  v.backend_id = "b1";
  return v;
}

inline FieldValue missing(const std::string& field) {
  FieldValue v;
  v.field = field;
  v.missing = true;
  return v;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("madp-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Three single-page invoices: A and B from supplier acme, C from zeta. Under
/// prompt v1 every backend reads invoice_number with low confidence (A's
/// reading is also wrong); under v2 they read it confidently. Correcting A
/// should therefore pull B through on its own and leave C alone.
struct LearningScenario {
  static Schema schema() {
    return {{"invoice_number", FieldKind::text, true, {}},
            {"total_amount", FieldKind::money, true, {}}};
  }

  static Page invoice_page(const std::string& supplier_line, const std::string& number,
                           const std::string& total) {
    Page p;
    p.blocks = {text_block(supplier_line, 0.05, 0.04, 0.55, -1, 14),
                text_block("INVOICE", 0.05, 0.12, 0.4, -1, 14),
                text_block("Invoice no. " + number, 0.05, 0.5, 0.5),
                text_block("Total EUR " + total, 0.05, 0.6, 0.5)};
    return p;
  }

  static std::vector<DocBundle> bundles() {
    return {bundle_of("A", {invoice_page("ACME Industrial Supplies S.p.A.", "INV-A1", "120.00")}),
            bundle_of("B", {invoice_page("ACME Industrial Supplies S.p.A.", "INV-B2", "80.00")}),
            bundle_of("C", {invoice_page("Zeta Logistica Srl Corso Italia", "ZT-9", "15.00")})};
  }

  static json answer(const std::string& number, double number_conf, const std::string& total) {
    return {{"fields",
             {{"invoice_number", {{"value", number}, {"confidence", number_conf}}},
              {"total_amount", {{"value", total}, {"confidence", 0.9}}}}}};
  }

  /// Writes the sidecars under `dir` and returns engine options that keep
  /// their events under `dir/store` (or in memory when `persist` is false).
  static EngineOptions options(const std::filesystem::path& dir, bool persist = true) {
    auto answers = dir / "answers";
    std::filesystem::create_directories(answers);
    auto sidecar = [&](const std::string& id, json v1, json v2) {
      std::ofstream(answers / (id + ".json"))
          << json{{"backends", {{"*", {{"v1", v1}, {"v2", v2}}}}}}.dump(2);
    };
    sidecar("A", answer("INV-A7", 0.3, "120.00"), answer("INV-A1", 0.9, "120.00"));
    sidecar("B", answer("INV-B2", 0.3, "80.00"), answer("INV-B2", 0.9, "80.00"));
    sidecar("C", answer("ZT-9", 0.3, "15.00"), answer("ZT-9", 0.9, "15.00"));

    EngineOptions o;
    if (persist) o.store_dir = dir / "store";
    o.clock = stepping_clock();
    o.retry = RetryPolicy::no_wait();
    o.schemas = {{DocType::invoice, schema()}};
    std::vector<std::pair<DocBundle, CategoryLabel>> labeled;
    auto b = bundles();
    labeled.push_back({b[0], {"acme", DocType::invoice, 1}});
    labeled.push_back({b[2], {"zeta", DocType::invoice, 1}});
    o.signatures = classificator::train_signatures(labeled);
    for (const char* id : {"b1", "b2", "b3"})
      o.backends.push_back(std::make_shared<extraction::ScriptedBackend>(id, answers));
    return o;
  }
};

}  // namespace madp::testing
