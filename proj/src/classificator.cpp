#include "madp/classificator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "madp/normalize.hpp"

namespace madp::classificator {

std::vector<TextBlock> crop_header(const Page& page, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("crop fraction must be in (0,1]");
  std::vector<TextBlock> out;
  for (const auto& b : page.blocks)
    if (b.y0 < fraction) out.push_back(b);
  return out;
}

std::string header_text(const std::vector<TextBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    std::string t = collapse_whitespace(b.text);
    if (t.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::uint32_t trigram_hash(std::string_view trigram) {
  std::uint32_t h = 2166136261u;  // FNV-1a
  for (unsigned char c : trigram) {
    h ^= c;
    h *= 16777619u;
  }
  return h % kHashSpace;
}

SparseVector trigram_bag(const std::vector<TextBlock>& blocks) {
  SparseVector bag;
  for (const auto& b : blocks) {
    std::string t = to_lower(collapse_whitespace(b.text));
    if (t.empty()) continue;
    t = " " + t + " ";
    for (std::size_t i = 0; i + 3 <= t.size(); ++i)
      bag[trigram_hash(std::string_view(t).substr(i, 3))] += 1.0;
  }
  return bag;
}

SparseVector l2_normalize(SparseVector v) {
  double n = 0;
  for (const auto& [_, x] : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0) return {};
  for (auto& [_, x] : v) x /= n;
  return v;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& [k, x] : a) {
    na += x * x;
    if (auto it = b.find(k); it != b.end()) dot += x * it->second;
  }
  for (const auto& [_, y] : b) nb += y * y;
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

CategoryLabel classify(const Page& page,
                       const std::vector<CategorySignature>& signatures,
                       const PipelineConfig& config) {
  auto bag = trigram_bag(crop_header(page, config.header_crop_fraction));
  if (bag.empty() || signatures.empty()) return CategoryLabel::unknown(0.0);

  const CategorySignature* best = nullptr;
  double best_sim = -1;
  for (const auto& s : signatures) {
    double sim = cosine(bag, s.centroid);
    if (sim > best_sim + 1e-12 ||
        (std::abs(sim - best_sim) <= 1e-12 && best && s.key() < best->key())) {
      best = &s;
      best_sim = sim;
    }
  }
  double conf = std::clamp(best_sim, 0.0, 1.0);
  if (conf < kUnknownThreshold) return CategoryLabel::unknown(conf);
  return {best->supplier_id, best->doc_type, conf};
}

std::vector<CategorySignature> train_signatures(
    const std::vector<std::pair<DocBundle, CategoryLabel>>& labeled,
    double crop_fraction) {
  if (labeled.empty()) throw ValidationError("no labeled bundles to train on");
  std::map<CategoryKey, std::pair<SparseVector, int>> sums;
  for (const auto& [bundle, label] : labeled) {
    if (bundle.pages.empty()) continue;
    auto v = l2_normalize(trigram_bag(crop_header(bundle.pages.front(), crop_fraction)));
    auto& [sum, count] = sums[label.key()];
    for (const auto& [k, x] : v) sum[k] += x;
    ++count;
  }
  std::vector<CategorySignature> out;
  for (auto& [key, acc] : sums) {
    auto& [sum, count] = acc;
    for (auto& [_, x] : sum) x /= count;
    out.push_back({key.supplier_id, key.doc_type, l2_normalize(std::move(sum)), count});
  }
  return out;
}

void to_json(json& j, const CategorySignature& s) {
  json centroid = json::array();
  for (const auto& [k, x] : s.centroid) centroid.push_back({k, x});
  j = json{{"supplier_id", s.supplier_id},
           {"doc_type", s.doc_type},
           {"centroid", centroid},
           {"sample_count", s.sample_count}};
}

void from_json(const json& j, CategorySignature& s) {
  s.supplier_id = j.at("supplier_id").get<std::string>();
  s.doc_type = j.at("doc_type").get<DocType>();
  s.centroid.clear();
  for (const auto& kv : j.at("centroid"))
    s.centroid[kv.at(0).get<std::uint32_t>()] = kv.at(1).get<double>();
  s.sample_count = j.value("sample_count", 1);
  if (s.sample_count < 1) throw ValidationError("signature sample_count < 1");
}

void save_signatures(const std::filesystem::path& path,
                     const std::vector<CategorySignature>& signatures) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << json(signatures).dump() << '\n';
}

std::vector<CategorySignature> load_signatures(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open signature store " + path.string(), 0);
  try {
    return json::parse(in).get<std::vector<CategorySignature>>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

ExternalClassification classify_external(const Page& page,
                                         const std::optional<std::string>& image_ref,
                                         ModelEndpoint& endpoint,
                                         const PipelineConfig& config,
                                         const RetryPolicy& policy) {
  json req{{"header_text",
            header_text(crop_header(page, config.header_crop_fraction))}};
  if (image_ref) req["image_ref"] = *image_ref;

  json res;
  try {
    res = post_with_retry(endpoint, req, policy);
  } catch (const RetriesExhausted& e) {
    return {std::nullopt,
            RoutingDecision{Route::non_ai_fallback,
                            {std::string("classifier unavailable: ") + e.what()}}};
  }
  if (!res.is_object() || !res.contains("supplier") || !res.contains("doc_type") ||
      !res.contains("confidence"))
    throw AdapterError("classifier response lacks supplier/doc_type/confidence");
  try {
    CategoryLabel label{res.at("supplier").get<std::string>(),
                        doc_type_from_string(res.at("doc_type").get<std::string>()),
                        res.at("confidence").get<double>()};
    if (!(label.confidence >= 0.0 && label.confidence <= 1.0))
      throw AdapterError("classifier confidence outside [0,1]");
    if (label.supplier_id == "unknown" && label.doc_type != DocType::other)
      throw AdapterError("unknown supplier must come with doc_type other");
    return {label, std::nullopt};
  } catch (const json::exception& e) {
    throw AdapterError(std::string("classifier response mistyped: ") + e.what());
  } catch (const ValidationError& e) {
    throw AdapterError(e.what());
  }
}

}  // namespace madp::classificator
