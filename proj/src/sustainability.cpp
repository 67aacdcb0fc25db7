#include "madp/sustainability.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace madp::sustainability {

namespace {

struct Printed {
  double co2_t, energy_mwh, water_m3, co2_g, energy_wh, water_l;
};

// Reference figures for the default named scenarios.
const std::map<std::string, Printed>& printed_figures() {
  static const std::map<std::string, Printed> kPrinted{
      {"manual", {17.7, 49.5, 101.2, 177.1, 494.5, 1.01}},
      {"pure_ai", {3.1, 8.7, 17.5, 31.0, 87.0, 0.18}},
      {"ai_hitl", {5.4, 15.2, 37.6, 54.4, 152.0, 0.38}},
  };
  return kPrinted;
}

std::string fixed(double v, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << round_display(v, decimals);
  return out.str();
}

std::string thousands(long v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  int n = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (n && n % 3 == 0) out.insert(out.begin(), ',');
    out.insert(out.begin(), *it);
    ++n;
  }
  return v < 0 ? "-" + out : out;
}

void check_non_negative(double v, const char* name) {
  if (v < 0 || std::isnan(v))
    throw std::invalid_argument(std::string(name) + " must be non-negative");
}

Saving make_saving(const std::string& metric, double other, double baseline, int decimals) {
  Saving s;
  s.metric = metric;
  s.absolute = round_display(baseline - other, decimals);
  if (baseline != 0) s.percent = std::lround((baseline - other) / baseline * 100.0);
  return s;
}

}  // namespace

void validate(const ScenarioParams& p) {
  if (p.invoices_per_year < 0) throw std::invalid_argument("invoices_per_year must be non-negative");
  check_non_negative(p.fte, "fte");
  check_non_negative(p.queries_per_invoice, "queries_per_invoice");
  check_non_negative(p.wh_per_query, "wh_per_query");
  check_non_negative(p.co2_kg_per_kwh, "co2_kg_per_kwh");
  check_non_negative(p.water_ml_per_query, "water_ml_per_query");
  check_non_negative(p.co2_kg_per_worker_day, "co2_kg_per_worker_day");
  check_non_negative(p.working_days, "working_days");
  check_non_negative(p.water_l_per_worker_day, "water_l_per_worker_day");
  check_non_negative(p.energy_kwh_per_fte_year, "energy_kwh_per_fte_year");
  if (p.pue < 1) throw std::invalid_argument("pue must be at least 1");
  if (p.ai_processed_fraction < 0 || p.ai_processed_fraction > 1)
    throw std::invalid_argument("ai_processed_fraction must be within [0,1]");
}

void to_json(json& j, const ScenarioParams& p) {
  j = json{{"invoices_per_year", p.invoices_per_year},
           {"fte", p.fte},
           {"queries_per_invoice", p.queries_per_invoice},
           {"wh_per_query", p.wh_per_query},
           {"pue", p.pue},
           {"co2_kg_per_kwh", p.co2_kg_per_kwh},
           {"water_ml_per_query", p.water_ml_per_query},
           {"co2_kg_per_worker_day", p.co2_kg_per_worker_day},
           {"working_days", p.working_days},
           {"water_l_per_worker_day", p.water_l_per_worker_day},
           {"energy_kwh_per_fte_year", p.energy_kwh_per_fte_year},
           {"ai_processed_fraction", p.ai_processed_fraction}};
  if (p.accuracy) j["accuracy"] = *p.accuracy;
  if (p.review_rate) j["review_rate"] = *p.review_rate;
  if (p.avg_processing_seconds) j["avg_processing_seconds"] = *p.avg_processing_seconds;
  if (p.nominal_invoices_per_fte) j["nominal_invoices_per_fte"] = *p.nominal_invoices_per_fte;
}

void from_json(const json& j, ScenarioParams& p) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  auto get_opt = [&](const char* key, std::optional<double>& field) {
    if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<double>();
  };
  get("invoices_per_year", p.invoices_per_year);
  get("fte", p.fte);
  get("queries_per_invoice", p.queries_per_invoice);
  get("wh_per_query", p.wh_per_query);
  get("pue", p.pue);
  get("co2_kg_per_kwh", p.co2_kg_per_kwh);
  get("water_ml_per_query", p.water_ml_per_query);
  get("co2_kg_per_worker_day", p.co2_kg_per_worker_day);
  get("working_days", p.working_days);
  get("water_l_per_worker_day", p.water_l_per_worker_day);
  get("energy_kwh_per_fte_year", p.energy_kwh_per_fte_year);
  get("ai_processed_fraction", p.ai_processed_fraction);
  get_opt("accuracy", p.accuracy);
  get_opt("review_rate", p.review_rate);
  get_opt("avg_processing_seconds", p.avg_processing_seconds);
  get_opt("nominal_invoices_per_fte", p.nominal_invoices_per_fte);
}

Footprint human_footprint(double fte, const ScenarioParams& p) {
  if (fte < 0 || std::isnan(fte)) throw std::invalid_argument("fte must be non-negative");
  return {fte * p.co2_kg_per_worker_day * p.working_days, fte * p.energy_kwh_per_fte_year,
          fte * p.water_l_per_worker_day * p.working_days};
}

Footprint ai_footprint(double invoices, const ScenarioParams& p) {
  if (invoices < 0 || std::isnan(invoices))
    throw std::invalid_argument("invoice count must be non-negative");
  double energy_kwh = invoices * p.queries_per_invoice * p.wh_per_query * p.pue / 1000.0;
  return {energy_kwh * p.co2_kg_per_kwh, energy_kwh,
          invoices * p.queries_per_invoice * p.water_ml_per_query / 1000.0};
}

double round_display(double value, int decimals) {
  double scale = std::pow(10.0, decimals);
  double s = std::fabs(value) * scale;
  double r = std::floor(s + 0.5 + 1e-9 * std::max(1.0, s));
  return std::copysign(r / scale, value);
}

json ScenarioReport::display() const {
  json j{{"scenario", name},
         {"fte", params.fte},
         {"invoices_per_year", params.invoices_per_year},
         {"totals",
          {{"co2_tons", round_display(co2_tons, 1)},
           {"energy_mwh", round_display(energy_mwh, 1)},
           {"water_m3", round_display(water_m3, 1)}}},
         {"per_invoice",
          {{"co2_g", round_display(co2_g_per_invoice, 1)},
           {"energy_wh", round_display(energy_wh_per_invoice, 1)},
           {"water_l", round_display(water_l_per_invoice, 2)}}},
         {"unrounded",
          {{"co2_kg", total.co2_kg},
           {"energy_kwh", total.energy_kwh},
           {"water_l", total.water_l}}},
         {"notes", notes},
         {"discrepancies", json::array()}};
  j["accuracy"] = params.accuracy ? json(*params.accuracy) : json(nullptr);
  for (const auto& d : discrepancies)
    j["discrepancies"].push_back(
        {{"metric", d.metric}, {"computed", d.computed}, {"printed", d.printed}, {"note", d.note}});
  return j;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> kNames{"manual", "pure_ai", "ai_hitl"};
  return kNames;
}

ScenarioParams named_scenario(const std::string& name) {
  ScenarioParams p;
  if (name == "manual") {
    p.fte = 23;
    p.ai_processed_fraction = 0;
    p.accuracy = 0.95;
    p.review_rate = 1.0;
    p.avg_processing_seconds = 120;
    p.nominal_invoices_per_fte = 4500;
  } else if (name == "pure_ai") {
    p.fte = 4;
    p.ai_processed_fraction = 1;
    p.accuracy = 0.85;
    p.review_rate = 0.0;
    p.avg_processing_seconds = 6;
    p.nominal_invoices_per_fte = 25000;
  } else if (name == "ai_hitl") {
    p.fte = 7;
    p.ai_processed_fraction = 1;
    p.accuracy = 0.985;
    p.review_rate = 0.15;
    p.avg_processing_seconds = 18;
    p.nominal_invoices_per_fte = 15000;
  } else {
    throw std::invalid_argument("unknown scenario '" + name +
                                "' (expected manual, pure_ai or ai_hitl)");
  }
  return p;
}

ScenarioReport scenario_report(const std::string& name, const ScenarioParams& params) {
  validate(params);
  ScenarioReport r;
  r.name = name;
  r.params = params;
  r.human = human_footprint(params.fte, params);
  r.ai = ai_footprint(static_cast<double>(params.invoices_per_year) * params.ai_processed_fraction,
                      params);
  r.total = r.human + r.ai;
  r.co2_tons = r.total.co2_kg / 1000.0;
  r.energy_mwh = r.total.energy_kwh / 1000.0;
  r.water_m3 = r.total.water_l / 1000.0;
  if (params.invoices_per_year > 0) {
    double n = static_cast<double>(params.invoices_per_year);
    r.co2_g_per_invoice = r.total.co2_kg * 1000.0 / n;
    r.energy_wh_per_invoice = r.total.energy_kwh * 1000.0 / n;
    r.water_l_per_invoice = r.total.water_l / n;
  }
  if (params.fte > 0) {
    double office = 160.0 * 10.0;
    if (params.energy_kwh_per_fte_year > office)
      r.notes.push_back("human energy uses " + fixed(params.energy_kwh_per_fte_year, 0) +
                        " kWh per FTE-year: " + fixed(office, 0) +
                        " office building share plus " +
                        fixed(params.energy_kwh_per_fte_year - office, 0) +
                        " equipment overhead");
    r.notes.push_back("human CO2 uses the per-worker-day factor, which includes commuting");
  }

  auto printed = printed_figures().find(name);
  bool default_params = false;
  try {
    default_params = printed != printed_figures().end() && named_scenario(name) == params;
  } catch (const std::invalid_argument&) {
  }
  if (default_params) {
    const Printed& p = printed->second;
    auto compare = [&](const std::string& metric, double computed, double reference,
                       int decimals, const std::string& why) {
      double shown = round_display(computed, decimals);
      if (std::fabs(shown - reference) > 1e-9)
        r.discrepancies.push_back({metric, shown, reference, why});
    };
    const std::string rounding =
        "reference figure differs from the formula value at display precision";
    compare("co2_tons", r.co2_tons, p.co2_t, 1, rounding);
    compare("energy_mwh", r.energy_mwh, p.energy_mwh, 1, rounding);
    compare("water_m3", r.water_m3, p.water_m3, 1,
            name == "pure_ai"
                ? "reference figure equals the human-only share (" +
                      fixed(r.human.water_l / 1000.0, 1) + " m3) and omits " +
                      fixed(r.ai.water_l / 1000.0, 1) + " m3 of inference cooling water"
                : rounding);
    compare("co2_g_per_invoice", r.co2_g_per_invoice, p.co2_g, 1, rounding);
    compare("energy_wh_per_invoice", r.energy_wh_per_invoice, p.energy_wh, 1, rounding);
    compare("water_l_per_invoice", r.water_l_per_invoice, p.water_l, 2, rounding);
    for (const auto& d : r.discrepancies)
      r.notes.push_back(d.metric + ": computed " + std::to_string(d.computed).substr(0, 8) +
                        ", reference " + std::to_string(d.printed).substr(0, 8) + " (" +
                        d.note + ")");
  }
  return r;
}

ScenarioReport scenario_report(const std::string& name) {
  return scenario_report(name, named_scenario(name));
}

Savings savings(const ScenarioReport& other, const ScenarioReport& baseline) {
  Savings s;
  s.co2_tons = make_saving("co2_tons", other.co2_tons, baseline.co2_tons, 1);
  s.energy_mwh = make_saving("energy_mwh", other.energy_mwh, baseline.energy_mwh, 1);
  s.water_m3 = make_saving("water_m3", other.water_m3, baseline.water_m3, 1);
  s.co2_g_per_invoice = make_saving("co2_g_per_invoice", other.co2_g_per_invoice,
                                    baseline.co2_g_per_invoice, 1);
  s.energy_wh_per_invoice = make_saving("energy_wh_per_invoice", other.energy_wh_per_invoice,
                                        baseline.energy_wh_per_invoice, 1);
  s.water_l_per_invoice = make_saving("water_l_per_invoice", other.water_l_per_invoice,
                                      baseline.water_l_per_invoice, 2);
  return s;
}

json to_json(const Savings& s) {
  json out = json::object();
  for (const Saving* v : {&s.co2_tons, &s.energy_mwh, &s.water_m3, &s.co2_g_per_invoice,
                          &s.energy_wh_per_invoice, &s.water_l_per_invoice})
    out[v->metric] = {{"absolute", v->absolute},
                      {"percent", v->percent ? json(-*v->percent) : json(nullptr)}};
  return out;
}

Equivalences equivalences(double co2_tons, double energy_mwh, double water_m3,
                          const EquivalenceFactors& f) {
  Equivalences e;
  e.trees = std::lround(co2_tons * 1000.0 / f.kg_co2_per_tree_year);
  e.cars = std::lround(co2_tons / f.t_co2_per_car_year);
  e.homes = std::lround(energy_mwh / f.mwh_per_home_year);
  e.person_water_days = std::lround(water_m3 * 1000.0 / f.l_per_person_day);
  return e;
}

Equivalences equivalences(const Savings& s, const EquivalenceFactors& f) {
  return equivalences(s.co2_tons.absolute, s.energy_mwh.absolute, s.water_m3.absolute, f);
}

OperationalRow operational_row(const std::string& name, const ScenarioParams& p) {
  validate(p);
  if (p.fte == 0 && p.invoices_per_year > 0)
    throw std::invalid_argument("scenario " + name + " processes invoices with zero FTE");
  OperationalRow r;
  r.scenario = name;
  r.fte = p.fte;
  r.invoices_per_year = p.invoices_per_year;
  r.invoices_per_fte = p.fte > 0 ? static_cast<double>(p.invoices_per_year) / p.fte : 0;
  r.invoices_per_fte_display = std::lround(r.invoices_per_fte);
  r.nominal_invoices_per_fte = p.nominal_invoices_per_fte;
  r.accuracy = p.accuracy;
  r.review_rate = p.review_rate;
  r.avg_processing_seconds = p.avg_processing_seconds;
  if (p.nominal_invoices_per_fte && *p.nominal_invoices_per_fte > 0) {
    double nominal = *p.nominal_invoices_per_fte;
    r.deviation_pct = (r.invoices_per_fte - nominal) / nominal * 100.0;
    r.consistent = p.fte + 1e-9 >= static_cast<double>(p.invoices_per_year) / nominal;
    if (r.invoices_per_fte_display != std::lround(nominal))
      r.notes.push_back("computed " + thousands(r.invoices_per_fte_display) +
                        " invoices/FTE/year vs nominal " + thousands(std::lround(nominal)) +
                        " (" + fixed(*r.deviation_pct, 1) + "%)");
    if (!r.consistent)
      r.notes.push_back("nominal throughput would need more than " + fixed(p.fte, 1) + " FTE");
  }
  return r;
}

std::vector<OperationalRow> operational_table() {
  std::vector<OperationalRow> rows;
  for (const auto& n : scenario_names()) rows.push_back(operational_row(n, named_scenario(n)));
  return rows;
}

json to_json(const OperationalRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"scenario", r.scenario},
              {"fte", r.fte},
              {"invoices_per_year", r.invoices_per_year},
              {"invoices_per_fte", r.invoices_per_fte_display},
              {"nominal_invoices_per_fte", opt(r.nominal_invoices_per_fte)},
              {"deviation_pct", r.deviation_pct ? json(round_display(*r.deviation_pct, 1))
                                                : json(nullptr)},
              {"consistent", r.consistent},
              {"accuracy", opt(r.accuracy)},
              {"review_rate", opt(r.review_rate)},
              {"avg_processing_seconds", opt(r.avg_processing_seconds)},
              {"notes", r.notes}};
}

std::string render_sustainability_table(const std::vector<ScenarioReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Metric";
  for (const auto& r : reports) out << std::right << std::setw(12) << r.name;
  out << "\n";
  auto row = [&](const std::string& label, auto get, int decimals) {
    out << std::left << std::setw(22) << label;
    for (const auto& r : reports) out << std::right << std::setw(12) << fixed(get(r), decimals);
    out << "\n";
  };
  row("CO2 (t)", [](const ScenarioReport& r) { return r.co2_tons; }, 1);
  row("Energy (MWh)", [](const ScenarioReport& r) { return r.energy_mwh; }, 1);
  row("Water (m3)", [](const ScenarioReport& r) { return r.water_m3; }, 1);
  row("CO2 / invoice (g)", [](const ScenarioReport& r) { return r.co2_g_per_invoice; }, 1);
  row("Energy / invoice (Wh)", [](const ScenarioReport& r) { return r.energy_wh_per_invoice; }, 1);
  row("Water / invoice (L)", [](const ScenarioReport& r) { return r.water_l_per_invoice; }, 2);
  for (const auto& r : reports) {
    out << r.name << ": " << fixed(r.co2_tons, 1) << " t / " << fixed(r.energy_mwh, 1)
        << " MWh / " << fixed(r.water_m3, 1) << " m³\n";
    for (const auto& n : r.notes) out << "  note: " << n << "\n";
  }
  return out.str();
}

std::string render_operational_table(const std::vector<OperationalRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "Metric";
  for (const auto& r : rows) out << std::right << std::setw(12) << r.scenario;
  out << "\n" << std::left << std::setw(22) << "Invoices/FTE/year";
  for (const auto& r : rows) out << std::right << std::setw(12) << thousands(r.invoices_per_fte_display);
  out << "\n" << std::left << std::setw(22) << "FTEs required";
  for (const auto& r : rows) out << std::right << std::setw(12) << fixed(r.fte, 0);
  auto pct = [&](const char* label, auto get, int decimals) {
    out << "\n" << std::left << std::setw(22) << label;
    for (const auto& r : rows) {
      auto v = get(r);
      out << std::right << std::setw(12) << (v ? fixed(*v * 100.0, decimals) + "%" : "-");
    }
  };
  pct("Accuracy", [](const OperationalRow& r) { return r.accuracy; }, 1);
  pct("Human review rate", [](const OperationalRow& r) { return r.review_rate; }, 0);
  out << "\n" << std::left << std::setw(22) << "Avg. processing time";
  for (const auto& r : rows)
    out << std::right << std::setw(12)
        << (r.avg_processing_seconds ? fixed(*r.avg_processing_seconds, 0) + "s" : "-");
  out << "\n";
  for (const auto& r : rows)
    for (const auto& n : r.notes) out << r.scenario << ": " << n << "\n";
  return out.str();
}

}  // namespace madp::sustainability
