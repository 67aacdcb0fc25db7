#pragma once

// Operational and environmental accounting for a yearly invoice volume
// processed manually, fully automatically, or by AI with human review.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace madp::sustainability {

using json = nlohmann::json;

struct ScenarioParams {
  long invoices_per_year = 100000;
  double fte = 0;
  double queries_per_invoice = 2;
  double wh_per_query = 0.5;
  double pue = 1.5;
  double co2_kg_per_kwh = 0.3;
  double water_ml_per_query = 34;
  double co2_kg_per_worker_day = 3.5;
  int working_days = 220;
  double water_l_per_worker_day = 20;
  /// Back-solved from the reference totals; office heating/lighting alone
  /// (160 kWh/m2 x 10 m2) accounts for 1600, the rest is equipment.
  double energy_kwh_per_fte_year = 2150;
  double ai_processed_fraction = 0;

  // Echoed into reports, never computed.
  std::optional<double> accuracy;
  std::optional<double> review_rate;
  std::optional<double> avg_processing_seconds;
  std::optional<double> nominal_invoices_per_fte;

  bool operator==(const ScenarioParams&) const = default;
};

/// Throws std::invalid_argument for negative values or pue < 1.
void validate(const ScenarioParams& p);

void to_json(json& j, const ScenarioParams& p);
/// Absent keys keep their defaults.
void from_json(const json& j, ScenarioParams& p);

struct Footprint {
  double co2_kg = 0;
  double energy_kwh = 0;
  double water_l = 0;

  Footprint operator+(const Footprint& o) const {
    return {co2_kg + o.co2_kg, energy_kwh + o.energy_kwh, water_l + o.water_l};
  }
  bool operator==(const Footprint&) const = default;
};

Footprint human_footprint(double fte, const ScenarioParams& params);
Footprint ai_footprint(double invoices, const ScenarioParams& params);

/// Half-up rounding to `decimals`, tolerant of binary representation error
/// (54.35 rounds to 54.4).
double round_display(double value, int decimals);

/// A printed reference figure that the computed display value does not match.
struct Discrepancy {
  std::string metric;
  double computed = 0;
  double printed = 0;
  std::string note;
};

struct ScenarioReport {
  std::string name;
  ScenarioParams params;
  Footprint human;
  Footprint ai;
  Footprint total;

  // Unrounded totals and per-invoice figures.
  double co2_tons = 0;
  double energy_mwh = 0;
  double water_m3 = 0;
  double co2_g_per_invoice = 0;
  double energy_wh_per_invoice = 0;
  double water_l_per_invoice = 0;

  std::vector<std::string> notes;
  std::vector<Discrepancy> discrepancies;

  /// Display precision: t, MWh, m3 and g, Wh to 1 decimal; litres to 2.
  json display() const;
};

/// manual (23 FTE, no AI), pure_ai (4 FTE, all AI), ai_hitl (7 FTE, all AI).
const std::vector<std::string>& scenario_names();
/// Default parameters of a named scenario; std::invalid_argument otherwise.
ScenarioParams named_scenario(const std::string& name);

/// Totals = human part + AI part over invoices x ai_processed_fraction.
/// Named scenarios run with their default parameters are compared against
/// the reference figures and every mismatch becomes a Discrepancy.
ScenarioReport scenario_report(const std::string& name, const ScenarioParams& params);
ScenarioReport scenario_report(const std::string& name);

struct Saving {
  std::string metric;
  double absolute = 0;             // baseline - other, in display units
  std::optional<long> percent;     // rounded reduction; absent for a zero baseline
};

struct Savings {
  Saving co2_tons, energy_mwh, water_m3;
  Saving co2_g_per_invoice, energy_wh_per_invoice, water_l_per_invoice;
};

Savings savings(const ScenarioReport& other, const ScenarioReport& baseline);
json to_json(const Savings& s);

struct EquivalenceFactors {
  double kg_co2_per_tree_year = 12300.0 / 61.0;
  double t_co2_per_car_year = 12.3 / 3.0;
  double mwh_per_home_year = 34.2 / 11.0;
  double l_per_person_day = 63600.0 / 424.0;
};

struct Equivalences {
  long trees = 0;
  long cars = 0;
  long homes = 0;
  long person_water_days = 0;
  bool operator==(const Equivalences&) const = default;
};

Equivalences equivalences(double co2_tons, double energy_mwh, double water_m3,
                          const EquivalenceFactors& factors = {});
Equivalences equivalences(const Savings& s, const EquivalenceFactors& factors = {});

struct OperationalRow {
  std::string scenario;
  double fte = 0;
  long invoices_per_year = 0;
  double invoices_per_fte = 0;  // exact quotient
  long invoices_per_fte_display = 0;
  std::optional<double> nominal_invoices_per_fte;
  std::optional<double> deviation_pct;  // (computed - nominal) / nominal
  bool consistent = true;               // fte >= invoices / nominal
  std::optional<double> accuracy;
  std::optional<double> review_rate;
  std::optional<double> avg_processing_seconds;
  std::vector<std::string> notes;
};

/// Throws std::invalid_argument for fte 0 with a non-zero volume.
OperationalRow operational_row(const std::string& name, const ScenarioParams& params);
std::vector<OperationalRow> operational_table();
json to_json(const OperationalRow& r);

/// Plain-text tables in the reference layout.
std::string render_sustainability_table(const std::vector<ScenarioReport>& reports);
std::string render_operational_table(const std::vector<OperationalRow>& rows);

}  // namespace madp::sustainability
