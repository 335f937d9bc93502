#pragma once

namespace platoon {

// All quantities are SI internally (m, s, kg, W, rad). km/h appears only at
// I/O boundaries.

constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }
constexpr double mps_to_kmh(double mps) { return mps * 3.6; }

// Diesel density used to convert fuel mass to volume.
constexpr double kDieselKgPerLiter = 0.832;

// Tailpipe CO2 per liter of diesel burned.
constexpr double kCo2KgPerLiter = 2.651;

constexpr double fuel_kg_to_liters(double kg) { return kg / kDieselKgPerLiter; }
constexpr double fuel_liters_to_co2_kg(double liters) { return liters * kCo2KgPerLiter; }

}  // namespace platoon
