#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace snimpa {

// CODATA 2018 exact values.
namespace constants {
inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double elementary_charge = 1.602176634e-19;
inline constexpr double boltzmann = 1.380649e-23;
inline constexpr double hbar = planck / (2.0 * pi);
/// Magnetic flux quantum h/2e (Wb).
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);
/// Reduced flux quantum Phi0/2pi (Wb per radian of phase).
inline constexpr double reduced_flux_quantum = flux_quantum / (2.0 * pi);
}  // namespace constants

namespace units {
inline constexpr double pico_henry = 1e-12;
inline constexpr double pico_farad = 1e-12;
inline constexpr double micro_amp = 1e-6;
inline constexpr double giga_hertz = 1e9;
inline constexpr double pico_second = 1e-12;

constexpr double angular(double f_hz) { return 2.0 * constants::pi * f_hz; }
constexpr double hertz(double omega) { return omega / (2.0 * constants::pi); }
}  // namespace units

// Power bookkeeping. Every dBm<->W conversion in the project goes through here;
// voltage conversions use the 50 ohm reference.
namespace power {
inline constexpr double reference_impedance = 50.0;

inline double dbm_to_watts(double dbm) {
    if (dbm == -std::numeric_limits<double>::infinity()) return 0.0;
    return 1e-3 * std::pow(10.0, dbm / 10.0);
}

inline double watts_to_dbm(double watts) {
    if (watts <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(watts / 1e-3);
}

/// Peak voltage amplitude of a sinusoid delivering `watts` into the reference load.
inline double watts_to_peak_volts(double watts) {
    return std::sqrt(2.0 * watts * reference_impedance);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Sum of powers given in dBm.
template <class Range>
double total_dbm(const Range& levels) {
    double w = 0.0;
    for (double l : levels) w += dbm_to_watts(l);
    return watts_to_dbm(w);
}
}  // namespace power

}  // namespace snimpa
