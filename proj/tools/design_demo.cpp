// Walks one design through the toolkit: tuning range, taper loading, pump
// tuning for the readout band, and compression against a dc-SQUID device.

#include <cstdio>
#include <vector>

#include "snimpa/snimpa.hpp"

using namespace snimpa;

int main() {
    SnakeParams p;  // 40 cells, L1 = 2.6 pH, L2 = 8.0 pH, Lb = 30 pH
    p.ic = 18e-6;
    p.cs = 6.0e-12;
    p = derated(p, 0.8);

    std::printf("L_J = %.3f pH, beta = %.3f, hysteretic = %s\n", josephson_inductance(p.ic) * 1e12,
                screening_parameter(p), is_hysteretic(p) ? "yes" : "no");
    std::printf("tuning range %.3f .. %.3f GHz\n", units::hertz(resonance_frequency_at_phase(p, constants::pi)) / 1e9,
                units::hertz(resonance_frequency_at_phase(p, 0.0)) / 1e9);

    const auto env = Environment::taper(TaperSpec{});
    const double phi = flux_for_resonance(p, units::angular(4.7e9));
    const auto res = snake_resonator(p, phi);
    std::printf("bias %.4f flux quanta per junction, loaded Q %.2f\n", phi / (2 * constants::pi), loaded_q(res, env));

    const auto tuned = tune_for_band(p, env, BandTarget{4.6e9, 4.8e9, 15.0});
    std::printf("band tune: feasible %d, worst gain %.2f dB, pump %.4f GHz, epsilon %.4f\n", tuned.feasible,
                tuned.min_gain_db, units::hertz(tuned.pump.omega_p) / 1e9, tuned.pump.epsilon);

    const double wp = centered_pump_frequency(res, env);
    const double probe = 0.5 * wp + units::angular(5e6);
    const PumpConfig pump{wp, epsilon_for_gain(res, env, wp, 20.0, probe), phi};
    std::vector<double> powers;
    for (double dbm = -150; dbm <= -60; dbm += 1) powers.push_back(dbm);
    const auto snake_c = compression_point(res, env, pump, probe, powers);
    const auto dc_c = compression_point(equivalent_dc_squid(p, phi), env, pump, probe, powers);
    std::printf("input P1dB: snake %.1f dBm, dc-SQUID %.1f dBm\n", snake_c.p_in_1db, dc_c.p_in_1db);
}
