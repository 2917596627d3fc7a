#pragma once

// Lumped description of the capacitively shunted nonlinear resonator used by
// the gain and saturation models: a parallel LC whose inductive branch is the
// nonlinear element in series with the linear stray inductance Lb.

#include <cmath>

#include "snimpa/environment.hpp"
#include "snimpa/errors.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

struct NonlinearResonator {
    double omega_r = 0.0;        // small-signal resonance, rad/s
    double capacitance = 0.0;    // F
    double l_element = 0.0;      // H, nonlinear element
    double l_stray = 0.0;        // H, linear series inductance
    double quartic = 0.0;        // J, x^4 coefficient of the element potential in its own phase
    double flux_slope = 0.0;     // |d ln(1/L_element) / d phi_bias|, per rad of bias-loop flux
    double mutual = 0.0;         // H, pump/bias transformer
    bool pump_depletion = true;

    double l_total() const { return l_element + l_stray; }
    /// Fraction of the node phase dropped across the nonlinear element.
    double participation() const { return l_element / l_total(); }
    double impedance() const { return std::sqrt(l_total() / capacitance); }

    /// Node phase zero-point fluctuation (rad).
    double phase_zpf() const {
        const double flux_zpf2 = constants::hbar * impedance() / 2.0;
        return std::sqrt(flux_zpf2) / constants::reduced_flux_quantum;
    }

    /// Kerr frequency shift per photon (rad/s), H/hbar = (K/2) a^+a^+ a a.
    double kerr() const {
        const double p = participation();
        const double z2 = phase_zpf() * phase_zpf();
        return 12.0 * quartic * p * p * p * p * z2 * z2 / constants::hbar;
    }

    /// Peak rf bias-line current (A) needed for a fractional modulation epsilon of 1/L_element.
    double pump_current(double epsilon) const {
        if (!(flux_slope > 0.0)) return std::numeric_limits<double>::infinity();
        const double phi_rf = epsilon / flux_slope;
        return phi_rf * constants::reduced_flux_quantum / mutual;
    }
};

/// Resonator built on the snake at applied flux per junction phi_x.
///
/// The resonator mode drives both arms of the compound SQUID in parallel, so in
/// the loop expansion the arm phase is half the array phase and odd orders
/// cancel: the element quartic is 16 c4 of the array potential.
inline NonlinearResonator snake_resonator(const SnakeParams& p, double phi_x,
                                          const SolveOptions& opt = {}) {
    const auto op = operating_point(p, phi_x, opt);
    NonlinearResonator r;
    r.omega_r = op.omega_res;
    r.capacitance = p.cs;
    r.l_element = op.ls;
    r.l_stray = p.lb;
    r.quartic = 16.0 * op.c4;
    r.flux_slope = std::abs(op.ls * inverse_inductance_flux_slope(p, op.delta0));
    r.mutual = p.mutual;
    return r;
}

/// Symmetric dc-SQUID with junction inductance lj0 at reduced loop flux phi_loop.
inline NonlinearResonator dc_squid_resonator(double lj0, double phi_loop, double l_stray, double cs,
                                             double mutual) {
    const double c = std::cos(0.5 * phi_loop);
    if (!(c > 0.0)) throw DomainError("dc_squid_resonator: loop flux must lie inside (-pi, pi)");
    NonlinearResonator r;
    r.l_element = lj0 / (2.0 * c);
    r.l_stray = l_stray;
    r.capacitance = cs;
    r.omega_r = 1.0 / std::sqrt(r.l_total() * cs);
    r.quartic = -constants::reduced_flux_quantum * constants::reduced_flux_quantum /
                (24.0 * r.l_element);
    r.flux_slope = 0.5 * std::abs(std::tan(0.5 * phi_loop));
    r.mutual = mutual;
    return r;
}

/// Single dc-SQUID device with the same element inductance, stray inductance,
/// capacitance and transformer as the snake at phi_x, biased at bias_phi0 flux quanta.
inline NonlinearResonator equivalent_dc_squid(const SnakeParams& p, double phi_x,
                                              double bias_phi0 = 0.3) {
    const double ls = snake_inductance(p, equilibrium_phase(p, phi_x));
    const double phi_loop = 2.0 * constants::pi * bias_phi0;
    const double lj0 = 2.0 * ls * std::cos(0.5 * phi_loop);
    return dc_squid_resonator(lj0, phi_loop, p.lb, p.cs, p.mutual);
}

/// External energy decay rate kappa(omega) = Re(Y_env) / C.
inline double external_decay_rate(const NonlinearResonator& r, const Environment& env, double omega) {
    return env.admittance_at_omega(omega).real() / r.capacitance;
}

/// Loaded quality factor at the small-signal resonance.
inline double loaded_q(const NonlinearResonator& r, const Environment& env) {
    return r.omega_r / external_decay_rate(r, env, r.omega_r);
}

inline double loaded_q(const SnakeParams& p, const TaperSpec& taper, double phi_x) {
    return loaded_q(snake_resonator(p, phi_x), Environment::taper(taper));
}

/// Reflection at the resonator node referenced to the environment, for the
/// phase-slope estimate of Q: Gamma = (Y_env* - Y_res) / (Y_env + Y_res).
inline complex resonator_reflection(const NonlinearResonator& r, const Environment& env, double omega) {
    const complex y_res(0.0, omega * r.capacitance - 1.0 / (omega * r.l_total()));
    const complex y_env = env.admittance_at_omega(omega);
    return (std::conj(y_env) - y_res) / (y_env + y_res);
}

}  // namespace snimpa
