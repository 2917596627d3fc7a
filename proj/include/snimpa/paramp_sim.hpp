#pragma once

// Flux-pumped degenerate parametric gain of the shunted nonlinear resonator.
//
// Linear model: signal/idler coupled-mode equations in the basis (a_s, a_i*)
//   [ k_s/2 - i(w_s - w_s')        i g       ] [a_s ]   [sqrt(k_s) b_s ]
//   [    -i g*          k_i/2 + i(w_i - w_i') ] [a_i*] = [sqrt(k_i) b_i*]
// with k(w) = Re Y_env(w) / C and w'(w) = w_r - Im Y_env(w) / (2C) taken from
// the environment at each tone, g = w_r p eps / 4 for a fractional modulation
// eps of 1/L_element and participation p. Outputs are b_out = sqrt(k) a - b_in.
//
// Saturation: truncated harmonic balance of the same equations with a Kerr
// shift per tone and a pump-depletion factor on g.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snimpa/detail/parallel.hpp"
#include "snimpa/detail/roots.hpp"
#include "snimpa/environment.hpp"
#include "snimpa/errors.hpp"
#include "snimpa/readout_metrics.hpp"
#include "snimpa/resonator.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

struct PumpConfig {
    double omega_p = 0.0;  // rad/s
    double epsilon = 0.0;  // fractional modulation of 1/L_element
    double phi_dc = 0.0;   // applied flux per junction, rad
};

struct LinearResponse {
    complex s_ss;  // signal reflection gain
    complex s_si;  // idler-to-signal conversion
};

struct GainProfile {
    std::vector<double> frequencies;  // Hz
    std::vector<double> signal_gain_db;
    std::vector<double> idler_frequencies;  // Hz
};

struct CompressionPoint {
    double p_in_dbm;
    double gain_db;
};

struct CompressionResult {
    double p_in_1db = std::numeric_limits<double>::quiet_NaN();
    double p_out_1db = std::numeric_limits<double>::quiet_NaN();
    double reference_gain_db = 0.0;
    bool in_range = false;
    std::vector<CompressionPoint> curve;
};

namespace detail {

struct ModeLoading {
    double kappa;      // rad/s
    double omega_eff;  // rad/s
};

inline ModeLoading loading(const NonlinearResonator& r, const Environment& env, double omega) {
    const complex y = env.admittance_at_omega(omega);
    if (!(y.real() > 0.0)) throw DomainError("environment must be passive with Re(Y) > 0");
    return {y.real() / r.capacitance, r.omega_r - y.imag() / (2.0 * r.capacitance)};
}

}  // namespace detail

inline double pump_coupling(const NonlinearResonator& r, double epsilon) {
    return r.omega_r * r.participation() * epsilon / 4.0;
}

/// Modulation depth at which a pump at omega_p drives parametric oscillation of
/// the mode at omega_p / 2.
inline double critical_epsilon(const NonlinearResonator& r, const Environment& env, double omega_p) {
    const auto m = detail::loading(r, env, 0.5 * omega_p);
    const double det = 0.5 * omega_p - m.omega_eff;
    const double g = std::sqrt(0.25 * m.kappa * m.kappa + det * det);
    return 4.0 * g / (r.omega_r * r.participation());
}

/// Pump frequency placing omega_p / 2 on the loaded resonance (fixed point of w'(w) = w).
inline double centered_pump_frequency(const NonlinearResonator& r, const Environment& env) {
    double w = r.omega_r;
    for (int i = 0; i < 50; ++i) {
        const double next = detail::loading(r, env, w).omega_eff;
        if (std::abs(next - w) < 1e-12 * w) return 2.0 * next;
        w = next;
    }
    return 2.0 * w;
}

inline void check_below_threshold(const NonlinearResonator& r, const Environment& env,
                                  const PumpConfig& pump) {
    if (!(pump.epsilon >= 0.0) || !std::isfinite(pump.epsilon)) {
        throw PreconditionError("epsilon", "must be a finite non-negative number");
    }
    if (!(pump.omega_p > 0.0)) throw PreconditionError("omega_p", "must be strictly positive");
    const double crit = critical_epsilon(r, env, pump.omega_p);
    if (pump.epsilon >= crit) throw InstabilityError(pump.epsilon, crit);
}

/// Signal reflection and idler conversion at signal frequency omega_s.
inline LinearResponse small_signal_response(const NonlinearResonator& r, const Environment& env,
                                            const PumpConfig& pump, double omega_s) {
    check_below_threshold(r, env, pump);
    const double omega_i = pump.omega_p - omega_s;
    const auto ls = detail::loading(r, env, omega_s);
    const auto li = detail::loading(r, env, omega_i);
    const double g = pump_coupling(r, pump.epsilon);
    const complex i1(0.0, 1.0);
    const complex m00 = 0.5 * ls.kappa - i1 * (omega_s - ls.omega_eff);
    const complex m01 = i1 * g;
    const complex m10 = -i1 * g;
    const complex m11 = 0.5 * li.kappa + i1 * (omega_i - li.omega_eff);
    const complex det = m00 * m11 - m01 * m10;
    const double rs = std::sqrt(ls.kappa), ri = std::sqrt(li.kappa);
    // S = sqrt(K) M^-1 sqrt(K) - I, first row
    return {rs * rs * m11 / det - 1.0, -rs * ri * m01 / det};
}

inline complex small_signal_gain(const NonlinearResonator& r, const Environment& env,
                                 const PumpConfig& pump, double omega_s) {
    return small_signal_response(r, env, pump, omega_s).s_ss;
}

inline complex small_signal_gain(const SnakeParams& p, const Environment& env, const PumpConfig& pump,
                                 double omega_s) {
    return small_signal_gain(snake_resonator(p, pump.phi_dc), env, pump, omega_s);
}

inline double gain_db(complex s) { return power::linear_to_db(std::norm(s)); }

inline GainProfile gain_profile(const NonlinearResonator& r, const Environment& env,
                                const PumpConfig& pump, std::span<const double> f_grid, int threads = 1) {
    check_below_threshold(r, env, pump);
    GainProfile out;
    out.frequencies.assign(f_grid.begin(), f_grid.end());
    out.signal_gain_db.resize(f_grid.size());
    out.idler_frequencies.resize(f_grid.size());
    detail::parallel_for(f_grid.size(), threads, [&](std::size_t k) {
        const double ws = units::angular(f_grid[k]);
        out.signal_gain_db[k] = gain_db(small_signal_gain(r, env, pump, ws));
        out.idler_frequencies[k] = units::hertz(pump.omega_p - ws);
    });
    return out;
}

/// Smallest modulation depth giving `target_db` of gain at omega_s (default omega_p / 2).
inline double epsilon_for_gain(const NonlinearResonator& r, const Environment& env, double omega_p,
                               double target_db, std::optional<double> omega_s = {}) {
    const double crit = critical_epsilon(r, env, omega_p);
    const double ws = omega_s.value_or(0.5 * omega_p);
    PumpConfig pump{omega_p, 0.0, 0.0};
    auto excess = [&](double ratio) {
        pump.epsilon = ratio * crit;
        return gain_db(small_signal_gain(r, env, pump, ws)) - target_db;
    };
    if (excess(0.0) >= 0.0) return 0.0;
    return crit * detail::bisect(excess, 0.0, 1.0 - 1e-15, 1e-14);
}

// ---- band tuning ------------------------------------------------------------

struct BandTarget {
    double f_lo = 4.6e9;  // Hz
    double f_hi = 4.8e9;  // Hz
    double gain_db = 15.0;
};

struct TuneOptions {
    int resonance_points = 13;      // candidate resonance frequencies
    double resonance_span = 0.6e9;  // Hz, centered on the band
    int offset_points = 13;         // candidate omega_p/2 positions
    double offset_span = 0.6e9;     // Hz, centered on the band
    int band_points = 81;           // frequencies checked across the band
    double margin_db = 0.25;        // required on the check grid on top of the target
};

struct TuneResult {
    PumpConfig pump;
    bool feasible = false;
    double min_gain_db = 0.0;  // over the band check grid
    GainProfile profile;
};

/// Grid search over the dc bias (through the resonance frequency it sets) and
/// the pump frequency; for each pair the smallest pump depth meeting the target
/// on the whole band is found by bisection in epsilon / epsilon_critical.
/// Among feasible candidates the one with the smallest epsilon wins, ties going
/// to the first in grid order. If none is feasible the candidate with the
/// highest worst-case gain is returned with feasible = false.
inline TuneResult tune_for_band(const SnakeParams& p, const Environment& env, const BandTarget& band,
                                const TuneOptions& opt = {}) {
    validate(p);
    if (!(band.f_hi > band.f_lo && band.f_lo > 0.0)) {
        throw PreconditionError("band", "need 0 < f_lo < f_hi");
    }
    const double w_top = resonance_frequency_at_phase(p, 0.0);
    const double w_bottom = resonance_frequency_at_phase(p, constants::pi);
    if (units::angular(band.f_hi) < w_bottom || units::angular(band.f_lo) > w_top) {
        throw PreconditionError("band", "target band lies outside the tuning range");
    }
    std::vector<double> check(opt.band_points);
    for (int k = 0; k < opt.band_points; ++k) {
        check[k] = units::angular(band.f_lo + (band.f_hi - band.f_lo) * k / (opt.band_points - 1));
    }
    const double centre = 0.5 * (band.f_lo + band.f_hi);
    auto worst = [&](const NonlinearResonator& r, const PumpConfig& pump) {
        double m = std::numeric_limits<double>::infinity();
        for (double w : check) m = std::min(m, gain_db(small_signal_gain(r, env, pump, w)));
        return m;
    };

    TuneResult best;
    double best_eps = std::numeric_limits<double>::infinity();
    double best_worst = -std::numeric_limits<double>::infinity();
    PumpConfig fallback{};
    for (int a = 0; a < opt.resonance_points; ++a) {
        const double f_res = centre + opt.resonance_span * (a / double(opt.resonance_points - 1) - 0.5);
        const double w_res = units::angular(f_res);
        if (w_res > w_top || w_res < w_bottom) continue;
        const double phi = flux_for_resonance(p, w_res);
        NonlinearResonator r;
        r.omega_r = resonance_frequency_at_phase(p, equilibrium_phase(p, phi));
        r.capacitance = p.cs;
        r.l_element = snake_inductance(p, equilibrium_phase(p, phi));
        r.l_stray = p.lb;
        for (int b = 0; b < opt.offset_points; ++b) {
            const double half = centre + opt.offset_span * (b / double(opt.offset_points - 1) - 0.5);
            PumpConfig pump{2.0 * units::angular(half), 0.0, phi};
            const double crit = critical_epsilon(r, env, pump.omega_p);
            pump.epsilon = (1.0 - 1e-9) * crit;
            const double top = worst(r, pump);
            if (top > best_worst) {
                best_worst = top;
                fallback = pump;
            }
            if (top < band.gain_db + opt.margin_db) continue;
            const double ratio = detail::bisect(
                [&](double x) {
                    pump.epsilon = x * crit;
                    return worst(r, pump) - (band.gain_db + opt.margin_db);
                },
                0.0, 1.0 - 1e-9, 1e-10);
            // bisect returns the midpoint of the final bracket; step to its feasible end
            pump.epsilon = std::min(ratio + 1e-10, 1.0 - 1e-9) * crit;
            if (worst(r, pump) < band.gain_db + opt.margin_db) continue;
            if (pump.epsilon < best_eps) {
                best_eps = pump.epsilon;
                best.pump = pump;
                best.feasible = true;
            }
        }
    }
    if (!best.feasible) best.pump = fallback;
    if (best.feasible && band.gain_db + opt.margin_db <= 0.0) best.pump.epsilon = 0.0;

    const auto r = snake_resonator(p, best.pump.phi_dc);
    std::vector<double> f(check.size());
    for (std::size_t k = 0; k < check.size(); ++k) f[k] = units::hertz(check[k]);
    best.profile = gain_profile(r, env, best.pump, f);
    best.min_gain_db = *std::min_element(best.profile.signal_gain_db.begin(), best.profile.signal_gain_db.end());
    return best;
}

// ---- harmonic balance -------------------------------------------------------

struct Tone {
    double omega = 0.0;  // rad/s
    double power_dbm = -std::numeric_limits<double>::infinity();
};

struct HarmonicBalanceOptions {
    double tolerance = 1e-11;  // relative Newton step
    int max_iterations = 60;
    int max_refinements = 8;      // halvings of a failed power step
    double ramp_start_db = -40.0;  // first continuation level relative to the requested powers
    double ramp_step_db = 5.0;
};

struct HarmonicBalanceState {
    std::vector<complex> signal;      // a_s per tone (sqrt photons)
    std::vector<complex> idler_conj;  // a_i* per tone
    double coupling = 0.0;            // depleted pump coupling (rad/s)
};

namespace detail {

struct HbSystem {
    const NonlinearResonator* res;
    double omega_p;
    double g0;
    double kerr;
    double p_ref;  // W, pump power scale for depletion; infinite disables it
    std::vector<double> ws, wi, ks, ki, es, ei;  // per tone: freqs, decay, loaded freq
    std::vector<double> drive;                   // sqrt(k_s) * b_in, real phase reference

    std::size_t n() const { return ws.size(); }

    double coupling(const Eigen::VectorXd& x) const {
        if (!std::isfinite(p_ref)) return g0;
        double absorbed = 0.0;
        for (std::size_t k = 0; k < n(); ++k) {
            const double re = x[4 * k + 2], im = x[4 * k + 3];
            absorbed += ki[k] * (re * re + im * im);
        }
        absorbed *= constants::hbar * omega_p;
        return g0 / (1.0 + absorbed / p_ref);
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
        const complex i1(0.0, 1.0);
        double total = 0.0;
        for (std::size_t k = 0; k < n(); ++k) {
            for (int j = 0; j < 4; ++j) total += x[4 * k + j] * x[4 * k + j];
        }
        const double g = coupling(x);
        Eigen::VectorXd f(4 * n());
        for (std::size_t k = 0; k < n(); ++k) {
            const complex a(x[4 * k], x[4 * k + 1]);
            const complex c(x[4 * k + 2], x[4 * k + 3]);
            const double shift_s = kerr * (2.0 * total - std::norm(a));
            const double shift_i = kerr * (2.0 * total - std::norm(c));
            const complex fs = (0.5 * ks[k] - i1 * (ws[k] - es[k] - shift_s)) * a + i1 * g * c - drive[k];
            const complex fi = (0.5 * ki[k] + i1 * (wi[k] - ei[k] - shift_i)) * c - i1 * g * a;
            const double scale = 1.0 / ks[k];
            f[4 * k] = fs.real() * scale;
            f[4 * k + 1] = fs.imag() * scale;
            f[4 * k + 2] = fi.real() / ki[k];
            f[4 * k + 3] = fi.imag() / ki[k];
        }
        return f;
    }

    /// Small-signal solution (kerr and depletion off), used as the first seed.
    Eigen::VectorXd linear(double amplitude_scale) const {
        const complex i1(0.0, 1.0);
        Eigen::VectorXd x(4 * n());
        for (std::size_t k = 0; k < n(); ++k) {
            const complex m00 = 0.5 * ks[k] - i1 * (ws[k] - es[k]);
            const complex m01 = i1 * g0;
            const complex m10 = -i1 * g0;
            const complex m11 = 0.5 * ki[k] + i1 * (wi[k] - ei[k]);
            const complex det = m00 * m11 - m01 * m10;
            const complex a = m11 * drive[k] * amplitude_scale / det;
            const complex c = -m10 * drive[k] * amplitude_scale / det;
            x[4 * k] = a.real();
            x[4 * k + 1] = a.imag();
            x[4 * k + 2] = c.real();
            x[4 * k + 3] = c.imag();
        }
        return x;
    }
};

/// Newton with forward-difference Jacobian and backtracking on |F|.
inline bool hb_newton(const HbSystem& sys, Eigen::VectorXd& x, const HarmonicBalanceOptions& opt) {
    const std::size_t dim = x.size();
    Eigen::VectorXd f = sys.residual(x);
    double fn = f.norm();
    for (int it = 0; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd jac(dim, dim);
        const double xs = std::max(1.0, x.cwiseAbs().maxCoeff());
        for (std::size_t j = 0; j < dim; ++j) {
            const double h = 1e-7 * std::max(std::abs(x[j]), 1e-3 * xs);
            Eigen::VectorXd xp = x;
            xp[j] += h;
            jac.col(j) = (sys.residual(xp) - f) / h;
        }
        const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
        if (!step.allFinite()) return false;
        double lambda = 1.0;
        Eigen::VectorXd xn = x + step;
        Eigen::VectorXd fnew = sys.residual(xn);
        int cuts = 0;
        while (fnew.norm() > fn && cuts < 30) {
            lambda *= 0.5;
            xn = x + lambda * step;
            fnew = sys.residual(xn);
            ++cuts;
        }
        if (fnew.norm() > fn && fn > 0.0) return false;
        x = xn;
        f = fnew;
        fn = f.norm();
        if (lambda * step.norm() <= opt.tolerance * std::max(1.0, x.norm())) return true;
    }
    return false;
}

inline HbSystem make_system(const NonlinearResonator& r, const Environment& env, const PumpConfig& pump,
                            std::span<const Tone> tones, double offset_db) {
    HbSystem sys;
    sys.res = &r;
    sys.omega_p = pump.omega_p;
    sys.g0 = pump_coupling(r, pump.epsilon);
    sys.kerr = r.kerr();
    if (r.pump_depletion && pump.epsilon > 0.0) {
        const double i_rf = r.pump_current(pump.epsilon);
        sys.p_ref = 0.5 * i_rf * i_rf * power::reference_impedance;
    } else {
        sys.p_ref = std::numeric_limits<double>::infinity();
    }
    for (const auto& t : tones) {
        const auto ls = loading(r, env, t.omega);
        const auto li = loading(r, env, pump.omega_p - t.omega);
        sys.ws.push_back(t.omega);
        sys.wi.push_back(pump.omega_p - t.omega);
        sys.ks.push_back(ls.kappa);
        sys.ki.push_back(li.kappa);
        sys.es.push_back(ls.omega_eff);
        sys.ei.push_back(li.omega_eff);
        const double watts = power::dbm_to_watts(t.power_dbm + offset_db);
        const double flux = std::sqrt(watts / (constants::hbar * t.omega));  // sqrt(photons/s)
        sys.drive.push_back(std::sqrt(ls.kappa) * flux);
    }
    return sys;
}

inline std::vector<double> tone_gains(const HbSystem& sys, const Eigen::VectorXd& x) {
    std::vector<double> g(sys.n());
    for (std::size_t k = 0; k < sys.n(); ++k) {
        const complex a(x[4 * k], x[4 * k + 1]);
        const double b = sys.drive[k] / std::sqrt(sys.ks[k]);
        const complex out = std::sqrt(sys.ks[k]) * a - b;
        g[k] = b > 0.0 ? std::norm(out) / (b * b) : std::numeric_limits<double>::quiet_NaN();
    }
    return g;
}

/// Advance a converged solution at offset `from` to offset `to` (dB), halving
/// the step on failure.
inline bool hb_continue(const NonlinearResonator& r, const Environment& env, const PumpConfig& pump,
                        std::span<const Tone> tones, double from, double to, Eigen::VectorXd& x,
                        const HarmonicBalanceOptions& opt, int depth = 0) {
    Eigen::VectorXd trial = x * std::pow(10.0, (to - from) / 20.0);
    if (hb_newton(make_system(r, env, pump, tones, to), trial, opt)) {
        x = trial;
        return true;
    }
    if (depth >= opt.max_refinements) return false;
    const double mid = 0.5 * (from + to);
    Eigen::VectorXd y = x;
    if (!hb_continue(r, env, pump, tones, from, mid, y, opt, depth + 1)) return false;
    if (!hb_continue(r, env, pump, tones, mid, to, y, opt, depth + 1)) return false;
    x = y;
    return true;
}

}  // namespace detail

struct ToneResult {
    std::vector<double> gain;  // linear power gain per input tone
    HarmonicBalanceState state;
};

/// Steady state with the given input tones. Tones with zero power are dropped
/// before solving. The solution is reached by ramping all powers together from
/// ramp_start_db below the request.
inline ToneResult solve_tones(const NonlinearResonator& r, const Environment& env, const PumpConfig& pump,
                              std::span<const Tone> tones, const HarmonicBalanceOptions& opt = {}) {
    check_below_threshold(r, env, pump);
    std::vector<Tone> live;
    std::vector<std::size_t> index;
    for (std::size_t k = 0; k < tones.size(); ++k) {
        if (tones[k].power_dbm > -std::numeric_limits<double>::infinity()) {
            live.push_back(tones[k]);
            index.push_back(k);
        }
    }
    ToneResult out;
    out.gain.assign(tones.size(), std::numeric_limits<double>::quiet_NaN());
    if (live.empty()) return out;

    double level = opt.ramp_start_db;
    Eigen::VectorXd x = detail::make_system(r, env, pump, live, level).linear(1.0);
    if (!detail::hb_newton(detail::make_system(r, env, pump, live, level), x, opt)) {
        throw SolverError("harmonic balance failed at the start of the power ramp", 0.0);
    }
    while (level < 0.0) {
        const double next = std::min(0.0, level + opt.ramp_step_db);
        if (!detail::hb_continue(r, env, pump, live, level, next, x, opt)) {
            const auto f = detail::make_system(r, env, pump, live, next).residual(x);
            throw SolverError("harmonic balance failed during the power ramp", f.norm());
        }
        level = next;
    }
    const auto sys = detail::make_system(r, env, pump, live, 0.0);
    const auto g = detail::tone_gains(sys, x);
    for (std::size_t k = 0; k < live.size(); ++k) {
        out.gain[index[k]] = g[k];
        out.state.signal.emplace_back(x[4 * k], x[4 * k + 1]);
        out.state.idler_conj.emplace_back(x[4 * k + 2], x[4 * k + 3]);
    }
    out.state.coupling = sys.coupling(x);
    return out;
}

/// Input 1-dB compression of the gain at omega_s over an ascending power grid (dBm).
inline CompressionResult compression_point(const NonlinearResonator& r, const Environment& env,
                                           const PumpConfig& pump, double omega_s,
                                           std::span<const double> power_grid,
                                           const HarmonicBalanceOptions& opt = {}) {
    check_below_threshold(r, env, pump);
    if (power_grid.empty()) throw PreconditionError("power_grid", "must not be empty");
    for (std::size_t k = 0; k < power_grid.size(); ++k) {
        if (!std::isfinite(power_grid[k]) || (k > 0 && !(power_grid[k] > power_grid[k - 1]))) {
            throw PreconditionError("power_grid", "must be finite and strictly increasing");
        }
    }
    CompressionResult res;
    res.reference_gain_db = gain_db(small_signal_gain(r, env, pump, omega_s));
    if (res.reference_gain_db < 3.0) {
        throw PreconditionError("epsilon", "small-signal gain below 3 dB at the probe frequency");
    }
    const Tone probe{omega_s, power_grid.front()};
    const std::span<const Tone> tones(&probe, 1);

    // Start from well below the grid, then walk the grid with continuation.
    double level = opt.ramp_start_db;
    Eigen::VectorXd x = detail::make_system(r, env, pump, tones, level).linear(1.0);
    if (!detail::hb_newton(detail::make_system(r, env, pump, tones, level), x, opt)) {
        throw SolverError("harmonic balance failed at the start of the power sweep", 0.0);
    }
    const double target = res.reference_gain_db - 1.0;
    double prev_p = 0.0, prev_g = 0.0;
    for (std::size_t k = 0; k < power_grid.size(); ++k) {
        const double offset = power_grid[k] - power_grid.front();
        while (level < offset) {
            const double next = std::min(offset, level + opt.ramp_step_db);
            if (!detail::hb_continue(r, env, pump, tones, level, next, x, opt)) {
                // a failed step past compression (bistability) ends the sweep
                return res;
            }
            level = next;
        }
        const double g =
            power::linear_to_db(detail::tone_gains(detail::make_system(r, env, pump, tones, level), x)[0]);
        res.curve.push_back({power_grid[k], g});
        if (g <= target && !res.in_range) {
            if (k == 0) {
                res.p_in_1db = power_grid[0];
            } else {
                const double t = (prev_g - target) / (prev_g - g);
                res.p_in_1db = prev_p + t * (power_grid[k] - prev_p);
            }
            res.p_out_1db = res.p_in_1db + target;
            res.in_range = true;
            return res;
        }
        prev_p = power_grid[k];
        prev_g = g;
    }
    return res;
}

// ---- multitone ---------------------------------------------------------------

struct ToneBand {
    double f_lo = 0.0;      // Hz
    double f_hi = 0.0;      // Hz
    double f_parked = 0.0;  // Hz, where the tone sits while another band is swept
};

struct TonePlan {
    std::vector<ToneBand> bands;
    int points_per_band = 11;
    double isolated_dbm = -130.0;
    double probe_dbm = -120.0;
    double parked_dbm = -120.0;
    bool enforce_one_side = true;
};

struct MultitoneRow {
    double f = 0.0;  // Hz
    int band = 0;
    bool multitone = false;
    double gain_db = 0.0;
    double snr_gain_db = 0.0;
};

inline void validate(const TonePlan& plan, double omega_p) {
    if (plan.bands.empty()) throw ConfigError("tone_plan.bands", "must not be empty");
    if (plan.points_per_band < 1) throw ConfigError("tone_plan.points_per_band", "must be at least 1");
    std::vector<ToneBand> sorted = plan.bands;
    for (const auto& b : sorted) {
        if (!(b.f_hi > b.f_lo && b.f_lo > 0.0)) throw ConfigError("tone_plan.bands", "need 0 < f_lo < f_hi");
        if (!(b.f_parked >= b.f_lo && b.f_parked <= b.f_hi)) {
            throw ConfigError("tone_plan.bands", "parked frequency must lie inside its band");
        }
    }
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.f_lo < b.f_lo; });
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        if (sorted[k].f_lo < sorted[k - 1].f_hi) throw ConfigError("tone_plan.bands", "bands overlap");
    }
    if (plan.enforce_one_side) {
        const double half = units::hertz(0.5 * omega_p);
        const bool below = sorted.back().f_hi < half;
        const bool above = sorted.front().f_lo > half;
        if (!below && !above) {
            throw ConfigError("tone_plan.bands", "all bands must lie on one side of the half pump frequency");
        }
    }
}

/// Probe each band in turn, first alone at the isolated power, then with every
/// other band's tone parked. Rows are ordered by band, probe index, condition.
inline std::vector<MultitoneRow> multitone_experiment(const NonlinearResonator& r, const Environment& env,
                                                      const PumpConfig& pump, const TonePlan& plan,
                                                      const NoiseChainModel& noise, int threads = 1,
                                                      const HarmonicBalanceOptions& opt = {}) {
    validate(plan, pump.omega_p);
    check_below_threshold(r, env, pump);
    struct Job {
        int band;
        double f;
    };
    std::vector<Job> jobs;
    for (std::size_t b = 0; b < plan.bands.size(); ++b) {
        const auto& band = plan.bands[b];
        for (int k = 0; k < plan.points_per_band; ++k) {
            const double t = plan.points_per_band == 1 ? 0.5 : k / double(plan.points_per_band - 1);
            jobs.push_back({int(b), band.f_lo + t * (band.f_hi - band.f_lo)});
        }
    }
    std::vector<MultitoneRow> rows(2 * jobs.size());
    auto to_row = [&](const Job& j, bool multi, double g) {
        MultitoneRow row;
        row.f = j.f;
        row.band = j.band;
        row.multitone = multi;
        row.gain_db = power::linear_to_db(g);
        row.snr_gain_db = power::linear_to_db(snr_gain(std::max(1.0, g), noise));
        return row;
    };
    detail::parallel_for(jobs.size(), threads, [&](std::size_t n) {
        const auto& j = jobs[n];
        const Tone alone{units::angular(j.f), plan.isolated_dbm};
        const auto iso = solve_tones(r, env, pump, std::span<const Tone>(&alone, 1), opt);
        std::vector<Tone> tones{Tone{units::angular(j.f), plan.probe_dbm}};
        for (std::size_t b = 0; b < plan.bands.size(); ++b) {
            if (int(b) != j.band) tones.push_back({units::angular(plan.bands[b].f_parked), plan.parked_dbm});
        }
        const auto multi = solve_tones(r, env, pump, tones, opt);
        rows[2 * n] = to_row(j, false, iso.gain[0]);
        rows[2 * n + 1] = to_row(j, true, multi.gain[0]);
    });
    return rows;
}

}  // namespace snimpa
