#pragma once

// Equilibrium, inductance and tuning of the rf-SQUID array ("snake") compound
// SQUID. Two arms of N unit cells each form a loop closed through the stray /
// transformer inductance Lb. Each cell is a junction bridging an L1-L2-L1
// meander of the inductive spine.
//
// Phase variables (all in radians of reduced flux 2*pi*Phi/Phi0):
//   delta  junction phase (identical in every cell)
//   phi    phase drop across the full 2N-cell array
//   phi_e  big-loop external flux
// The public API takes the applied flux *per junction*, phi_x, defined so that
// the equilibrium condition reads
//     (delta - phi_x) + beta * sin(delta) = 0,   beta = L_eff / L_J,
// the textbook rf-SQUID form. One flux quantum per junction is then exactly
// one modulation period. The big-loop flux is phi_e = phi_x * (Lb + 2N(L1+L2)) / (2L1+L2).

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snimpa/detail/parallel.hpp"
#include "snimpa/detail/roots.hpp"
#include "snimpa/errors.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

struct SnakeParams {
    int n_per_arm = 20;     // N; the device has 2N cells
    double l1 = 2.6e-12;    // H
    double l2 = 8.0e-12;    // H
    double ic = 16e-6;      // A
    double lb = 30e-12;     // H
    double mutual = 50e-12; // H, bias transformer
    double cs = 6.0e-12;    // F
};

struct OperatingPoint {
    double phi_e = 0.0;      // applied flux per junction (rad)
    double delta0 = 0.0;     // rad
    double ls = 0.0;         // H
    double omega_res = 0.0;  // rad/s
    // Taylor coefficients of the array potential in the array phase about its
    // equilibrium, U = U0 + c2 x^2 + c3 x^3 + c4 x^4 (J/rad^n).
    double c3 = 0.0;
    double c4 = 0.0;
};

struct SolveOptions {
    bool allow_hysteretic = false;
    double tolerance = 1e-12;                            // rad, on the Newton step
    int max_iterations = 200;
    double max_continuation_step = 0.01 * 2.0 * constants::pi;  // rad per junction
};

inline double josephson_inductance(double ic) {
    if (!(ic > 0.0) || !std::isfinite(ic)) {
        throw DomainError("josephson_inductance: critical current must be positive, got " +
                          std::to_string(ic));
    }
    return constants::reduced_flux_quantum / ic;
}

inline bool is_hysteretic(const SnakeParams& p) {
    return josephson_inductance(p.ic) <= 4.0 * p.l1 + p.l2;
}

inline void validate(const SnakeParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw PreconditionError(name, "must be strictly positive, got " + std::to_string(v));
        }
    };
    if (p.n_per_arm < 1) {
        throw PreconditionError("n_per_arm", "must be at least 1");
    }
    positive(p.l1, "l1");
    positive(p.l2, "l2");
    positive(p.ic, "ic");
    positive(p.lb, "lb");
    positive(p.mutual, "mutual");
    positive(p.cs, "cs");
}

inline SnakeParams derated(SnakeParams p, double ic_derate) {
    if (!(ic_derate > 0.0)) {
        throw PreconditionError("ic_derate", "must be strictly positive");
    }
    p.ic *= ic_derate;
    return p;
}

namespace detail {

// Coefficients of the implicit big-loop equilibrium
//   stiffness*delta + (L1 L2 / L_J) sin(delta) = drive * phi_e
struct LoopCoefficients {
    double lj, l1, l2, lb, cells;
    double denom;      // Lb (4L1+L2) + 2N L1 L2
    double stiffness;  // L1 + L2 - Lb (2L1+L2)^2 / denom
    double drive;      // L1 L2 (2L1+L2) / denom
    double nonlin;     // L1 L2 / L_J
};

inline LoopCoefficients loop_coefficients(const SnakeParams& p) {
    LoopCoefficients k{};
    k.lj = josephson_inductance(p.ic);
    k.l1 = p.l1;
    k.l2 = p.l2;
    k.lb = p.lb;
    k.cells = 2.0 * p.n_per_arm;
    k.denom = p.lb * (4.0 * p.l1 + p.l2) + k.cells * p.l1 * p.l2;
    const double s = 2.0 * p.l1 + p.l2;
    k.stiffness = p.l1 + p.l2 - p.lb * s * s / k.denom;
    k.drive = p.l1 * p.l2 * s / k.denom;
    k.nonlin = p.l1 * p.l2 / k.lj;
    return k;
}

inline double loop_residual(const LoopCoefficients& k, double delta, double phi_e) {
    return k.stiffness * delta + k.nonlin * std::sin(delta) - k.drive * phi_e;
}

inline double loop_residual_slope(const LoopCoefficients& k, double delta) {
    return k.stiffness + k.nonlin * std::cos(delta);
}

/// Newton solve of the big-loop equilibrium at total external flux `phi_e`,
/// seeded at `seed`. Accepts lb = 0, where it reduces to the isolated-array
/// condition with phi_e equal to the array phase.
inline double solve_loop_equilibrium(const SnakeParams& p, double phi_e, double seed,
                                     const SolveOptions& opt = {}) {
    const auto k = loop_coefficients(p);
    return damped_newton([&](double d) { return loop_residual(k, d, phi_e); },
                         [&](double d) { return loop_residual_slope(k, d); }, seed,
                         RootOptions{opt.tolerance, opt.max_iterations},
                         "equilibrium_phase");
}

inline double wrap_phase(double x) { return std::remainder(x, 2.0 * constants::pi); }

}  // namespace detail

/// Big-loop flux (rad) corresponding to an applied flux per junction.
inline double big_loop_flux(const SnakeParams& p, double phi_x) {
    const double cells = 2.0 * p.n_per_arm;
    return phi_x * (p.lb + cells * (p.l1 + p.l2)) / (2.0 * p.l1 + p.l2);
}

inline double flux_per_junction(const SnakeParams& p, double phi_e) {
    const double cells = 2.0 * p.n_per_arm;
    return phi_e * (2.0 * p.l1 + p.l2) / (p.lb + cells * (p.l1 + p.l2));
}

/// beta = L_eff/L_J of the equivalent single rf-SQUID; beta < 1 means the
/// equilibrium phase is single valued in flux.
inline double screening_parameter(const SnakeParams& p) {
    const auto k = detail::loop_coefficients(p);
    return k.nonlin / k.stiffness;
}

/// Applied flux per junction at which the equilibrium junction phase equals delta0.
inline double flux_for_junction_phase(const SnakeParams& p, double delta0) {
    return delta0 + screening_parameter(p) * std::sin(delta0);
}

// ---- potential ---------------------------------------------------------------

/// Potential energy of the 2N-cell array at junction phase delta and array phase phi (J).
inline double snake_potential(const SnakeParams& p, double delta, double phi) {
    const double cells = 2.0 * p.n_per_arm;
    const double e0 = constants::reduced_flux_quantum * constants::reduced_flux_quantum;
    const double lj = josephson_inductance(p.ic);
    const double a = delta - phi / cells;              // phase across L1
    const double b = phi / p.n_per_arm - delta;        // phase across L2
    return cells * e0 * (a * a / (2.0 * p.l1) + b * b / (2.0 * p.l2) - std::cos(delta) / lj);
}

/// Energy stored in the big-loop inductance Lb (J).
inline double big_loop_energy(const SnakeParams& p, double phi, double phi_e) {
    const double e0 = constants::reduced_flux_quantum * constants::reduced_flux_quantum;
    const double d = phi_e - phi;
    return e0 * d * d / (2.0 * p.lb);
}

/// Total potential; phi_e is the total big-loop flux.
inline double potential_energy(const SnakeParams& p, double delta, double phi, double phi_e) {
    return snake_potential(p, delta, phi) + big_loop_energy(p, phi, phi_e);
}

// ---- equilibrium -------------------------------------------------------------

/// Equilibrium junction phase at applied flux per junction phi_x.
///
/// The flux is reduced to the principal period (-pi, pi] and the physical branch
/// is tracked by continuation from zero flux in steps no larger than
/// opt.max_continuation_step, each step a damped Newton solve with a tangent
/// predictor. Hysteretic designs are rejected unless opt.allow_hysteretic.
inline double equilibrium_phase(const SnakeParams& p, double phi_x, const SolveOptions& opt = {}) {
    validate(p);
    if (!std::isfinite(phi_x)) {
        throw PreconditionError("phi_e", "flux must be finite");
    }
    if (!opt.allow_hysteretic && is_hysteretic(p)) {
        throw PreconditionError("ic", "hysteretic design (L_J <= 4 L1 + L2); pass allow_hysteretic to track a branch");
    }
    const auto k = detail::loop_coefficients(p);
    const double target = detail::wrap_phase(phi_x);
    if (target == 0.0) return 0.0;
    const int steps = static_cast<int>(std::ceil(std::abs(target) / opt.max_continuation_step));
    double delta = 0.0;
    double phi_e_prev = 0.0;
    for (int s = 1; s <= steps; ++s) {
        const double phi_e = big_loop_flux(p, target * s / steps);
        const double tangent = k.drive / detail::loop_residual_slope(k, delta);
        const double seed = delta + tangent * (phi_e - phi_e_prev);
        delta = detail::solve_loop_equilibrium(p, phi_e, std::isfinite(seed) ? seed : delta, opt);
        phi_e_prev = phi_e;
    }
    return delta;
}

/// Independent (cold-start) solve: the root is bracketed by
/// |delta - phi_x| <= beta and refined with safeguarded Newton. Non-hysteretic
/// designs only; used for parallel sweeps.
inline double equilibrium_phase_bracketed(const SnakeParams& p, double phi_x,
                                          const SolveOptions& opt = {}) {
    validate(p);
    if (!std::isfinite(phi_x)) {
        throw PreconditionError("phi_e", "flux must be finite");
    }
    if (is_hysteretic(p)) {
        throw PreconditionError("ic", "bracketed solve requires a non-hysteretic design");
    }
    const auto k = detail::loop_coefficients(p);
    const double target = detail::wrap_phase(phi_x);
    if (target == 0.0) return 0.0;
    const double phi_e = big_loop_flux(p, target);
    const double beta = k.nonlin / k.stiffness;
    return detail::bracketed_newton([&](double d) { return detail::loop_residual(k, d, phi_e); },
                                    [&](double d) { return detail::loop_residual_slope(k, d); },
                                    target - beta - 1e-9, target + beta + 1e-9,
                                    detail::RootOptions{opt.tolerance, opt.max_iterations},
                                    "equilibrium_phase");
}

/// Junction phase of the isolated array held at array phase phi (the dU/d(delta) = 0 condition).
inline double junction_phase_at_array_phase(const SnakeParams& p, double phi) {
    const double lj = josephson_inductance(p.ic);
    const double theta = phi / (2.0 * p.n_per_arm);
    const double stiff = p.l1 + p.l2;
    const double nonlin = p.l1 * p.l2 / lj;
    const double rhs = theta * (2.0 * p.l1 + p.l2);
    if (rhs == 0.0) return 0.0;
    auto f = [&](double d) { return stiff * d + nonlin * std::sin(d) - rhs; };
    auto df = [&](double d) { return stiff + nonlin * std::cos(d); };
    const double lo = (rhs - nonlin) / stiff - 1e-12;
    const double hi = (rhs + nonlin) / stiff + 1e-12;
    return detail::bracketed_newton(f, df, lo, hi, detail::RootOptions{1e-15, 200},
                                    "junction_phase_at_array_phase");
}

/// Array phase at mechanical equilibrium of the big loop (dU/d(phi) = 0) for
/// junction phase delta and total big-loop flux phi_e.
inline double array_phase_at_equilibrium(const SnakeParams& p, double delta, double phi_e) {
    const double cells = 2.0 * p.n_per_arm;
    const double b = 1.0 / p.l1 + 2.0 / p.l2;
    const double c = 1.0 / p.l1 + 4.0 / p.l2;
    return cells * (phi_e / p.lb + delta * b) / (c + cells / p.lb);
}

struct StationarityResiduals {
    double junction;  // dU/d(delta), reduced units (rad)
    double loop;      // dU/d(phi), reduced units (rad)
};

/// Gradient of the total potential at (delta, phi), scaled to dimensionless
/// phase units (divided by cells * E0 / L1 and E0 / L1 respectively).
inline StationarityResiduals stationarity_residuals(const SnakeParams& p, double delta,
                                                    double phi, double phi_e) {
    const double cells = 2.0 * p.n_per_arm;
    const double lj = josephson_inductance(p.ic);
    const double a = 1.0 / p.l1 + 1.0 / p.l2;
    const double b = 1.0 / p.l1 + 2.0 / p.l2;
    const double c = 1.0 / p.l1 + 4.0 / p.l2;
    const double s6 = delta * a + std::sin(delta) / lj - phi / cells * b;
    const double s7 = -delta * b + phi / cells * c - (phi_e - phi) / p.lb;
    return {s6 * p.l1, s7 * p.l1};
}

/// External flux needed for array phase phi, from big-loop flux quantization
/// phi_e = phi + (2 pi / Phi0) Lb I(phi).
inline double external_flux_quantization_route(const SnakeParams& p, double phi) {
    const double cells = 2.0 * p.n_per_arm;
    const double delta = junction_phase_at_array_phase(p, phi);
    const double b = 1.0 / p.l1 + 2.0 / p.l2;
    const double c = 1.0 / p.l1 + 4.0 / p.l2;
    return phi - p.lb * (delta * b - phi / cells * c);
}

/// Same quantity from the energy-derivative condition dU/d(phi) = 0 solved for phi_e.
inline double external_flux_energy_route(const SnakeParams& p, double phi) {
    const double cells = 2.0 * p.n_per_arm;
    const double delta = junction_phase_at_array_phase(p, phi);
    const double b = 1.0 / p.l1 + 2.0 / p.l2;
    const double c = 1.0 / p.l1 + 4.0 / p.l2;
    return p.lb * ((phi / cells) * (c + cells / p.lb) - delta * b);
}

// ---- electrical response ----------------------------------------------------

/// Current through the array at array phase phi, junction phases relaxed (A).
inline double current_phase(const SnakeParams& p, double phi) {
    validate(p);
    const double cells = 2.0 * p.n_per_arm;
    const double delta = junction_phase_at_array_phase(p, phi);
    const double b = 1.0 / p.l1 + 2.0 / p.l2;
    const double c = 1.0 / p.l1 + 4.0 / p.l2;
    return constants::reduced_flux_quantum * (-delta * b + phi / cells * c);
}

/// Small-signal inductance of the compound snake (two N-cell arms in parallel).
inline double snake_inductance(const SnakeParams& p, double delta0) {
    const double lj = josephson_inductance(p.ic);
    const double cd = std::cos(delta0);
    const double num = lj * (p.l1 + p.l2) + p.l1 * p.l2 * cd;
    const double den = lj + (4.0 * p.l1 + p.l2) * cd;
    if (std::abs(den) <= 1e-12 * lj) {
        throw SingularityError("snake_inductance: L_J + (4L1+L2)cos(delta0) vanishes at delta0 = " +
                               std::to_string(delta0));
    }
    return 0.5 * p.n_per_arm * num / den;
}

/// d(1/Ls)/d(phi_e) with phi_e the total big-loop flux, at junction phase delta0.
inline double inverse_inductance_flux_slope(const SnakeParams& p, double delta0) {
    const auto k = detail::loop_coefficients(p);
    const double lj = k.lj;
    const double cd = std::cos(delta0);
    const double sd = std::sin(delta0);
    const double num = lj * (p.l1 + p.l2) + p.l1 * p.l2 * cd;
    const double den = lj + (4.0 * p.l1 + p.l2) * cd;
    // 1/Ls = (2/N) den/num
    const double d_den = -(4.0 * p.l1 + p.l2) * sd;
    const double d_num = -p.l1 * p.l2 * sd;
    const double dinv_ddelta = (2.0 / p.n_per_arm) * (d_den * num - den * d_num) / (num * num);
    const double ddelta_dphie = k.drive / detail::loop_residual_slope(k, delta0);
    return dinv_ddelta * ddelta_dphie;
}

inline double resonance_frequency_at_phase(const SnakeParams& p, double delta0) {
    return 1.0 / std::sqrt((snake_inductance(p, delta0) + p.lb) * p.cs);
}

/// Resonance angular frequency 1/sqrt((Ls + Lb) Cs) at applied flux per junction.
inline double resonance_frequency(const SnakeParams& p, double phi_x, const SolveOptions& opt = {}) {
    return resonance_frequency_at_phase(p, equilibrium_phase(p, phi_x, opt));
}

/// Curvature d^2 U_s / d phi^2 of the array potential along the path where the
/// junction phases stay relaxed. Equals E0 / (4 Ls): the 2N cells in series
/// carry four times the inductance of the two arms in parallel.
inline double array_curvature(const SnakeParams& p, double phi) {
    const double e0 = constants::reduced_flux_quantum * constants::reduced_flux_quantum;
    return e0 / (4.0 * snake_inductance(p, junction_phase_at_array_phase(p, phi)));
}

struct NonlinearityCoefficients {
    double c3;
    double c4;
};

/// Third and fourth order Taylor coefficients of the array potential in the
/// array phase about the operating point.
///
/// Computed as central differences of the closed-form curvature (step 1e-4 rad)
/// with one Richardson extrapolation (h, h/2); the curvature itself is exact,
/// so only two orders of numerical differentiation are needed.
inline NonlinearityCoefficients nonlinearity_coefficients(const SnakeParams& p, double phi_x,
                                                          const SolveOptions& opt = {}) {
    const double delta0 = equilibrium_phase(p, phi_x, opt);
    const double phi0 =
        array_phase_at_equilibrium(p, delta0, big_loop_flux(p, detail::wrap_phase(phi_x)));
    constexpr double h = 1e-4;
    const double k0 = array_curvature(p, phi0);
    auto first = [&](double s) {
        return (array_curvature(p, phi0 + s) - array_curvature(p, phi0 - s)) / (2.0 * s);
    };
    auto second = [&](double s) {
        return (array_curvature(p, phi0 + s) - 2.0 * k0 + array_curvature(p, phi0 - s)) / (s * s);
    };
    const double d3 = (4.0 * first(0.5 * h) - first(h)) / 3.0;
    const double d4 = (4.0 * second(0.5 * h) - second(h)) / 3.0;
    double c3 = d3 / 6.0;
    if (detail::wrap_phase(phi_x) == 0.0) c3 = 0.0;  // exact by parity
    return {c3, d4 / 24.0};
}

inline OperatingPoint operating_point(const SnakeParams& p, double phi_x, const SolveOptions& opt = {}) {
    OperatingPoint op;
    op.phi_e = phi_x;
    op.delta0 = equilibrium_phase(p, phi_x, opt);
    op.ls = snake_inductance(p, op.delta0);
    op.omega_res = 1.0 / std::sqrt((op.ls + p.lb) * p.cs);
    const auto nl = nonlinearity_coefficients(p, phi_x, opt);
    op.c3 = nl.c3;
    op.c4 = nl.c4;
    return op;
}

/// Applied flux per junction in [0, pi] at which the resonance sits at omega.
/// Throws DomainError when omega is outside the tuning range.
inline double flux_for_resonance(const SnakeParams& p, double omega) {
    validate(p);
    const double w_max = resonance_frequency_at_phase(p, 0.0);
    const double w_min = resonance_frequency_at_phase(p, constants::pi);
    if (!(omega <= w_max && omega >= w_min)) {
        throw DomainError("flux_for_resonance: " + std::to_string(units::hertz(omega)) +
                          " Hz is outside the tuning range");
    }
    const double delta = detail::bisect(
        [&](double d) { return resonance_frequency_at_phase(p, d) - omega; }, 0.0, constants::pi,
        1e-15);
    return flux_for_junction_phase(p, delta);
}

// ---- tuning curve ------------------------------------------------------------

struct TuningRow {
    double phi_e = 0.0;
    double delta0 = 0.0;
    double ls = 0.0;
    double f_res = 0.0;  // Hz
    std::optional<std::string> error;
};

enum class SweepMode {
    continuation,  // walk outward from zero flux, each point seeding the next
    independent    // bracketed cold start per point, parallel safe
};

/// Resonance tuning table over a grid of applied flux per junction (rad).
/// Per-point solver failures are recorded in the row and do not abort the sweep.
inline std::vector<TuningRow> tuning_curve(const SnakeParams& p, std::span<const double> grid,
                                           SweepMode mode = SweepMode::continuation,
                                           int threads = 1, const SolveOptions& opt = {}) {
    validate(p);
    for (double g : grid) {
        if (!std::isfinite(g)) throw PreconditionError("grid", "flux grid must be finite");
    }
    if (!opt.allow_hysteretic && is_hysteretic(p)) {
        throw PreconditionError("ic", "hysteretic design (L_J <= 4 L1 + L2)");
    }
    std::vector<TuningRow> rows(grid.size());
    auto fill = [&](std::size_t i, double delta) {
        rows[i].phi_e = grid[i];
        rows[i].delta0 = delta;
        rows[i].ls = snake_inductance(p, delta);
        rows[i].f_res = units::hertz(1.0 / std::sqrt((rows[i].ls + p.lb) * p.cs));
    };
    auto fail = [&](std::size_t i, const std::exception& e) {
        const double nan = std::nan("");
        rows[i] = TuningRow{grid[i], nan, nan, nan, std::string(e.what())};
    };

    if (mode == SweepMode::independent) {
        detail::parallel_for(grid.size(), threads, [&](std::size_t i) {
            try {
                fill(i, equilibrium_phase_bracketed(p, grid[i], opt));
            } catch (const Error& e) {
                fail(i, e);
            }
        });
        return rows;
    }

    // Continuation: order points by wrapped flux and walk away from zero on each side.
    const auto k = detail::loop_coefficients(p);
    std::vector<std::size_t> up, down;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        (detail::wrap_phase(grid[i]) >= 0.0 ? up : down).push_back(i);
    }
    auto by_wrapped = [&](std::size_t a, std::size_t b) {
        return std::abs(detail::wrap_phase(grid[a])) < std::abs(detail::wrap_phase(grid[b]));
    };
    std::stable_sort(up.begin(), up.end(), by_wrapped);
    std::stable_sort(down.begin(), down.end(), by_wrapped);
    for (const auto* side : {&up, &down}) {
        double flux = 0.0;
        double delta = 0.0;
        for (std::size_t i : *side) {
            const double target = detail::wrap_phase(grid[i]);
            try {
                const int steps = std::max(
                    1, static_cast<int>(std::ceil(std::abs(target - flux) / opt.max_continuation_step)));
                double d = delta;
                double prev_e = big_loop_flux(p, flux);
                for (int s = 1; s <= steps; ++s) {
                    const double phi_e = big_loop_flux(p, flux + (target - flux) * s / steps);
                    const double seed = d + k.drive / detail::loop_residual_slope(k, d) * (phi_e - prev_e);
                    d = detail::solve_loop_equilibrium(p, phi_e, std::isfinite(seed) ? seed : d, opt);
                    prev_e = phi_e;
                }
                if (target == 0.0) d = 0.0;
                fill(i, d);
                flux = target;
                delta = d;
            } catch (const Error& e) {
                fail(i, e);
            }
        }
    }
    return rows;
}

}  // namespace snimpa
