#pragma once

// Klopfenstein impedance taper between the 50 ohm line and the low-impedance
// resonator, modeled as a cascade of equal-delay lossless TEM sections.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "snimpa/errors.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

using complex = std::complex<double>;

struct TaperSpec {
    double z_source = 51.0;  // ohm, port end
    double z_load = 24.0;    // ohm, resonator end
    int n_sections = 50;
    double f_cutoff = 2.6e9;  // Hz
    double gamma_max = 0.05;  // in-band ripple bound
    std::optional<double> section_delay;  // s; derived from the cutoff when absent
    double z_port = 50.0;  // ohm, termination behind the port end
};

struct TaperProfile {
    std::vector<double> z;  // ohm, index 0 at the port end
    double section_delay = 0.0;
    double ripple_bound = 0.0;  // |Gamma| in the passband of the continuous taper
    double shape = 0.0;         // Klopfenstein A
    bool degenerate = false;    // z_source == z_load, constant line
};

struct EnvironmentResponse {
    std::vector<double> frequencies;  // Hz, strictly increasing
    std::vector<complex> z_env;       // ohm
};

/// 2x2 transmission (ABCD) matrix, row major {A, B, C, D}.
struct Abcd {
    complex a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};

    friend Abcd operator*(const Abcd& l, const Abcd& r) {
        return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c,
                l.c * r.b + l.d * r.d};
    }
    complex determinant() const { return a * d - b * c; }
};

inline void validate(const TaperSpec& t) {
    if (!(t.z_source > 0.0)) throw PreconditionError("z_source", "must be strictly positive");
    if (!(t.z_load > 0.0)) throw PreconditionError("z_load", "must be strictly positive");
    if (!(t.z_port > 0.0)) throw PreconditionError("z_port", "must be strictly positive");
    if (t.n_sections < 1) throw PreconditionError("n_sections", "must be at least 1");
    if (!(t.f_cutoff > 0.0) || !std::isfinite(t.f_cutoff)) {
        throw PreconditionError("f_cutoff", "must be strictly positive");
    }
    if (!(t.gamma_max > 0.0 && t.gamma_max < 1.0)) {
        throw PreconditionError("gamma_max", "must lie in (0, 1)");
    }
    if (t.section_delay && !(*t.section_delay > 0.0)) {
        throw PreconditionError("section_delay", "must be strictly positive");
    }
}

namespace detail {

/// Klopfenstein's phi(x, A) = integral_0^x I1(A sqrt(1-y^2)) / (A sqrt(1-y^2)) dy
/// by composite Simpson; the integrand is smooth on [-1, 1] (tends to 1/2 at A->0).
inline double klopfenstein_phi(double x, double shape, int panels = 400) {
    auto integrand = [shape](double y) {
        const double u = shape * std::sqrt(std::max(0.0, 1.0 - y * y));
        if (u < 1e-8) return 0.5;
        return std::cyl_bessel_i(1.0, u) / u;
    };
    const double h = x / panels;
    double s = integrand(0.0) + integrand(x);
    for (int k = 1; k < panels; ++k) s += integrand(k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace detail

/// Stepped Klopfenstein profile. Section k samples the continuous log-impedance
/// at its midpoint, which keeps z[k] * z[n-1-k] = z_source * z_load.
inline TaperProfile klopfenstein_profile(double z_source, double z_load, int n_sections,
                                         double gamma_max) {
    TaperSpec t;
    t.z_source = z_source;
    t.z_load = z_load;
    t.n_sections = n_sections;
    t.gamma_max = gamma_max;
    validate(t);
    TaperProfile out;
    const double g0 = 0.5 * std::log(z_load / z_source);
    if (std::abs(g0) < 1e-15) {
        out.z.assign(n_sections, z_source);
        out.degenerate = true;
        return out;
    }
    out.shape = std::acosh(std::max(1.0, std::abs(g0) / gamma_max));
    out.ripple_bound = std::abs(g0) / std::cosh(out.shape);
    const double mid = 0.5 * std::log(z_source * z_load);
    const double scale = g0 / std::cosh(out.shape) * out.shape * out.shape;
    out.z.resize(n_sections);
    for (int k = 0; k < n_sections; ++k) {
        const double x = 2.0 * (k + 0.5) / n_sections - 1.0;
        out.z[k] = std::exp(mid + scale * detail::klopfenstein_phi(x, out.shape));
    }
    return out;
}

/// Total one-way delay putting the lowest passband edge of the continuous taper
/// at f_cutoff (beta * length = A).
inline double cutoff_delay(double shape, double f_cutoff) {
    return shape / (2.0 * constants::pi * f_cutoff);
}

inline TaperProfile synthesize(const TaperSpec& t) {
    validate(t);
    auto prof = klopfenstein_profile(t.z_source, t.z_load, t.n_sections, t.gamma_max);
    if (t.section_delay) {
        prof.section_delay = *t.section_delay;
    } else {
        // A degenerate taper has no cutoff; keep the length a cutoff-wavelength scale line.
        const double shape = prof.degenerate ? 1.0 : prof.shape;
        prof.section_delay = cutoff_delay(shape, t.f_cutoff) / t.n_sections;
    }
    return prof;
}

/// Alternative synthesis from a cutoff and a total electrical length (s): the
/// shape is the largest A the length supports, which sets the ripple bound.
inline TaperProfile klopfenstein_profile_for_length(double z_source, double z_load, int n_sections,
                                                    double f_cutoff, double total_delay) {
    if (!(f_cutoff > 0.0)) throw PreconditionError("f_cutoff", "must be strictly positive");
    if (!(total_delay > 0.0)) throw PreconditionError("total_delay", "must be strictly positive");
    const double shape = 2.0 * constants::pi * f_cutoff * total_delay;
    const double g0 = std::abs(0.5 * std::log(z_load / z_source));
    const double gm = g0 > 0.0 ? g0 / std::cosh(shape) : 0.5;
    auto prof = klopfenstein_profile(z_source, z_load, n_sections, std::clamp(gm, 1e-300, 0.999));
    prof.section_delay = total_delay / n_sections;
    return prof;
}

inline Abcd line_section(double z, double delay, double f) {
    const double theta = 2.0 * constants::pi * f * delay;
    const double c = std::cos(theta), s = std::sin(theta);
    return {complex(c, 0.0), complex(0.0, z * s), complex(0.0, s / z), complex(c, 0.0)};
}

/// Cascade of the sections, port end first.
inline Abcd cascade_abcd(std::span<const double> profile, double section_delay, double f) {
    if (!(f >= 0.0)) throw PreconditionError("f", "frequency must be non-negative");
    Abcd m;
    for (double z : profile) m = m * line_section(z, section_delay, f);
    return m;
}

/// Impedance seen at the input of a two-port terminated by z_term at its output.
inline complex input_impedance(const Abcd& m, complex z_term) {
    return (m.a * z_term + m.b) / (m.c * z_term + m.d);
}

/// Impedance seen looking backwards into the output with the input terminated by z_term.
inline complex output_impedance(const Abcd& m, complex z_term) {
    return (m.d * z_term + m.b) / (m.c * z_term + m.a);
}

inline complex reflection(complex z, complex z_ref) { return (z - z_ref) / (z + z_ref); }

struct SParameters {
    complex s11, s12, s21, s22;
};

/// Scattering parameters referenced to a single real impedance at both ports.
inline SParameters to_s_parameters(const Abcd& m, double z_ref) {
    const complex den = m.a + m.b / z_ref + m.c * z_ref + m.d;
    return {(m.a + m.b / z_ref - m.c * z_ref - m.d) / den, 2.0 * m.determinant() / den, 2.0 / den,
            (-m.a + m.b / z_ref - m.c * z_ref + m.d) / den};
}

/// Impedance looking from the resonator into the taper, port end terminated by z_port.
inline complex environment_impedance_at(const TaperProfile& prof, double z_port, double f) {
    return output_impedance(cascade_abcd(prof.z, prof.section_delay, f), complex(z_port, 0.0));
}

inline EnvironmentResponse environment_impedance(const TaperSpec& t, std::span<const double> f_grid) {
    const auto prof = synthesize(t);
    EnvironmentResponse r;
    r.frequencies.assign(f_grid.begin(), f_grid.end());
    r.z_env.reserve(f_grid.size());
    for (double f : f_grid) {
        if (!std::isfinite(f)) throw PreconditionError("f_grid", "frequencies must be finite");
        r.z_env.push_back(environment_impedance_at(prof, t.z_port, f));
    }
    return r;
}

/// Reflection at the 50 ohm port when the resonator end is loaded by z_resonator.
inline complex port_reflection(const TaperSpec& t, double f, complex z_resonator) {
    const auto prof = synthesize(t);
    const auto zin = input_impedance(cascade_abcd(prof.z, prof.section_delay, f), z_resonator);
    return reflection(zin, complex(t.z_port, 0.0));
}

/// Reflection of the taper terminated in exactly z_load, referenced to z_source.
inline complex matched_reflection(const TaperProfile& prof, double z_source, double z_load, double f) {
    const auto zin = input_impedance(cascade_abcd(prof.z, prof.section_delay, f), complex(z_load, 0.0));
    return reflection(zin, complex(z_source, 0.0));
}

}  // namespace snimpa
