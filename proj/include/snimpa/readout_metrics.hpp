#pragma once

// Dispersive-readout metrology: photon-number calibration from the ac Stark
// shift, ideal and measured SNR flux, SNR gain and efficiency of a
// paramp + HEMT chain, and the joint fit of both curves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snimpa/errors.hpp"
#include "snimpa/units.hpp"

namespace snimpa {

struct ResonatorParams {
    double chi = 0.0;       // rad/s, (w_r0 - w_r1)/2
    double kappa = 0.0;     // rad/s
    double omega_ro = 0.0;  // rad/s
};

struct NoiseChainModel {
    double t_q = 0.0;    // K
    double t_p = 0.0;    // K
    double t_h = 0.0;    // K
    double alpha = 1.0;  // power transmission resonator -> paramp
};

struct EfficiencyRow {
    double g_p = 1.0;    // linear
    double g_snr = 1.0;  // linear
    double eta = 0.0;
};

struct EfficiencyDataset {
    std::vector<EfficiencyRow> rows;
    double omega_ro = 0.0;
};

inline double quantum_noise_temperature(double omega) {
    return constants::hbar * omega / (2.0 * constants::boltzmann);
}

inline void validate(const NoiseChainModel& m) {
    if (!(m.alpha > 0.0 && m.alpha <= 1.0)) throw PreconditionError("alpha", "must lie in (0, 1]");
    if (!(m.t_h > 0.0)) throw PreconditionError("t_h", "must be strictly positive");
    if (!(m.t_q > 0.0)) throw PreconditionError("t_q", "must be strictly positive");
    if (!(m.t_p >= 0.0)) throw PreconditionError("t_p", "must be non-negative");
}

// ---- photon number and power ------------------------------------------------

struct StarkCalibration {
    double nbar = 0.0;
    bool unphysical = false;  // negative photon number: sign of shift and chi disagree
};

inline StarkCalibration stark_nbar(double delta_omega01, double chi) {
    if (chi == 0.0 || !std::isfinite(chi)) throw DomainError("stark_nbar: chi must be non-zero");
    const double n = -delta_omega01 / (2.0 * chi);
    return {n, n < 0.0};
}

enum class DrivePort {
    reflection,   // single-port: P = n hbar w ((k/2)^2 + D^2) / k
    transmission  // two-port (symmetric) coupling: twice the single-port power
};

/// Power impinging on the resonator that sustains nbar photons at detuning
/// `detuning` from the dressed resonance (W).
inline double drive_power_from_nbar(double nbar, const ResonatorParams& r, double detuning,
                                    DrivePort port = DrivePort::reflection) {
    if (!(nbar >= 0.0)) throw PreconditionError("nbar", "must be non-negative");
    if (!(r.kappa > 0.0)) throw PreconditionError("kappa", "must be strictly positive");
    const double half = 0.5 * r.kappa;
    const double p = nbar * constants::hbar * r.omega_ro * (half * half + detuning * detuning) / r.kappa;
    return port == DrivePort::transmission ? 2.0 * p : p;
}

// ---- SNR flux and efficiency ------------------------------------------------

/// Measurement rate of the ideal (quantum limited, phase preserving) chain, 1/s.
inline double ideal_snr_flux(double nbar, const ResonatorParams& r) {
    if (!(nbar >= 0.0)) throw PreconditionError("nbar", "must be non-negative");
    if (!(r.kappa > 0.0)) throw PreconditionError("kappa", "must be strictly positive");
    const double x = 2.0 * r.chi / r.kappa;
    return 8.0 * nbar * r.kappa * x * x / (1.0 + x * x);
}

inline constexpr double efficiency_bound = 0.5;

inline double efficiency_from_slope(double snr_slope, double nbar, const ResonatorParams& r,
                                    double tolerance = 1e-9) {
    if (!(snr_slope > 0.0)) throw PreconditionError("snr_slope", "must be strictly positive");
    if (!(nbar > 0.0)) throw PreconditionError("nbar", "must be strictly positive");
    const double eta = snr_slope / ideal_snr_flux(nbar, r);
    if (eta > efficiency_bound + tolerance) {
        throw ConsistencyError("efficiency " + std::to_string(eta) +
                               " exceeds the phase-preserving bound 0.5; check calibration");
    }
    return eta;
}

/// Least-squares slope of SNR vs integration time.
inline double fit_snr_slope(std::span<const double> times, std::span<const double> snr) {
    if (times.size() != snr.size() || times.size() < 2) {
        throw PreconditionError("snr", "need at least two (time, snr) samples of equal length");
    }
    const double n = static_cast<double>(times.size());
    double mt = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        mt += times[i];
        ms += snr[i];
    }
    mt /= n;
    ms /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        sxx += (times[i] - mt) * (times[i] - mt);
        sxy += (times[i] - mt) * (snr[i] - ms);
    }
    if (sxx == 0.0) throw DomainError("fit_snr_slope: all sample times coincide");
    return sxy / sxx;
}

inline double snr_gain(double g_p, const NoiseChainModel& m) {
    if (!(g_p >= 1.0)) throw PreconditionError("g_p", "gain must be at least 1");
    return g_p * (m.t_q + m.t_h) / (g_p * m.t_q + (g_p - 1.0) * m.t_p + m.t_h);
}

inline double efficiency_model(double g_p, const NoiseChainModel& m) {
    if (!(g_p >= 1.0)) throw PreconditionError("g_p", "gain must be at least 1");
    return m.alpha * g_p * m.t_q / (g_p * m.t_q + (g_p - 1.0) * m.t_p + m.t_h);
}

inline double system_noise_temperature(double eta, double omega) {
    if (!(eta > 0.0 && eta <= efficiency_bound)) {
        throw DomainError("system_noise_temperature: efficiency must lie in (0, 0.5]");
    }
    return quantum_noise_temperature(omega) / eta;
}

// ---- joint fit --------------------------------------------------------------

enum class FixedParam { t_p, alpha };

inline const char* to_string(FixedParam f) { return f == FixedParam::t_p ? "t_p" : "alpha"; }

struct FitConstraint {
    FixedParam which = FixedParam::t_p;
    double value = 0.0;
};

struct JointFitResult {
    NoiseChainModel model;
    FixedParam fixed = FixedParam::t_p;
    // one-sigma uncertainties of the free parameters; the fixed one is zero
    double sigma_alpha = 0.0;
    double sigma_t_p = 0.0;
    double sigma_t_h = 0.0;
    double residual_rms = 0.0;  // in normalized residual units
    int iterations = 0;
};

struct JointFitOptions {
    int max_iterations = 200;
    double tolerance = 1e-12;  // relative parameter step
};

namespace detail {

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Free parameters: (q, t_h) where q is alpha when t_p is fixed, t_p otherwise.
struct JointProblem {
    const EfficiencyDataset* data;
    FitConstraint fix;
    double t_q;
    double w_snr, w_eta;  // 1 / sample std

    NoiseChainModel model(const Eigen::Vector2d& x) const {
        NoiseChainModel m;
        m.t_q = t_q;
        m.t_h = x[1];
        if (fix.which == FixedParam::t_p) {
            m.t_p = fix.value;
            m.alpha = x[0];
        } else {
            m.alpha = fix.value;
            m.t_p = x[0];
        }
        return m;
    }

    Eigen::VectorXd residuals(const Eigen::Vector2d& x) const {
        const auto m = model(x);
        const auto& rows = data->rows;
        Eigen::VectorXd r(2 * rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double g = rows[i].g_p;
            const double den = g * m.t_q + (g - 1.0) * m.t_p + m.t_h;
            r[2 * i] = w_snr * (g * (m.t_q + m.t_h) / den - rows[i].g_snr);
            r[2 * i + 1] = w_eta * (m.alpha * g * m.t_q / den - rows[i].eta);
        }
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::Vector2d& x) const {
        const auto m = model(x);
        const auto& rows = data->rows;
        Eigen::MatrixXd j(2 * rows.size(), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double g = rows[i].g_p;
            const double den = g * m.t_q + (g - 1.0) * m.t_p + m.t_h;
            const double snr = g * (m.t_q + m.t_h) / den;
            const double eta = m.alpha * g * m.t_q / den;
            // d/d t_h
            const double dsnr_dth = g / den - snr / den;
            const double deta_dth = -eta / den;
            if (fix.which == FixedParam::t_p) {
                j(2 * i, 0) = 0.0;
                j(2 * i + 1, 0) = w_eta * g * m.t_q / den;
            } else {
                j(2 * i, 0) = -w_snr * snr * (g - 1.0) / den;
                j(2 * i + 1, 0) = -w_eta * eta * (g - 1.0) / den;
            }
            j(2 * i, 1) = w_snr * dsnr_dth;
            j(2 * i + 1, 1) = w_eta * deta_dth;
        }
        return j;
    }
};

}  // namespace detail

/// Joint least-squares fit of the SNR-gain and efficiency curves with one of
/// (t_p, alpha) held fixed; the pair is degenerate in the efficiency curve.
///
/// Each observable's residuals are divided by its sample standard deviation.
/// Levenberg-Marquardt from the best point of a coarse grid; uncertainties come
/// from s^2 (J^T J)^-1 at the optimum with s^2 = SSR / (m - 2).
inline JointFitResult joint_fit(const EfficiencyDataset& data, const FitConstraint& fix,
                                const JointFitOptions& opt = {}) {
    if (!(data.omega_ro > 0.0)) throw PreconditionError("omega_ro", "must be strictly positive");
    if (data.rows.size() < 3) throw PreconditionError("rows", "joint fit needs at least 3 rows");
    if (fix.which == FixedParam::alpha && !(fix.value > 0.0 && fix.value <= 1.0)) {
        throw PreconditionError("alpha", "fixed value must lie in (0, 1]");
    }
    if (fix.which == FixedParam::t_p && !(fix.value >= 0.0)) {
        throw PreconditionError("t_p", "fixed value must be non-negative");
    }
    std::vector<double> gp, snr, eta;
    for (const auto& r : data.rows) {
        if (!(r.g_p >= 1.0) || !std::isfinite(r.g_snr) || !std::isfinite(r.eta)) {
            throw PreconditionError("rows", "need g_p >= 1 and finite observables");
        }
        gp.push_back(r.g_p);
        snr.push_back(r.g_snr);
        eta.push_back(r.eta);
    }
    std::vector<double> distinct = gp;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end(),
                               [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); }),
                   distinct.end());
    if (distinct.size() < 2) {
        throw RankDeficiencyError("joint fit: all rows share one gain value; parameters are not identifiable");
    }

    detail::JointProblem prob{&data, fix, quantum_noise_temperature(data.omega_ro), 1.0, 1.0};
    const double s_snr = detail::sample_std(snr);
    const double s_eta = detail::sample_std(eta);
    prob.w_snr = s_snr > 0.0 ? 1.0 / s_snr : 1.0;
    prob.w_eta = s_eta > 0.0 ? 1.0 / s_eta : 1.0;

    // Coarse grid start: log-spaced t_h and the free parameter.
    Eigen::Vector2d x;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 25; ++i) {
        const double q = fix.which == FixedParam::t_p ? 0.02 + 0.04 * i
                                                      : prob.t_q * std::pow(10.0, -1.0 + 2.0 * i / 24.0);
        for (int k = 0; k < 25; ++k) {
            const double th = 0.1 * std::pow(10.0, 3.0 * k / 24.0);
            const Eigen::Vector2d cand(q, th);
            const double c = prob.residuals(cand).squaredNorm();
            if (c < best) {
                best = c;
                x = cand;
            }
        }
    }

    double lambda = 1e-3;
    Eigen::VectorXd r = prob.residuals(x);
    double cost = r.squaredNorm();
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd j = prob.jacobian(x);
        const Eigen::Matrix2d jtj = j.transpose() * j;
        const Eigen::Vector2d grad = j.transpose() * r;
        bool accepted = false;
        Eigen::Vector2d step = Eigen::Vector2d::Zero();
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::Matrix2d a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
            step = a.ldlt().solve(-grad);
            Eigen::Vector2d trial = x + step;
            if (trial[1] <= 0.0 || trial[0] < 0.0) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd rt = prob.residuals(trial);
            const double ct = rt.squaredNorm();
            if (ct <= cost) {
                x = trial;
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        const double rel = (step.array().abs() / x.array().abs().max(1e-30)).maxCoeff();
        if (!accepted || rel < opt.tolerance) {
            converged = accepted || rel < 1e-8;
            break;
        }
    }
    const double m = static_cast<double>(r.size());
    const double rms = std::sqrt(cost / m);
    if (!converged) throw FitError("joint fit did not converge", rms);

    const Eigen::MatrixXd j = prob.jacobian(x);
    const Eigen::Matrix2d jtj = j.transpose() * j;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(jtj);
    const auto sv = svd.singularValues();
    if (!(sv[1] > 1e-12 * sv[0])) {
        throw RankDeficiencyError("joint fit: normal matrix is singular at the optimum");
    }
    const double s2 = cost / std::max(1.0, m - 2.0);
    const Eigen::Matrix2d cov = s2 * jtj.inverse();

    JointFitResult out;
    out.model = prob.model(x);
    out.fixed = fix.which;
    out.residual_rms = rms;
    out.iterations = it;
    out.sigma_t_h = std::sqrt(cov(1, 1));
    if (fix.which == FixedParam::t_p) {
        out.sigma_alpha = std::sqrt(cov(0, 0));
    } else {
        out.sigma_t_p = std::sqrt(cov(0, 0));
    }
    return out;
}

}  // namespace snimpa
