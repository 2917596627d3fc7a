// Acceptance run: one PASS/FAIL line per criterion with its measured figures
// and runtime against the budget. Exit status is non-zero if any line fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "oracles/synthetic.hpp"
#include "snimpa/io/cli.hpp"
#include "snimpa/snimpa.hpp"

using namespace snimpa;
namespace fs = std::filesystem;

namespace {

constexpr double two_pi = 2 * constants::pi;
constexpr double pH = 1e-12;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && secs < budget_s;
    if (!ok) ++failures;
    std::printf("%s [%d] %s: %s (%.2f s, limit %.0f s)\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                budget_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char b[128];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

oracle::Snake to_oracle(const SnakeParams& p) { return {p.n_per_arm, p.l1, p.l2, p.ic, p.lb, p.cs}; }

std::vector<SnakeParams> sample_designs() {
    std::mt19937_64 rng(20260101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SnakeParams> out;
    while (out.size() < 100) {
        SnakeParams p;
        p.n_per_arm = 1 + static_cast<int>(u(rng) * 40);
        p.l1 = (1.0 + 9.0 * u(rng)) * pH;
        p.l2 = (2.0 + 18.0 * u(rng)) * pH;
        p.lb = (5.0 + 195.0 * u(rng)) * pH;
        p.ic = (5.0 + 45.0 * u(rng)) * 1e-6;
        p.cs = (1.0 + 9.0 * u(rng)) * 1e-12;
        if (!is_hysteretic(p)) out.push_back(p);
    }
    return out;
}

std::vector<double> flux_points() {
    std::vector<double> x(21);
    for (int k = 0; k < 21; ++k) x[k] = -constants::pi + two_pi * k / 20;
    return x;
}

SnakeParams design2() {
    SnakeParams p;
    p.ic = 18e-6;
    p.cs = 6.0e-12;
    return derated(p, 0.8);
}

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = lo + (hi - lo) * k / (n - 1);
    return g;
}

// ---- criteria -----------------------------------------------------------------

Outcome equilibrium_vs_brute_force() {
    double worst = 0;
    for (const auto& p : sample_designs()) {
        const auto o = to_oracle(p);
        for (double x : flux_points()) {
            const auto m = oracle::brute_force_minimum(o, oracle::big_loop(o, x));
            worst = std::max(worst, std::abs(equilibrium_phase(p, x) - m.delta));
        }
    }
    return {worst < 1e-8, fmt("max |delta - delta_brute| = %.2e rad over 100 x 21", worst)};
}

Outcome inductance_identity() {
    double worst = 0;
    for (const auto& p : sample_designs()) {
        const auto o = to_oracle(p);
        for (double x : flux_points()) {
            const auto m = oracle::brute_force_minimum(o, oracle::big_loop(o, x));
            // the array phase spreads over 2N cells, so the step scales with the cell count
            const double ls_fd = 1.0 / (4.0 * oracle::reduced_curvature_fd(o, m.phi, 1e-2 * o.cells()));
            const double ls = snake_inductance(p, equilibrium_phase(p, x));
            worst = std::max(worst, std::abs(ls / ls_fd - 1.0));
        }
    }
    return {worst < 1e-6, fmt("max relative deviation %.2e", worst)};
}

Outcome fig1c_regime() {
    SnakeParams p;  // 2N = 40, Cs 6.0 pF, L1 2.6 pH, L2 8.0 pH, Lb 30 pH, Ic 16 uA
    const auto o = to_oracle(p);
    // zero flux: Schur complement of the array Hessian (no Lb term) gives the curvature
    const double m = o.cells();
    const double h00 = m * (1 / o.l1 + 1 / o.l2 + 1 / o.lj());
    const double h01 = m * (-1 / (m * o.l1) - 1 / (o.n * o.l2));
    const double h11 = m * (1 / (m * m * o.l1) + 1 / (double(o.n) * o.n * o.l2));
    const double ls_ref = 1.0 / (4.0 * (h11 - h01 * h01 / h00));
    const double f_ref = 1.0 / (2 * oracle::pi * std::sqrt((ls_ref + o.lb) * o.cs));
    const double f0 = units::hertz(resonance_frequency(p, 0.0));
    bool ok = std::abs(f0 / f_ref - 1) < 1e-9;

    const auto xs = grid(-constants::pi, constants::pi, 201);
    const auto rows = tuning_curve(p, xs);
    for (int k = 0; k <= 200; ++k) {
        ok &= std::abs(rows[k].f_res - rows[200 - k].f_res) <= 1e-12 * rows[k].f_res;
        ok &= std::abs(units::hertz(resonance_frequency(p, xs[k] + two_pi)) - rows[k].f_res) <= 1e-10 * rows[k].f_res;
        if (k > 100) ok &= rows[k].f_res <= rows[k - 1].f_res;
    }
    const auto d2 = design2();
    const double top = units::hertz(resonance_frequency_at_phase(d2, 0.0));
    const double bottom = units::hertz(resonance_frequency_at_phase(d2, constants::pi));
    ok &= bottom < 5.0e9 && top > 4.5e9;
    char b[200];
    std::snprintf(b, sizeof b, "f_res(0) = %.6f GHz (oracle rel %.1e); design-2 range %.3f..%.3f GHz", f0 / 1e9,
                  std::abs(f0 / f_ref - 1), bottom / 1e9, top / 1e9);
    return {ok, b};
}

Outcome taper_and_q() {
    const TaperSpec t;
    const auto prof = synthesize(t);
    // stepping margin: a 50-step staircase of the continuous profile adds reflection
    // of order (pi f tau / n)^2 times the dc mismatch, below 0.01 up to 12 GHz
    const double margin = 0.01;
    double worst = 0;
    for (double f = t.f_cutoff; f <= 12e9; f += 1e6) {
        worst = std::max(worst, std::abs(matched_reflection(prof, t.z_source, t.z_load, f)));
    }
    const auto p = design2();
    const double q = loaded_q(p, t, flux_for_resonance(p, units::angular(4.7e9)));
    const bool ok = worst <= prof.ripple_bound + margin && q >= 3.0 && q <= 5.5;
    char b[200];
    std::snprintf(b, sizeof b, "max in-band |Gamma| = %.4f (bound %.3f + %.3f); loaded Q at 4.7 GHz = %.2f", worst,
                  prof.ripple_bound, margin, q);
    return {ok, b};
}

Outcome gain_model() {
    const auto p = design2();
    const auto env = Environment::taper(TaperSpec{});
    const auto r = snake_resonator(p, flux_for_resonance(p, units::angular(4.7e9)));
    PumpConfig pump{centered_pump_frequency(r, env), 0.0, 0.0};
    pump.epsilon = 0.95 * critical_epsilon(r, env, pump.omega_p);
    double mr = 0;
    for (double f : grid(4.2e9, 5.2e9, 1001)) {
        const auto s = small_signal_response(r, env, pump, units::angular(f));
        mr = std::max(mr, std::abs(std::norm(s.s_ss) - std::norm(s.s_si) - 1.0) / std::norm(s.s_ss));
    }
    const auto res = Environment::resistive(24.0);
    PumpConfig rp{2 * r.omega_r, 0.0, 0.0};
    rp.epsilon = 0.95 * critical_epsilon(r, res, rp.omega_p);
    const double kappa = 1.0 / (24.0 * r.capacitance), g = pump_coupling(r, rp.epsilon);
    double lor = 0;
    for (double d : grid(-0.5e9, 0.5e9, 1001)) {
        const double ref = oracle::lorentzian_gain(kappa, g, two_pi * d);
        lor = std::max(lor, std::abs(std::norm(small_signal_gain(r, res, rp, r.omega_r + two_pi * d)) / ref - 1));
    }
    const auto tuned = tune_for_band(p, env, BandTarget{4.6e9, 4.8e9, 15.0});
    const auto dense = gain_profile(snake_resonator(p, tuned.pump.phi_dc), env, tuned.pump, grid(4.6e9, 4.8e9, 2001));
    const double min_gain = *std::min_element(dense.signal_gain_db.begin(), dense.signal_gain_db.end());
    const bool ok = mr < 1e-8 && lor < 1e-6 && tuned.feasible && min_gain >= 15.0;
    char b[220];
    std::snprintf(b, sizeof b, "Manley-Rowe dev %.1e; Lorentzian rel dev %.1e; band tune min gain %.2f dB", mr, lor,
                  min_gain);
    return {ok, b};
}

struct Pair {
    NonlinearResonator snake, squid;
    PumpConfig pump;
    double probe;
};

Pair matched_pair(double gain_db_target) {
    const auto p = design2();
    const auto env = Environment::taper(TaperSpec{});
    const double phi = flux_for_resonance(p, units::angular(4.7e9));
    Pair out{snake_resonator(p, phi), equivalent_dc_squid(p, phi), {}, 0.0};
    const double wp = centered_pump_frequency(out.snake, env);
    out.probe = 0.5 * wp + two_pi * 5e6;
    out.pump = {wp, epsilon_for_gain(out.snake, env, wp, gain_db_target, out.probe), phi};
    return out;
}

Outcome saturation_trend() {
    const auto env = Environment::taper(TaperSpec{});
    const auto m = matched_pair(20.0);
    const auto powers = grid(-160, -50, 221);
    const auto cs = compression_point(m.snake, env, m.pump, m.probe, powers);
    const auto cd = compression_point(m.squid, env, m.pump, m.probe, powers);
    const double diff = cs.p_in_1db - cd.p_in_1db;
    const bool ok = cs.in_range && cd.in_range && diff >= 20.0 &&
                    std::abs(cs.reference_gain_db - 20.0) < 1e-6 && std::abs(cd.reference_gain_db - 20.0) < 1e-6;
    char b[200];
    std::snprintf(b, sizeof b, "input P1dB snake %.1f dBm, dc-SQUID %.1f dBm, difference %.1f dB at 20 dB gain",
                  cs.p_in_1db, cd.p_in_1db, diff);
    return {ok, b};
}

Outcome multitone_trend() {
    const auto cfg = io::load_config(std::string(SNIMPA_FIXTURES) + "/design2.json");
    const auto p = cfg.effective_snake();
    const auto env = Environment::taper(cfg.taper);
    const PumpConfig pump{units::angular(cfg.pump->f_p), cfg.pump->epsilon, two_pi * cfg.pump->phi_dc_phi0};
    const auto snake = snake_resonator(p, pump.phi_dc);
    const auto squid = equivalent_dc_squid(p, pump.phi_dc);
    const auto noise = cfg.noise_model();
    auto plan = *cfg.tone_plan;

    // degenerate limit: parked tones off and probe at the isolated level
    auto zero = plan;
    zero.parked_dbm = -INFINITY;
    zero.probe_dbm = zero.isolated_dbm;
    bool bitwise = true;
    const auto z = multitone_experiment(snake, env, pump, zero, noise, 4);
    for (std::size_t k = 0; k < z.size(); k += 2) {
        bitwise &= z[k].gain_db == z[k + 1].gain_db && z[k].snr_gain_db == z[k + 1].snr_gain_db;
    }

    auto change = [&](const NonlinearResonator& r, double& max_abs, double& max_drop) {
        max_abs = max_drop = 0;
        const auto rows = multitone_experiment(r, env, pump, plan, noise, 4);
        for (std::size_t k = 0; k < rows.size(); k += 2) {
            const double d = rows[k + 1].gain_db - rows[k].gain_db;
            max_abs = std::max(max_abs, std::abs(d));
            max_drop = std::max(max_drop, -d);
        }
    };
    double s_abs, s_drop, d_abs, d_drop;
    change(snake, s_abs, s_drop);
    change(squid, d_abs, d_drop);
    const bool ok = bitwise && s_abs < 0.5 && d_drop > 1.0;
    char b[240];
    std::snprintf(b, sizeof b,
                  "zero-parked bitwise %s; at -120 dBm/tone snake max |dG| %.1e dB, dc-SQUID max drop %.2f dB",
                  bitwise ? "equal" : "DIFFERENT", s_abs, d_drop);
    return {ok, b};
}

Outcome metrology() {
    const double w = units::angular(4.7e9);
    const double tsys = system_noise_temperature(0.2, w);
    bool ok = std::abs(tsys - 0.560) <= 0.005;
    const double tq = quantum_noise_temperature(w);
    const NoiseChainModel m{tq, 0.18, 5.0, 0.56};
    ok &= snr_gain(1.0, m) == 1.0;
    ok &= std::abs(efficiency_model(1.0, m) - m.alpha * tq / (tq + m.t_h)) <= 1e-15;
    ok &= std::abs(snr_gain(1e15, m) - (tq + m.t_h) / (tq + m.t_p)) <= 1e-12;
    ok &= std::abs(efficiency_model(1e15, NoiseChainModel{tq, tq, 5.0, 0.44}) - 0.22) <= 1e-12;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    int violations = 0;
    for (int k = 0; k < 10000; ++k) {
        const NoiseChainModel r{tq, tq * (1 + 20 * u(rng)), 0.1 + 20 * u(rng), 0.01 + 0.99 * u(rng)};
        const double g = std::pow(10.0, 6 * u(rng));
        if (efficiency_model(g, r) > r.alpha / 2) ++violations;
    }
    ok &= violations == 0;
    char b[200];
    std::snprintf(b, sizeof b, "T_sys(eta = 0.2, 4.7 GHz) = %.1f mK; alpha/2 bound violations %d / 10000",
                  tsys * 1e3, violations);
    return {ok, b};
}

Outcome joint_fit_round_trip() {
    const double tq = oracle::t_quantum(4.7e9);
    const auto a = oracle::synthetic_efficiency({0.44, tq, 5.0}, 4.7e9, 0.01, 4401);
    const auto ra = joint_fit(a, {FixedParam::t_p, tq});
    const auto b = oracle::synthetic_efficiency({0.56, 0.18, 5.0}, 4.7e9, 0.01, 5601);
    const auto rb = joint_fit(b, {FixedParam::alpha, 0.56});
    const double za = std::abs(ra.model.alpha - 0.44) / ra.sigma_alpha;
    const double zb = std::abs(rb.model.t_p - 0.18) / rb.sigma_t_p;
    char s[240];
    std::snprintf(s, sizeof s, "alpha = %.4f +- %.4f (%.1f sigma); T_p = %.4f +- %.4f K (%.1f sigma)",
                  ra.model.alpha, ra.sigma_alpha, za, rb.model.t_p, rb.sigma_t_p, zb);
    return {za <= 3 && zb <= 3, s};
}

// ---- CLI determinism ----------------------------------------------------------

std::string read_artifact(const fs::path& f) {
    const auto text = io::read_file(f.string());
    if (f.filename() != "run_manifest.json") return text;
    auto j = io::parse_json(text);
    j.erase("timings");
    return j.dump();
}

Outcome cli_determinism() {
    const std::string fx = SNIMPA_FIXTURES;
    const fs::path root = fs::temp_directory_path() / "snimpa_acceptance_cli";
    fs::remove_all(root);
    struct Job {
        std::string name, args;
    };
    const std::vector<Job> jobs{
        {"tune-curve", "tune-curve --config " + fx + "/design2.json"},
        {"taper", "taper --config " + fx + "/design2.json"},
        {"gain", "gain --config " + fx + "/design2.json"},
        {"gain-autotune", "gain --config " + fx + "/design1.json"},
        {"compression", "compression --config " + fx + "/design2.json"},
        {"multitone", "multitone --config " + fx + "/design2.json"},
        {"fit-efficiency", "fit-efficiency --config " + fx + "/design2.json --data " + fx +
                               "/synthetic_efficiency.csv --fix t_p=quantum"},
    };
    const std::vector<std::pair<std::string, int>> runs{{"a", 1}, {"b", 1}, {"c", 4}};
    int files = 0;
    for (const auto& job : jobs) {
        for (const auto& [tag, threads] : runs) {
            const auto dir = root / job.name / tag;
            const std::string cmd = std::string(SNIMPA_CLI) + " " + job.args + " --threads " +
                                    std::to_string(threads) + " --out " + dir.string() + " > /dev/null";
            if (std::system(cmd.c_str()) != 0) return {false, job.name + " failed: " + cmd};
        }
        for (const auto& entry : fs::directory_iterator(root / job.name / "a")) {
            const auto name = entry.path().filename();
            const auto ref = read_artifact(entry.path());
            for (const char* tag : {"b", "c"}) {
                const auto other = root / job.name / tag / name;
                if (!fs::exists(other) || read_artifact(other) != ref) {
                    return {false, job.name + "/" + name.string() + " differs in run " + tag};
                }
            }
            ++files;
        }
        const auto count = [&](const char* tag) {
            return std::distance(fs::directory_iterator(root / job.name / tag), fs::directory_iterator{});
        };
        if (count("b") != count("a") || count("c") != count("a")) return {false, job.name + ": artifact sets differ"};
    }
    return {true, std::to_string(files) + " artifacts from " + std::to_string(jobs.size()) +
                      " runs identical across repeats and threads {1, 4}"};
}

}  // namespace

int main() {
    criterion(1, "snake equilibrium vs brute-force minimizer", 60, equilibrium_vs_brute_force);
    criterion(2, "closed-form inductance vs curvature", 60, inductance_identity);
    criterion(3, "zero-flux resonance and tuning curve shape", 5, fig1c_regime);
    criterion(4, "taper ripple and loaded Q", 5, taper_and_q);
    criterion(5, "gain model sanity and band tuning", 30, gain_model);
    criterion(6, "saturation: snake vs dc-SQUID", 120, saturation_trend);
    criterion(7, "multitone degeneracy and trend", 120, multitone_trend);
    criterion(8, "metrology arithmetic", 5, metrology);
    criterion(9, "joint fit round trip", 30, joint_fit_round_trip);
    criterion(10, "CLI determinism", 60, cli_determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
