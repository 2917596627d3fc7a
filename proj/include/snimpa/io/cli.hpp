#pragma once

// Command-line front end. Every subcommand loads the device config, runs one
// sweep and writes its tables plus run_manifest.json into --out.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "snimpa/environment.hpp"
#include "snimpa/errors.hpp"
#include "snimpa/io/config.hpp"
#include "snimpa/io/csv.hpp"
#include "snimpa/paramp_sim.hpp"
#include "snimpa/readout_metrics.hpp"
#include "snimpa/resonator.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/taper_network.hpp"

#ifndef SNIMPA_VERSION
#define SNIMPA_VERSION "0.0.0"
#endif

namespace snimpa::io {

enum ExitCode { exit_ok = 0, exit_config = 2, exit_solver = 3 };

struct Grid {
    double start = 0.0, stop = 0.0;
    int n = 0;

    std::vector<double> values() const {
        std::vector<double> v(n);
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? start : start + (stop - start) * k / (n - 1);
        return v;
    }
};

inline Grid parse_grid(const std::string& s) {
    Grid g;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &g.start, &g.stop, &g.n, &extra) != 3) {
        throw ConfigError("grid", "expected start:stop:n, got '" + s + "'");
    }
    if (!std::isfinite(g.start) || !std::isfinite(g.stop) || g.n < 1) {
        throw ConfigError("grid", "need finite bounds and n >= 1");
    }
    if (g.n > 1 && !(g.stop > g.start)) throw ConfigError("grid", "grid must be strictly increasing");
    return g;
}

struct RunRequest {
    std::string subcommand;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::string> grid;
    std::string format = "csv";
    int threads = 1;
    std::string data_path;  // fit-efficiency
    std::string fix;        // fit-efficiency, "t_p=<K>", "t_p=quantum" or "alpha=<value>"
};

namespace detail {

class Emitter {
   public:
    Emitter(std::filesystem::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {
        std::filesystem::create_directories(dir_);
    }

    void table(const std::string& stem, const Table& t) {
        if (format_ == "json") {
            json j;
            j["columns"] = t.header;
            j["rows"] = json::array();
            for (const auto& row : t.rows) {
                json r = json::array();
                for (const auto& c : row) {
                    if (const auto* d = std::get_if<double>(&c)) {
                        r.push_back(std::isfinite(*d) ? json(*d) : json(nullptr));
                    } else {
                        r.push_back(std::get<std::string>(c));
                    }
                }
                j["rows"].push_back(r);
            }
            write(stem + ".json", j.dump(2) + "\n");
        } else {
            write(stem + ".csv", to_csv(t));
        }
    }

    void document(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<std::string>& artifacts() const { return names_; }
    const std::filesystem::path& dir() const { return dir_; }

   private:
    void write(const std::string& name, const std::string& body) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("out", "cannot write " + (dir_ / name).string());
        out << body;
        names_.push_back(name);
    }

    std::filesystem::path dir_;
    std::string format_;
    std::vector<std::string> names_;
};

/// JSON numbers rounded through the 12-digit formatter.
inline json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    return std::stod(format_number(x));
}

struct ResolvedPump {
    PumpConfig pump;
    std::string source;
    std::optional<bool> feasible;
    std::optional<double> min_gain_db;
};

inline ResolvedPump resolve_pump(const DeviceConfig& cfg, const Environment& env) {
    const auto p = cfg.effective_snake();
    ResolvedPump out;
    if (cfg.pump) {
        out.pump = {units::angular(cfg.pump->f_p), cfg.pump->epsilon, 2.0 * constants::pi * cfg.pump->phi_dc_phi0};
        out.source = "config";
        return out;
    }
    if (!cfg.band) throw ConfigError("pump", "config needs either a pump section or a band to tune for");
    const auto tuned = tune_for_band(p, env, *cfg.band);
    out.pump = tuned.pump;
    out.source = "tuned";
    out.feasible = tuned.feasible;
    out.min_gain_db = tuned.min_gain_db;
    return out;
}

inline json pump_json(const ResolvedPump& rp, const NonlinearResonator& r, const Environment& env) {
    json j;
    j["source"] = rp.source;
    j["f_p_Hz"] = num(units::hertz(rp.pump.omega_p));
    j["epsilon"] = num(rp.pump.epsilon);
    j["phi_dc_phi0"] = num(rp.pump.phi_dc / (2.0 * constants::pi));
    j["critical_epsilon"] = num(critical_epsilon(r, env, rp.pump.omega_p));
    j["f_res_Hz"] = num(units::hertz(r.omega_r));
    if (rp.feasible) j["feasible"] = *rp.feasible;
    if (rp.min_gain_db) j["min_gain_db"] = num(*rp.min_gain_db);
    return j;
}

inline FitConstraint parse_fix(const std::string& s, double t_q) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("fix", "expected t_p=<K> or alpha=<value>");
    const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
    FitConstraint f;
    if (key == "t_p") {
        f.which = FixedParam::t_p;
    } else if (key == "alpha") {
        f.which = FixedParam::alpha;
    } else {
        throw ConfigError("fix", "unknown parameter '" + key + "'");
    }
    if (f.which == FixedParam::t_p && val == "quantum") {
        f.value = t_q;
        return f;
    }
    char* end = nullptr;
    f.value = std::strtod(val.c_str(), &end);
    if (val.empty() || end != val.c_str() + val.size()) throw ConfigError("fix", "bad value '" + val + "'");
    return f;
}

inline void run_subcommand(const RunRequest& req, const DeviceConfig& cfg, Emitter& emit) {
    const auto p = cfg.effective_snake();
    const auto grid = [&](const char* fallback) { return parse_grid(req.grid.value_or(fallback)).values(); };

    if (req.subcommand == "tune-curve") {
        auto flux = grid("-0.5:0.5:101");
        for (double& x : flux) x *= 2.0 * constants::pi;
        const auto rows = tuning_curve(p, flux, SweepMode::continuation, 1);
        emit.table("tuning_curve", tuning_table(rows));
        return;
    }
    const auto env = Environment::taper(cfg.taper);
    if (req.subcommand == "taper") {
        const auto f = grid("0.1:10:100");
        std::vector<double> hz(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) hz[k] = f[k] * units::giga_hertz;
        emit.table("taper_profile", profile_table(synthesize(cfg.taper)));
        emit.table("environment", environment_table(environment_impedance(cfg.taper, hz)));
        return;
    }
    if (req.subcommand == "gain" || req.subcommand == "compression" || req.subcommand == "multitone") {
        const auto rp = resolve_pump(cfg, env);
        const auto res = snake_resonator(p, rp.pump.phi_dc);
        const auto noise = cfg.noise_model();
        if (req.subcommand == "gain") {
            const auto f = grid("4.2:5.2:201");
            std::vector<double> hz(f.size());
            for (std::size_t k = 0; k < f.size(); ++k) hz[k] = f[k] * units::giga_hertz;
            const auto prof = gain_profile(res, env, rp.pump, hz, req.threads);
            Table t{{"f_Hz", "gain_db", "snr_gain_db", "condition"}, {}};
            for (std::size_t k = 0; k < hz.size(); ++k) {
                const double g = power::db_to_linear(prof.signal_gain_db[k]);
                t.rows.push_back({hz[k], prof.signal_gain_db[k],
                                  power::linear_to_db(snr_gain(std::max(1.0, g), noise)), std::string("isolated")});
            }
            emit.table("gain", t);
            emit.document("pump.json", pump_json(rp, res, env));
        } else if (req.subcommand == "compression") {
            const auto powers = grid("-150:-60:91");
            const double probe = cfg.f_probe ? units::angular(*cfg.f_probe)
                                             : 0.5 * rp.pump.omega_p + units::angular(10e6);
            const auto c = compression_point(res, env, rp.pump, probe, powers);
            Table t{{"p_in_dBm", "gain_db"}, {}};
            for (const auto& pt : c.curve) t.rows.push_back({pt.p_in_dbm, pt.gain_db});
            emit.table("compression", t);
            json j;
            j["f_probe_Hz"] = num(units::hertz(probe));
            j["reference_gain_db"] = num(c.reference_gain_db);
            j["in_range"] = c.in_range;
            j["p_in_1db_dBm"] = num(c.p_in_1db);
            j["p_out_1db_dBm"] = num(c.p_out_1db);
            j["pump"] = pump_json(rp, res, env);
            emit.document("compression.json", j);
        } else {
            if (!cfg.tone_plan) throw ConfigError("tone_plan", "multitone needs a tone_plan section");
            const auto rows = multitone_experiment(res, env, rp.pump, *cfg.tone_plan, noise, req.threads);
            Table t{{"f_Hz", "gain_db", "snr_gain_db", "condition"}, {}};
            for (const auto& r : rows) {
                t.rows.push_back({r.f, r.gain_db, r.snr_gain_db, std::string(r.multitone ? "multitone" : "isolated")});
            }
            emit.table("multitone", t);
            emit.document("pump.json", pump_json(rp, res, env));
        }
        return;
    }
    if (req.subcommand == "fit-efficiency") {
        if (req.data_path.empty()) throw ConfigError("data", "fit-efficiency needs --data <csv>");
        const double w = units::angular(cfg.f_ro);
        const auto data = efficiency_dataset(parse_csv(read_file(req.data_path)), w);
        const auto fix = parse_fix(req.fix.empty() ? "t_p=quantum" : req.fix, quantum_noise_temperature(w));
        const auto fit = joint_fit(data, fix);
        json j;
        j["alpha"] = num(fit.model.alpha);
        j["t_p_K"] = num(fit.model.t_p);
        j["t_h_K"] = num(fit.model.t_h);
        j["t_q_K"] = num(fit.model.t_q);
        j["fixed_param"] = to_string(fit.fixed);
        j["uncertainties"] = {{"alpha", num(fit.sigma_alpha)}, {"t_p_K", num(fit.sigma_t_p)}, {"t_h_K", num(fit.sigma_t_h)}};
        j["residual_rms"] = num(fit.residual_rms);
        j["rows"] = data.rows.size();
        emit.document("fit_report.json", j);
        return;
    }
    throw ConfigError("subcommand", "unknown subcommand '" + req.subcommand + "'");
}

inline int exit_code_for(const Error& e) {
    return dynamic_cast<const PreconditionError*>(&e) ? exit_config : exit_solver;
}

inline void report(std::ostream& err, const char* kind, const std::string& message, const std::string& field = {}) {
    json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    if (!field.empty()) j["error"]["field"] = field;
    err << j.dump() << "\n";
}

}  // namespace detail

/// Executes one request; returns the process exit code.
inline int run(const RunRequest& req, std::ostream& err = std::cerr) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (req.format != "csv" && req.format != "json") throw ConfigError("format", "expected csv or json");
        if (req.threads < 1) throw ConfigError("threads", "must be at least 1");
        const auto cfg = load_config(req.config_path);
        detail::Emitter emit(req.out_dir, req.format);
        detail::run_subcommand(req, cfg, emit);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json m;
        m["tool"] = "snimpa";
        m["version"] = SNIMPA_VERSION;
        m["subcommand"] = req.subcommand;
        m["config_hash"] = config_hash(cfg);
        m["design_label"] = cfg.design_label;
        m["artifacts"] = emit.artifacts();
        m["timings"] = {{"total_s", secs}};
        std::ofstream(emit.dir() / "run_manifest.json", std::ios::binary) << m.dump(2) << "\n";
        return exit_ok;
    } catch (const PreconditionError& e) {
        detail::report(err, e.kind(), e.what(), e.field());
        return exit_config;
    } catch (const Error& e) {
        detail::report(err, e.kind(), e.what());
        return detail::exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        detail::report(err, "io_error", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        detail::report(err, "internal_error", e.what());
        return exit_solver;
    }
}

/// Parses argv with CLI11 and dispatches to run().
inline int main_entry(int argc, char** argv, std::ostream& err = std::cerr) {
    CLI::App app{"snimpa: rf-SQUID array parametric amplifier design toolkit"};
    app.set_version_flag("--version", SNIMPA_VERSION);
    app.require_subcommand(1, 1);
    RunRequest req;
    auto common = [&req](CLI::App* sub) {
        sub->add_option("--config", req.config_path, "device config (JSON)")->required();
        sub->add_option("--out", req.out_dir, "output directory");
        sub->add_option("--grid", req.grid, "sweep grid start:stop:n");
        sub->add_option("--format", req.format, "table format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--threads", req.threads, "worker threads")->check(CLI::PositiveNumber);
    };
    for (const char* name : {"tune-curve", "taper", "gain", "compression", "multitone"}) {
        common(app.add_subcommand(name));
    }
    auto* fit = app.add_subcommand("fit-efficiency");
    common(fit);
    fit->add_option("--data", req.data_path, "CSV with g_p_db,g_snr_db,eta")->required();
    fit->add_option("--fix", req.fix, "t_p=<K>, t_p=quantum or alpha=<value>");
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        detail::report(err, "usage_error", e.what());
        return exit_config;
    }
    req.subcommand = app.get_subcommands().front()->get_name();
    return run(req, err);
}

}  // namespace snimpa::io
