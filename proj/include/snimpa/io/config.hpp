#pragma once

// JSON device/run configuration. Keys carry their unit as a suffix and are
// converted to SI on load; unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "snimpa/errors.hpp"
#include "snimpa/paramp_sim.hpp"
#include "snimpa/readout_metrics.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/taper_network.hpp"
#include "snimpa/units.hpp"

namespace snimpa::io {

using json = nlohmann::json;

struct PumpSection {
    double f_p = 0.0;        // Hz
    double epsilon = 0.0;
    double phi_dc_phi0 = 0.0;  // flux per junction in flux quanta
};

struct NoiseSection {
    std::optional<double> t_p;  // K; defaults to the quantum limit at f_ro
    double t_h = 5.0;           // K
    double alpha = 0.56;
};

struct DeviceConfig {
    std::string design_label;
    double ic_derate = 1.0;
    SnakeParams snake;  // as designed, before derating
    TaperSpec taper;
    std::optional<PumpSection> pump;
    std::optional<BandTarget> band;
    std::optional<double> f_probe;  // Hz, compression probe
    std::optional<TonePlan> tone_plan;
    NoiseSection noise;
    double f_ro = 4.7e9;  // Hz

    SnakeParams effective_snake() const { return derated(snake, ic_derate); }

    NoiseChainModel noise_model() const {
        NoiseChainModel m;
        m.t_q = quantum_noise_temperature(units::angular(f_ro));
        m.t_p = noise.t_p.value_or(m.t_q);
        m.t_h = noise.t_h;
        m.alpha = noise.alpha;
        return m;
    }
};

namespace detail {

class Reader {
   public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    /// Rejects keys that were never looked at.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(name(it.key()), "unknown field");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    double number(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(name(key), "missing required field");
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(name(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(name(key), "must be finite");
        return x;
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key) {
        const double x = number(key);
        if (!(x > 0.0)) throw ConfigError(name(key), "must be strictly positive, got " + std::to_string(x));
        return x;
    }

    int integer(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(name(key), "missing required field");
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(name(key), "expected an integer");
        return v.get<int>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(name(key), "expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(name(key), "expected true or false");
        return v.get<bool>();
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(name(key), "missing required section");
        return Reader(j_.at(key), name(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

   private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Parse error with a 1-based source position.
class ParseError : public ConfigError {
   public:
    ParseError(int line, int column, const std::string& what)
        : ConfigError("<json>", "parse error at line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const char* kind() const noexcept override { return "parse_error"; }

   private:
    int line_, column_;
};

inline json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        std::string msg = e.what();
        if (auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ParseError(line, col, msg);
    }
}

inline DeviceConfig config_from_json(const json& j) {
    DeviceConfig c;
    detail::Reader root(j, "");
    c.design_label = root.string("design_label", "");
    c.ic_derate = root.has("ic_derate") ? root.positive("ic_derate") : 1.0;
    {
        auto s = root.child("snake");
        c.snake.n_per_arm = s.integer("n_per_arm");
        if (c.snake.n_per_arm < 1) throw ConfigError("snake.n_per_arm", "must be at least 1");
        c.snake.l1 = s.positive("l1_pH") * units::pico_henry;
        c.snake.l2 = s.positive("l2_pH") * units::pico_henry;
        c.snake.ic = s.positive("ic_uA") * units::micro_amp;
        c.snake.lb = s.positive("lb_pH") * units::pico_henry;
        c.snake.mutual = s.positive("mutual_pH") * units::pico_henry;
        c.snake.cs = s.positive("cs_pF") * units::pico_farad;
        s.finish();
    }
    {
        auto t = root.child("taper");
        c.taper.z_source = t.positive("z_source_ohm");
        c.taper.z_load = t.positive("z_load_ohm");
        c.taper.n_sections = t.integer("n_sections");
        if (c.taper.n_sections < 1) throw ConfigError("taper.n_sections", "must be at least 1");
        c.taper.f_cutoff = t.positive("f_cutoff_GHz") * units::giga_hertz;
        c.taper.gamma_max = t.number("gamma_max", 0.05);
        if (!(c.taper.gamma_max > 0.0 && c.taper.gamma_max < 1.0)) {
            throw ConfigError("taper.gamma_max", "must lie in (0, 1)");
        }
        if (t.has("section_delay_ps")) c.taper.section_delay = t.positive("section_delay_ps") * units::pico_second;
        c.taper.z_port = t.has("z_port_ohm") ? t.positive("z_port_ohm") : 50.0;
        t.finish();
    }
    if (root.has("pump")) {
        auto p = root.child("pump");
        PumpSection ps;
        ps.f_p = p.positive("f_p_GHz") * units::giga_hertz;
        ps.epsilon = p.number("epsilon");
        if (ps.epsilon < 0.0) throw ConfigError("pump.epsilon", "must be non-negative");
        ps.phi_dc_phi0 = p.number("phi_dc_phi0");
        p.finish();
        c.pump = ps;
    }
    if (root.has("band")) {
        auto b = root.child("band");
        BandTarget bt;
        bt.f_lo = b.positive("f_lo_GHz") * units::giga_hertz;
        bt.f_hi = b.positive("f_hi_GHz") * units::giga_hertz;
        bt.gain_db = b.number("target_gain_db");
        if (!(bt.f_hi > bt.f_lo)) throw ConfigError("band.f_hi_GHz", "must exceed f_lo_GHz");
        b.finish();
        c.band = bt;
    }
    if (root.has("compression")) {
        auto s = root.child("compression");
        c.f_probe = s.positive("f_probe_GHz") * units::giga_hertz;
        s.finish();
    }
    if (root.has("tone_plan")) {
        auto s = root.child("tone_plan");
        TonePlan plan;
        const auto& bands = s.raw("bands");
        if (!bands.is_array() || bands.empty()) throw ConfigError("tone_plan.bands", "expected a non-empty array");
        for (std::size_t k = 0; k < bands.size(); ++k) {
            detail::Reader b(bands[k], "tone_plan.bands[" + std::to_string(k) + "]");
            ToneBand tb;
            tb.f_lo = b.positive("f_lo_GHz") * units::giga_hertz;
            tb.f_hi = b.positive("f_hi_GHz") * units::giga_hertz;
            tb.f_parked = b.positive("f_parked_GHz") * units::giga_hertz;
            b.finish();
            plan.bands.push_back(tb);
        }
        plan.points_per_band = s.has("points_per_band") ? s.integer("points_per_band") : plan.points_per_band;
        if (plan.points_per_band < 1) throw ConfigError("tone_plan.points_per_band", "must be at least 1");
        plan.isolated_dbm = s.number("isolated_dBm", plan.isolated_dbm);
        plan.probe_dbm = s.number("probe_dBm", plan.probe_dbm);
        plan.parked_dbm = s.number("parked_dBm", plan.parked_dbm);
        plan.enforce_one_side = s.boolean("enforce_one_side", plan.enforce_one_side);
        s.finish();
        c.tone_plan = plan;
    }
    if (root.has("noise_chain")) {
        auto s = root.child("noise_chain");
        if (s.has("t_p_K")) c.noise.t_p = s.number("t_p_K");
        if (c.noise.t_p && *c.noise.t_p < 0.0) throw ConfigError("noise_chain.t_p_K", "must be non-negative");
        c.noise.t_h = s.has("t_h_K") ? s.positive("t_h_K") : c.noise.t_h;
        c.noise.alpha = s.number("alpha", c.noise.alpha);
        if (!(c.noise.alpha > 0.0 && c.noise.alpha <= 1.0)) throw ConfigError("noise_chain.alpha", "must lie in (0, 1]");
        s.finish();
    }
    if (root.has("readout")) {
        auto s = root.child("readout");
        c.f_ro = s.positive("f_ro_GHz") * units::giga_hertz;
        s.finish();
    }
    root.finish();
    return c;
}

inline DeviceConfig parse_config(const std::string& text) { return config_from_json(parse_json(text)); }

inline DeviceConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical JSON of the validated configuration (SI units, defaults filled in).
inline json canonical_json(const DeviceConfig& c) {
    json j;
    j["design_label"] = c.design_label;
    j["ic_derate"] = c.ic_derate;
    j["snake"] = {{"n_per_arm", c.snake.n_per_arm}, {"l1", c.snake.l1},   {"l2", c.snake.l2},
                  {"ic", c.snake.ic},               {"lb", c.snake.lb},   {"mutual", c.snake.mutual},
                  {"cs", c.snake.cs}};
    j["taper"] = {{"z_source", c.taper.z_source}, {"z_load", c.taper.z_load},
                  {"n_sections", c.taper.n_sections}, {"f_cutoff", c.taper.f_cutoff},
                  {"gamma_max", c.taper.gamma_max}, {"z_port", c.taper.z_port},
                  {"section_delay", c.taper.section_delay ? json(*c.taper.section_delay) : json(nullptr)}};
    j["pump"] = c.pump ? json{{"f_p", c.pump->f_p}, {"epsilon", c.pump->epsilon}, {"phi_dc_phi0", c.pump->phi_dc_phi0}}
                       : json(nullptr);
    j["band"] = c.band ? json{{"f_lo", c.band->f_lo}, {"f_hi", c.band->f_hi}, {"gain_db", c.band->gain_db}}
                       : json(nullptr);
    j["f_probe"] = c.f_probe ? json(*c.f_probe) : json(nullptr);
    if (c.tone_plan) {
        json bands = json::array();
        for (const auto& b : c.tone_plan->bands) bands.push_back({b.f_lo, b.f_hi, b.f_parked});
        j["tone_plan"] = {{"bands", bands},
                          {"points_per_band", c.tone_plan->points_per_band},
                          {"isolated_dbm", c.tone_plan->isolated_dbm},
                          {"probe_dbm", c.tone_plan->probe_dbm},
                          {"parked_dbm", c.tone_plan->parked_dbm},
                          {"enforce_one_side", c.tone_plan->enforce_one_side}};
    } else {
        j["tone_plan"] = nullptr;
    }
    j["noise"] = {{"t_p", c.noise.t_p ? json(*c.noise.t_p) : json(nullptr)},
                  {"t_h", c.noise.t_h},
                  {"alpha", c.noise.alpha}};
    j["f_ro"] = c.f_ro;
    return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const DeviceConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(c).dump())));
    return buf;
}

}  // namespace snimpa::io
