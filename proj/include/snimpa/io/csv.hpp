#pragma once

// Minimal CSV tables: a header row, then rows of numbers or bare words.
// Numbers are written with 12 significant digits ("%.12g") so output is stable
// byte for byte across runs and thread counts.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "snimpa/errors.hpp"
#include "snimpa/snake_model.hpp"
#include "snimpa/taper_network.hpp"
#include "snimpa/readout_metrics.hpp"
#include "snimpa/units.hpp"

namespace snimpa::io {

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);  // no "-0"
    return buf;
}

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) return k;
        }
        throw ConfigError(name, "column not found in table");
    }

    double number(std::size_t row, std::size_t col) const {
        const auto* v = std::get_if<double>(&rows.at(row).at(col));
        if (!v) throw ConfigError(header.at(col), "expected a number in row " + std::to_string(row + 1));
        return *v;
    }
};

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t k = 0; k < t.header.size(); ++k) {
        if (k) out += ',';
        out += t.header[k];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            if (const auto* d = std::get_if<double>(&row[k])) {
                out += format_number(*d);
            } else {
                out += std::get<std::string>(row[k]);
            }
        }
        out += '\n';
    }
    return out;
}

inline Table parse_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ConfigError("csv", "line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                         " cells, header has " + std::to_string(t.header.size()));
        }
        std::vector<Cell> row;
        for (const auto& c : cells) {
            if (c == "nan") {
                row.emplace_back(std::nan(""));
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (!c.empty() && end == c.c_str() + c.size()) {
                row.emplace_back(v);
            } else {
                row.emplace_back(c);
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ConfigError("csv", "empty table");
    return t;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("path", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- module tables ----------------------------------------------------------

inline Table tuning_table(const std::vector<TuningRow>& rows) {
    Table t{{"phi_e_per_junction", "delta0_rad", "Ls_H", "f_res_Hz"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.phi_e / (2.0 * constants::pi), r.delta0, r.ls, r.f_res});
    return t;
}

/// Inverse of tuning_table (flux column in flux quanta per junction).
inline std::vector<TuningRow> tuning_rows(const Table& t) {
    const auto c0 = t.column("phi_e_per_junction"), c1 = t.column("delta0_rad"), c2 = t.column("Ls_H"),
               c3 = t.column("f_res_Hz");
    std::vector<TuningRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.push_back({t.number(i, c0) * 2.0 * constants::pi, t.number(i, c1), t.number(i, c2), t.number(i, c3), {}});
    }
    return out;
}

inline Table profile_table(const TaperProfile& p) {
    Table t{{"section_index", "z_ohm"}, {}};
    for (std::size_t k = 0; k < p.z.size(); ++k) t.rows.push_back({double(k), p.z[k]});
    return t;
}

inline std::vector<double> profile_impedances(const Table& t) {
    const auto c = t.column("z_ohm");
    std::vector<double> z;
    for (std::size_t i = 0; i < t.rows.size(); ++i) z.push_back(t.number(i, c));
    return z;
}

inline Table environment_table(const EnvironmentResponse& r) {
    Table t{{"f_Hz", "re_z", "im_z"}, {}};
    for (std::size_t k = 0; k < r.frequencies.size(); ++k) {
        t.rows.push_back({r.frequencies[k], r.z_env[k].real(), r.z_env[k].imag()});
    }
    return t;
}

inline EnvironmentResponse environment_response(const Table& t) {
    const auto cf = t.column("f_Hz"), cr = t.column("re_z"), ci = t.column("im_z");
    EnvironmentResponse r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        r.frequencies.push_back(t.number(i, cf));
        r.z_env.emplace_back(t.number(i, cr), t.number(i, ci));
    }
    return r;
}

inline Table efficiency_table(const EfficiencyDataset& d) {
    Table t{{"g_p_db", "g_snr_db", "eta"}, {}};
    for (const auto& r : d.rows) {
        t.rows.push_back({power::linear_to_db(r.g_p), power::linear_to_db(r.g_snr), r.eta});
    }
    return t;
}

/// Efficiency dataset from `g_p_db,g_snr_db,eta` columns.
inline EfficiencyDataset efficiency_dataset(const Table& t, double omega_ro) {
    const auto cg = t.column("g_p_db"), cs = t.column("g_snr_db"), ce = t.column("eta");
    EfficiencyDataset d;
    d.omega_ro = omega_ro;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double eta = t.number(i, ce);
        if (!(eta > 0.0 && eta <= efficiency_bound)) {
            throw ConfigError("eta", "row " + std::to_string(i + 1) + " outside (0, 0.5]");
        }
        d.rows.push_back({power::db_to_linear(t.number(i, cg)), power::db_to_linear(t.number(i, cs)), eta});
    }
    return d;
}

}  // namespace snimpa::io
