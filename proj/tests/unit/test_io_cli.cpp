#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snimpa/io/cli.hpp"

using namespace snimpa;
using namespace snimpa::io;
namespace fs = std::filesystem;

namespace {

const std::string fixtures = SNIMPA_FIXTURES;

std::string fixture(const std::string& name) { return read_file(fixtures + "/" + name); }

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("snimpa_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args, const fs::path& stderr_file) {
    const std::string cmd = std::string(SNIMPA_CLI) + " " + args + " > /dev/null 2> " + stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string expect_config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    ADD_FAILURE() << "no ConfigError";
    return {};
}

}  // namespace

TEST(Config, LoadsDesign1) {
    const auto c = load_config(fixtures + "/design1.json");
    EXPECT_EQ(c.design_label, "design-1");
    EXPECT_EQ(c.snake.n_per_arm, 20);
    EXPECT_DOUBLE_EQ(c.snake.cs, 6.5e-12);
    EXPECT_DOUBLE_EQ(c.taper.f_cutoff, 2.6e9);
    ASSERT_TRUE(c.band.has_value());
    EXPECT_FALSE(c.pump.has_value());
    EXPECT_NEAR(c.noise_model().t_p, quantum_noise_temperature(units::angular(4.7e9)), 1e-15);
}

TEST(Config, Design2Derates) {
    const auto c = load_config(fixtures + "/design2.json");
    EXPECT_DOUBLE_EQ(c.effective_snake().ic, 0.8 * 18e-6);
    ASSERT_TRUE(c.tone_plan.has_value());
    EXPECT_EQ(c.tone_plan->bands.size(), 6u);
    EXPECT_NO_THROW(validate(*c.tone_plan, units::angular(c.pump->f_p)));
}

TEST(Config, EmptyFileIsParseError) {
    EXPECT_THROW(parse_config(""), ParseError);
    try {
        parse_config("{\n  \"snake\": {,\n}");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_STREQ(e.kind(), "parse_error");
    }
}

TEST(Config, NamesOffendingField) {
    auto j = parse_json(fixture("design1.json"));
    j["snake"]["cs_pF"] = -1.0;
    EXPECT_EQ(expect_config_error(j.dump()), "snake.cs_pF");
    j = parse_json(fixture("design1.json"));
    j["taper"]["n_sectoins"] = 10;
    EXPECT_EQ(expect_config_error(j.dump()), "taper.n_sectoins");
    j = parse_json(fixture("design1.json"));
    j["snake"].erase("l1_pH");
    EXPECT_EQ(expect_config_error(j.dump()), "snake.l1_pH");
    j = parse_json(fixture("design1.json"));
    j["snake"]["ic_uA"] = "sixteen";
    EXPECT_EQ(expect_config_error(j.dump()), "snake.ic_uA");
}

TEST(Config, HashTracksSemanticsOnly) {
    const auto text = fixture("design1.json");
    const auto h0 = config_hash(parse_config(text));
    EXPECT_EQ(h0.size(), 16u);
    // reformatting and key order do not matter
    EXPECT_EQ(config_hash(parse_config(parse_json(text).dump())), h0);
    auto j = parse_json(text);
    j["snake"]["cs_pF"] = 6.6;
    EXPECT_NE(config_hash(config_from_json(j)), h0);
    j = parse_json(text);
    j["snake"]["cs_pF"] = 6.5000;
    EXPECT_EQ(config_hash(config_from_json(j)), h0);
}

TEST(Csv, NumberFormatting) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(6.8e9), "6800000000");
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, TuningRoundTrip) {
    SnakeParams p;
    const std::vector<double> g{-1.0, 0.0, 0.5, 2.0};
    const auto rows = tuning_curve(p, g);
    const auto back = tuning_rows(parse_csv(to_csv(tuning_table(rows))));
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_NEAR(back[k].phi_e, rows[k].phi_e, 1e-11);
        EXPECT_NEAR(back[k].f_res / rows[k].f_res, 1.0, 1e-11);
    }
}

TEST(Csv, ProfileAndEnvironmentRoundTrip) {
    const auto prof = synthesize(TaperSpec{});
    const auto z = profile_impedances(parse_csv(to_csv(profile_table(prof))));
    ASSERT_EQ(z.size(), prof.z.size());
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(z[k] / prof.z[k], 1.0, 1e-11);

    const std::vector<double> f{1e9, 4.7e9, 9e9};
    const auto env = environment_impedance(TaperSpec{}, f);
    const auto back = environment_response(parse_csv(to_csv(environment_table(env))));
    const auto tab = Environment::tabulated(back);
    for (std::size_t k = 0; k < f.size(); ++k) {
        EXPECT_NEAR(std::abs(tab.impedance(f[k]) - env.z_env[k]), 0.0, 1e-9);
    }
}

TEST(Csv, EfficiencyFixtureLoadsAndValidates) {
    const auto d = efficiency_dataset(parse_csv(fixture("synthetic_efficiency.csv")), units::angular(4.7e9));
    EXPECT_EQ(d.rows.size(), 26u);
    EXPECT_THROW(efficiency_dataset(parse_csv("g_p_db,g_snr_db,eta\n10,5,0.7\n"), 1.0), ConfigError);
    EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), ConfigError);
}

TEST(Grid, Parsing) {
    const auto g = parse_grid("-0.5:0.5:11");
    EXPECT_EQ(g.n, 11);
    EXPECT_DOUBLE_EQ(g.values()[5], 0.0);
    EXPECT_THROW(parse_grid("1:0:5"), ConfigError);
    EXPECT_THROW(parse_grid("1:2"), ConfigError);
    EXPECT_THROW(parse_grid("1:2:3x"), ConfigError);
}

TEST(FixFlag, Parsing) {
    const auto a = io::detail::parse_fix("t_p=quantum", 0.11);
    EXPECT_EQ(a.which, FixedParam::t_p);
    EXPECT_EQ(a.value, 0.11);
    EXPECT_EQ(io::detail::parse_fix("alpha=0.56", 0.11).which, FixedParam::alpha);
    EXPECT_EQ(io::detail::parse_fix("t_p=0.18", 0.11).value, 0.18);
    EXPECT_THROW(io::detail::parse_fix("beta=1", 0.11), ConfigError);
}

TEST(Run, InProcessTuneCurveWritesManifest) {
    const auto out = scratch("inproc");
    RunRequest req;
    req.subcommand = "tune-curve";
    req.config_path = fixtures + "/design1.json";
    req.out_dir = out.string();
    req.grid = "-0.5:0.5:11";
    std::ostringstream err;
    ASSERT_EQ(run(req, err), exit_ok) << err.str();
    EXPECT_TRUE(fs::exists(out / "tuning_curve.csv"));
    const auto m = parse_json(read_file((out / "run_manifest.json").string()));
    EXPECT_EQ(m["config_hash"], config_hash(load_config(req.config_path)));
    const auto t = parse_csv(read_file((out / "tuning_curve.csv").string()));
    EXPECT_EQ(t.rows.size(), 11u);
    // even in flux
    EXPECT_EQ(t.number(0, 3), t.number(10, 3));
}

TEST(Run, ErrorsAreStructured) {
    const auto out = scratch("errs");
    const auto bad = out / "bad.json";
    {
        auto j = parse_json(fixture("design1.json"));
        j["snake"]["cs_pF"] = -2;
        std::ofstream(bad) << j.dump();
    }
    RunRequest req;
    req.subcommand = "taper";
    req.config_path = bad.string();
    req.out_dir = (out / "o").string();
    std::ostringstream err;
    EXPECT_EQ(run(req, err), exit_config);
    const auto j = parse_json(err.str());
    EXPECT_EQ(j["error"]["field"], "snake.cs_pF");
}

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli");
    const auto empty = out / "empty.json";
    std::ofstream(empty).close();
    const auto log = out / "stderr.txt";

    EXPECT_EQ(cli("taper --config " + fixtures + "/design1.json --out " + (out / "ok").string(), log), 0);
    EXPECT_TRUE(fs::exists(out / "ok" / "taper_profile.csv"));

    EXPECT_EQ(cli("taper --config " + empty.string() + " --out " + (out / "e").string(), log), 2);
    EXPECT_EQ(parse_json(read_file(log.string()))["error"]["kind"], "parse_error");

    EXPECT_EQ(cli("no-such-command", log), 2);
    EXPECT_EQ(cli("tune-curve --config " + fixtures + "/design1.json --grid 1:0:3 --out " + (out / "g").string(), log), 2);

    // a singular fit: every row at one gain
    const auto flat = out / "flat.csv";
    std::ofstream(flat) << "g_p_db,g_snr_db,eta\n20,12,0.2\n20,12.1,0.2\n20,11.9,0.21\n";
    EXPECT_EQ(cli("fit-efficiency --config " + fixtures + "/design1.json --data " + flat.string() + " --out " +
                      (out / "f").string(),
                  log),
              3);
    EXPECT_EQ(parse_json(read_file(log.string()))["error"]["kind"], "rank_deficiency");
}

TEST(Cli, FitEfficiencyReport) {
    const auto out = scratch("fit");
    const auto log = out / "stderr.txt";
    ASSERT_EQ(cli("fit-efficiency --config " + fixtures + "/design1.json --data " + fixtures +
                      "/synthetic_efficiency.csv --fix t_p=quantum --out " + out.string(),
                  log),
              0)
        << read_file(log.string());
    const auto j = parse_json(read_file((out / "fit_report.json").string()));
    EXPECT_EQ(j["fixed_param"], "t_p");
    EXPECT_NEAR(j["alpha"].get<double>(), 0.44, 0.02);
}
