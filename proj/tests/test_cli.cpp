#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bdar/cli.hpp"

using namespace bdar;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "bdar");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data_file(const std::string& name) { return std::string(BDAR_DATA_DIR) + "/" + name; }

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "bdar_test_cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

/// Fixture arguments: raw CSV with the per-series rules of the bundled config.
std::vector<std::string> fixture_args(const fs::path& out) {
    return {"--config", data_file("application.cfg"), "--input", data_file("unemployment_synthetic.csv"),
            "-o",       out.string()};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& more) {
    a.insert(a.end(), more.begin(), more.end());
    return a;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool near_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_NE(run({}).code, 0);
    EXPECT_NE(run({"frobnicate"}).code, 0);
    EXPECT_NE(run({"fit", "--no-such-flag"}).code, 0);
    EXPECT_NE(run({"fit", "--workers", "0"}).code, 0);
}

TEST(Cli, ConfigRejectsUnknownKeys) {
    const auto dir = fresh_dir("badcfg");
    const auto cfg = (dir / "bad.cfg").string();
    io::write_text(cfg, "seed = 3\nbogus_key = 1\n");
    const auto r = run({"diagnose", "--config", cfg, "--input", data_file("unemployment_synthetic_ordinal.csv")});
    EXPECT_NE(r.code, 0);
    EXPECT_NE((r.out + r.err).find("bogus_key"), std::string::npos) << r.out << r.err;
}

TEST(Cli, IngestAndDiscretize) {
    const auto dir = fresh_dir("discretize");
    auto r = run(with(fixture_args(dir), {"ingest"}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("104 rows"), std::string::npos);
    r = run(with(fixture_args(dir), {"discretize"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ours = io::read_ordinal_csv((dir / "ordinal.csv").string());
    const auto bundled = io::read_ordinal_csv(data_file("unemployment_synthetic_ordinal.csv"));
    EXPECT_EQ(ours.z1, bundled.z1);
    EXPECT_EQ(ours.z2, bundled.z2);
    EXPECT_TRUE(fs::exists(dir / "rule.json"));
}

TEST(Cli, SharedRuleLeavesUnobservedState) {
    const auto dir = fresh_dir("shared_rule");
    const auto r = run({"compare", "--input", data_file("unemployment_synthetic.csv"), "--rule",
                        "1.9,5.9,7.7,12.75,19.9", "-o", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("collapse"), std::string::npos) << r.err;
}

TEST(Cli, Diagnose) {
    const auto dir = fresh_dir("diagnose");
    const auto r = run({"diagnose", "--input", data_file("unemployment_synthetic_ordinal.csv"), "-o", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::load((dir / "diagnostics.json").string());
    const auto golden = json::load(std::string(BDAR_TEST_DATA_DIR) + "/golden_diagnostics.json");
    EXPECT_NEAR(j.at("tau_cross").get<double>(), golden.at("tau_cross").get<double>(), 1e-12);
}

TEST(Cli, SingleVariantCompare) {
    const auto dir = fresh_dir("single");
    const auto r = run(with(fixture_args(dir), {"compare", "--variants", "M3"}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(io::read_text((dir / "criteria.csv").string())), 2u);
    EXPECT_TRUE(fs::exists(dir / "params_M3.json"));
    EXPECT_FALSE(fs::exists(dir / "params_M5.json"));
    EXPECT_NE(r.out.find("choosing M3"), std::string::npos);
}

TEST(Cli, CommandLineOverridesConfig) {
    const auto dir = fresh_dir("override");
    const auto cfg = (dir / "c.cfg").string();
    io::write_text(cfg, "variants = [\"M1\", \"M2\"]\nseed = 4\n");
    const auto r = run({"compare", "--config", cfg, "--input", data_file("unemployment_synthetic_ordinal.csv"),
                        "--variants", "M1", "-o", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "params_M1.json"));
    EXPECT_FALSE(fs::exists(dir / "params_M2.json"));
    const auto r2 = run({"compare", "--config", cfg, "--input", data_file("unemployment_synthetic_ordinal.csv"), "-o",
                         (dir / "b").string()});
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_TRUE(fs::exists(dir / "b" / "params_M2.json"));
}

TEST(Cli, CompareMatchesGoldenFits) {
    const auto dir = fresh_dir("golden");
    const auto r = run(with(fixture_args(dir), {"compare"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto got = json::load((dir / "fits.json").string()).at("fits");
    const auto want = json::load(std::string(BDAR_TEST_DATA_DIR) + "/golden_fits.json").at("fits");
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t m = 0; m < got.size(); ++m) {
        const auto a = json::fit_report_from_json(got[m]);
        const auto b = json::fit_report_from_json(want[m]);
        ASSERT_EQ(a.variant, b.variant);
        EXPECT_TRUE(near_rel(a.loglik, b.loglik, 1e-6)) << to_string(a.variant);
        ASSERT_EQ(a.estimates.size(), b.estimates.size());
        for (std::size_t k = 0; k < a.estimates.size(); ++k)
            EXPECT_TRUE(near_rel(a.estimates[k], b.estimates[k], 1e-6))
                << to_string(a.variant) << ' ' << a.param_names[k] << ": " << a.estimates[k] << " vs " << b.estimates[k];
    }
}

TEST(Cli, FixtureNestingOrder) {
    const auto dir = fresh_dir("nesting");
    ASSERT_EQ(run(with(fixture_args(dir), {"compare"})).code, 0);
    const auto fits = json::load((dir / "fits.json").string()).at("fits");
    std::map<std::string, double> ll;
    for (const auto& f : fits) ll[f.at("variant").get<std::string>()] = f.at("loglik").get<double>();
    ASSERT_EQ(ll.size(), 5u);
    for (const char* v : {"M1", "M2", "M3", "M4"}) EXPECT_GE(ll["M5"], ll[v] - 1e-6) << v;
    EXPECT_GE(ll["M3"], ll["M1"] - 1e-6);
    EXPECT_GE(ll["M4"], ll["M1"] - 1e-6);
}

TEST(Cli, ParamsRoundTripLoglik) {
    const auto dir = fresh_dir("roundtrip");
    ASSERT_EQ(run(with(fixture_args(dir), {"compare"})).code, 0);
    const auto data = io::read_ordinal_csv(data_file("unemployment_synthetic_ordinal.csv"));
    for (const auto& f : json::load((dir / "fits.json").string()).at("fits")) {
        const std::string v = f.at("variant").get<std::string>();
        const auto p = workflow::load_params((dir / ("params_" + v + ".json")).string());
        EXPECT_NEAR(conditional_loglik(p, data), f.at("loglik").get<double>(), 1e-9) << v;
    }
}

TEST(Cli, ByteIdenticalOutputs) {
    const auto a = fresh_dir("det_a");
    const auto b = fresh_dir("det_b");
    for (const auto& d : {a, b}) {
        ASSERT_EQ(run(with(fixture_args(d), {"compare"})).code, 0);
        ASSERT_EQ(run(with(fixture_args(d), {"forecast", "--params", (d / "params_M5.json").string(), "--n-sims",
                                             "2000", "--workers", d == a ? "1" : "4"}))
                      .code,
                  0);
        ASSERT_EQ(run(with(fixture_args(d), {"simulate", "--params", data_file("model5_params.json"), "--emit-raw",
                                             "--time-start", "1998Q1"}))
                      .code,
                  0);
    }
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto name = e.path().filename();
        ASSERT_TRUE(fs::exists(b / name)) << name;
        EXPECT_EQ(io::read_text(e.path().string()), io::read_text((b / name).string())) << name;
        ++n;
    }
    EXPECT_EQ(n, 14u);
}

TEST(Cli, ForecastFilesAndValidation) {
    const auto dir = fresh_dir("forecast");
    const std::vector<std::string> base{"forecast", "--params", data_file("model5_params.json"), "-o", dir.string()};
    auto r = run(with(base, {"--last-state", "2,1"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto marg = io::read_csv((dir / "forecast_marginals.csv").string());
    EXPECT_EQ(marg.rows.size(), 12u);
    EXPECT_EQ(marg.header.size(), 1u + 4u + 3u);
    EXPECT_EQ(io::read_csv((dir / "forecast_modes.csv").string()).rows.size(), 12u);
    EXPECT_EQ(json::load((dir / "forecast_joint.json").string()).at("steps").size(), 12u);

    r = run(with(base, {"--last-state", "2,1", "--n-sims", "0"}));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("n_sims"), std::string::npos) << r.err;
    r = run({"forecast", "--last-state", "2,1", "-o", dir.string()});
    EXPECT_EQ(r.code, 1);
    r = run({"forecast", "--params", (dir / "missing.json").string(), "--last-state", "2,1", "-o", dir.string()});
    EXPECT_EQ(r.code, 1);
    r = run(with(base, {"--last-state", "5,1"}));
    EXPECT_EQ(r.code, 1);
    // Without --last-state the final observed pair is used.
    r = run(with(base, {"--input", data_file("unemployment_synthetic_ordinal.csv")}));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ord = io::read_ordinal_csv(data_file("unemployment_synthetic_ordinal.csv"));
    const auto last = json::load((dir / "forecast_joint.json").string()).at("last_state");
    EXPECT_EQ(last[0].get<int>(), ord.z1.back());
    EXPECT_EQ(last[1].get<int>(), ord.z2.back());
}

TEST(Cli, SimulateRawStaysInsideIntervals) {
    const auto dir = fresh_dir("simulate");
    const auto r = run({"simulate", "--params", data_file("model5_params.json"), "--length", "300", "--emit-raw",
                        "--rule1", "1.9,5.9,7.7,12.75,19.9", "--rule2", "1.9,5.9,7.7,12.75", "-o", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto raw = io::ingest((dir / "simulated_raw.csv").string(), "y1", "y2");
    const auto ord = io::read_ordinal_csv((dir / "simulated.csv").string());
    ASSERT_EQ(raw.length(), 300u);
    EXPECT_EQ(io::discretize(raw.y1, io::parse_rule("1.9,5.9,7.7,12.75,19.9")), ord.z1);
    EXPECT_EQ(io::discretize(raw.y2, io::parse_rule("1.9,5.9,7.7,12.75")), ord.z2);
    EXPECT_EQ(run({"simulate", "--params", data_file("model5_params.json"), "--emit-raw", "--rule", "1,2,3", "-o",
                   dir.string()})
                  .code,
              1);
}

TEST(Cli, ReplicateStudyIndependentOfWorkers) {
    const auto a = fresh_dir("rep_a");
    const auto b = fresh_dir("rep_b");
    const std::vector<std::string> base{"replicate-study", "--lengths", "100,150", "--replicates", "4"};
    ASSERT_EQ(run(with(base, {"-o", a.string(), "--workers", "1"})).code, 0);
    ASSERT_EQ(run(with(base, {"-o", b.string(), "--workers", "3"})).code, 0);
    for (const char* f : {"replicate_estimates.csv", "replicate_summary.csv"})
        EXPECT_EQ(io::read_text((a / f).string()), io::read_text((b / f).string())) << f;
    const auto rows = io::read_csv((a / "replicate_estimates.csv").string());
    EXPECT_EQ(rows.header, (std::vector<std::string>{"T", "replicate", "parameter", "estimate", "truth"}));
    // 2 lengths x 4 replicates x 8 parameters
    EXPECT_EQ(rows.rows.size(), 64u);
}

TEST(Selection, CommonMechanismDataPrefersM2OrM5) {
    const auto truth = Bdar1Params::common_mechanism(0.830, CopulaSpec::frank(26.730),
                                                     CategoricalMarginal({0.133, 0.159, 0.266, 0.442}),
                                                     CategoricalMarginal({0.386, 0.431, 0.183}));
    int good = 0, m4 = 0, usable = 0;
    // Replicates that miss a state cannot be fitted with these margins and are redrawn.
    for (std::uint64_t r = 0; usable < 50 && r < 200; ++r) {
        Rng rng = substream(77, "selection", r);
        const auto data = simulate(truth, 104, rng, 100);
        const auto d = workflow::diagnose(data);
        if (std::count(d.freq1.begin(), d.freq1.end(), 0u) + std::count(d.freq2.begin(), d.freq2.end(), 0u) > 0) continue;
        FitOptions o;
        o.seed = substream_seed(77, "selection-fit", r);
        o.compute_std_errors = false;
        const auto res = workflow::compare_models(data, {kAllVariants.begin(), kAllVariants.end()},
                                                  CopulaFamily::Frank, CopulaFamily::Frank, o);
        if (!res.best_bic) continue;
        ++usable;
        good += *res.best_bic == Variant::M2_CommonMechanism || *res.best_bic == Variant::M5_Full;
        m4 += *res.best_bic == Variant::M4_DepMechOnly;
    }
    EXPECT_EQ(usable, 50);
    EXPECT_GE(good, 45);
    EXPECT_EQ(m4, 0);
}
