#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "qlag/cli.hpp"

using namespace qlag;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string config(const std::string& name) { return std::string(QLAG_CONFIG_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    write_file(path, content);
    return path;
}

} // namespace

TEST(Cli, BornAtQuarterPiIsOneHalf) {
    const auto r = run({"born", "--alpha", "0.78539816339744831", "--gamma", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = read_csv(r.out);
    EXPECT_EQ(doc.command, "born");
    EXPECT_NEAR(doc.table.number(0, "born_probability"), 0.5, 1e-15);
    EXPECT_NEAR(doc.table.number(0, "cos2_alpha"), 0.5, 1e-15);
}

TEST(Cli, NEstimateOrderOfMagnitude) {
    const auto r = run({"n-estimate"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double n = read_csv(r.out).table.number(0, "n_periods");
    EXPECT_GT(n, 1e11);
    EXPECT_LT(n, 1e12);
}

TEST(Cli, DeviationScanMeta) {
    const auto r = run({"deviation-scan", "--gamma", "0.1", "--grid", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = read_csv(r.out);
    EXPECT_EQ(doc.table.rows.size(), 9u);
    EXPECT_NEAR(std::stod(doc.meta_value("max_abs_difference")), 0.0098360011776373326, 1e-15);
}

TEST(Cli, RerunsAreByteIdenticalAndWorkerIndependent) {
    const std::vector<std::string> base{"mc", "--config", config("precession.json"), "--samples", "50000"};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    const auto a = run(with({"--workers", "1"}));
    const auto b = run(with({"--workers", "1"}));
    const auto c = run(with({"--workers", "3"}));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_TRUE(read_csv(a.out).table == read_csv(c.out).table);
    EXPECT_EQ(read_csv(a.out).seed, 7u);
    const auto k1 = run(with({"--method", "cauchy-kick", "--workers", "1"}));
    const auto k2 = run(with({"--method", "cauchy-kick", "--workers", "2"}));
    ASSERT_EQ(k1.code, 0) << k1.err;
    EXPECT_TRUE(read_csv(k1.out).table == read_csv(k2.out).table);
}

TEST(Cli, SampleDefaultsArePerSubcommand) {
    const auto mc = run({"mc", "--config", config("precession.json")});
    ASSERT_EQ(mc.code, 0) << mc.err;
    const auto t = read_csv(mc.out).table;
    EXPECT_EQ(t.number(0, "count") + t.number(1, "count"), 1e6);
    const auto ch = run({"chsh", "--angles", "0,1,2,3"});
    ASSERT_EQ(ch.code, 0) << ch.err;
    EXPECT_EQ(read_csv(ch.out).meta_value("samples_per_pair"), "0");
}

TEST(Cli, EverySubcommandAgreesAcrossFormats) {
    const std::vector<std::vector<std::string>> calls{
        {"born", "--alpha", "0.3", "--gamma", "0.1"},
        {"deviation-scan", "--gamma", "0.05", "--grid", "16"},
        {"mc", "--config", config("precession.json"), "--samples", "10000"},
        {"mc", "--config", config("eraser.json")},
        {"mc", "--config", config("precession.json"), "--samples", "20000", "--method", "cauchy-kick", "--window", "0.05"},
        {"chsh", "--angles", "0,1.5707963267948966,0.78539816339744831,-0.78539816339744831", "--samples", "1000"},
        {"chsh", "--angles", "0,1,2,3"},
        {"joint", "--alpha0", "0.39269908169872414", "--gamma", "0.05"},
        {"nlc-check", "--config", config("precession.json")},
        {"history", "--config", config("precession.json"), "--kind", "trajectory"},
        {"history", "--config", config("precession.json"), "--kind", "micro", "--branch", "minus"},
        {"history", "--config", config("precession.json"), "--kind", "anomaly", "--target", "down"},
        {"special-states", "--config", config("precession.json")},
        {"hidden-history", "--config", config("dual.json"), "--outcome", "-+"},
        {"n-estimate", "--mass-kev", "938272", "--window-ns", "0.1"},
    };
    for (const auto& args : calls) {
        const auto csv = run(args);
        auto json_args = args;
        json_args.insert(json_args.end(), {"--format", "json"});
        const auto json = run(json_args);
        ASSERT_EQ(csv.code, 0) << args[0] << ": " << csv.err;
        ASSERT_EQ(json.code, 0) << args[0] << ": " << json.err;
        const auto a = read_csv(csv.out), b = read_json(json.out);
        EXPECT_EQ(a.command, args[0]);
        EXPECT_EQ(a.flags, args);
        EXPECT_EQ(b.flags, json_args);
        EXPECT_TRUE(a.table == b.table) << args[0];
        EXPECT_EQ(a.meta, b.meta) << args[0];
        EXPECT_EQ(a.seed, b.seed);
        EXPECT_FALSE(a.table.rows.empty()) << args[0];
    }
}

TEST(Cli, HistoryOutputsCarryTheirChecks) {
    const auto anomaly = read_csv(run({"history", "--config", config("precession.json"), "--kind", "anomaly"}).out);
    EXPECT_LE(std::stod(anomaly.meta_value("nlc_residual")), 1e-6);
    const auto cfg = parse_config(read_file(config("precession.json")));
    EXPECT_NEAR(std::stod(anomaly.meta_value("alpha_start")), preparation_alpha(cfg), 1e-9);
    const auto micro = read_csv(run({"history", "--config", config("precession.json"), "--kind", "micro"}).out);
    const double a0 = micro.table.number(0, "alpha");
    for (std::size_t k = 0; k < micro.table.rows.size(); ++k) ASSERT_NEAR(micro.table.number(k, "alpha"), a0, 1e-8);
    const auto nlc = read_csv(run({"nlc-check", "--config", config("precession.json")}).out);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LE(nlc.table.number(k, "nlc_residual"), 1e-6);
        EXPECT_LE(nlc.table.number(k, "factorization_residual"), 1e-6);
    }
}

TEST(Cli, HiddenHistorySelection) {
    for (const char* outcome : {"++", "+-", "-+", "--"}) {
        const auto r = run({"hidden-history", "--config", config("dual.json"), "--outcome", outcome});
        ASSERT_EQ(r.code, 0) << r.err;
        const auto doc = read_csv(r.out);
        EXPECT_EQ(doc.meta_value("m3_passed"), "true") << outcome;
        EXPECT_EQ(doc.meta_value("selection"), "max-weight");
        EXPECT_EQ(doc.meta_value("theta_i"), "constrained-unknown");
    }
    const auto s = read_csv(run({"hidden-history", "--config", config("dual.json"), "--seed", "4"}).out);
    EXPECT_EQ(s.meta_value("selection"), "sampled");
    EXPECT_EQ(s.seed, 4u);
    const auto m = read_csv(
        run({"hidden-history", "--config", config("dual.json"), "--seed", "4", "--select", "max-weight"}).out);
    EXPECT_EQ(m.meta_value("selection"), "max-weight");
}

TEST(Cli, SeedPrecedence) {
    const std::vector<std::string> args{"mc", "--config", config("precession.json"), "--samples", "1000"};
    unsetenv("QLAG_SEED");
    EXPECT_EQ(read_csv(run(args).out).seed, 7u);
    setenv("QLAG_SEED", "99", 1);
    EXPECT_EQ(read_csv(run(args).out).seed, 99u);
    auto flagged = args;
    flagged.insert(flagged.end(), {"--seed", "5"});
    EXPECT_EQ(read_csv(run(flagged).out).seed, 5u);
    setenv("QLAG_SEED", "banana", 1);
    EXPECT_EQ(run(args).code, 2);
    unsetenv("QLAG_SEED");
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"born", "--help"}).code, 0);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"born", "--alpha", "0.1"}).code, 2);
    EXPECT_EQ(run({"born", "--alpha", "0.1", "--gamma", "0", "--bogus"}).code, 2);
    EXPECT_EQ(run({"born", "--alpha", "0.1", "--gamma", "-1"}).code, 2);
    EXPECT_EQ(run({"chsh", "--angles", "1,2,3"}).code, 2);
    EXPECT_EQ(run({"mc", "--config", "/nonexistent/qlag.json"}).code, 4);

    const auto bad = temp_file("qlag_bad.json", "{\"spin_n\": 1}");
    const auto r = run({"mc", "--config", bad});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error[validation]"), std::string::npos);
    EXPECT_NE(r.err.find("omega: missing required field"), std::string::npos);

    // B(t_f) = 0: the special-state basis is not unique.
    auto cfg = parse_config(read_file(config("precession.json")));
    cfg.schedule = FieldSchedule({{0.0, 1.0, Vec3(1, 0, 0), Vec3(0, 0, 0)}});
    const auto degenerate = temp_file("qlag_degenerate.json", to_json(cfg).dump());
    const auto g = run({"special-states", "--config", degenerate});
    EXPECT_EQ(g.code, 3);
    EXPECT_NE(g.err.find("error[numerical]"), std::string::npos);

    EXPECT_EQ(run({"born", "--alpha", "0.1", "--gamma", "0", "--out", "/nonexistent/dir/x.csv"}).code, 4);
    // hidden-history needs preparation at -t_f.
    EXPECT_EQ(run({"hidden-history", "--config", config("precession.json")}).code, 2);
}

TEST(Cli, OutFlagWritesFile) {
    const auto path = (std::filesystem::temp_directory_path() / "qlag_out_test.json").string();
    std::filesystem::remove(path);
    const auto r = run({"joint", "--alpha0", "0.2", "--format", "json", "--export", path});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto doc = read_json(read_file(path));
    EXPECT_EQ(doc.command, "joint");
    EXPECT_EQ(doc.table.rows.size(), 4u);
    std::filesystem::remove(path);
}
