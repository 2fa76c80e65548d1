#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "qlag/cli.hpp"
#include "qlag/qlag.hpp"

using namespace qlag;

namespace {

const char* kMinimal = R"({
  "spin_n": 2, "omega": 1e6, "gyro": 1.0,
  "schedule": [{"t_start": 0.0, "t_end": 1.0, "b_start": [0, 0, 1], "b_end": [0, 0, 1]}],
  "preparation": {"time": 0.0, "axis": [1, 0, 0]},
  "measurement": {"time": 1.0, "axis": [0, 0, 1], "delta_t": 1e-3},
  "anomaly": {"gamma_s": 0.1}
})";

std::vector<std::string> violations_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    return s.replace(at, from.size(), to);
}

} // namespace

TEST(Config, MinimalDefaults) {
    const auto cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.spin_n, 2);
    EXPECT_EQ(cfg.anomaly.t0, 1.0);
    EXPECT_EQ(cfg.preparation.outcome, 0);
    EXPECT_FALSE(cfg.erased);
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.steps, 2000);
    EXPECT_EQ(cfg.l_max, 10000);
    EXPECT_NEAR(preparation_alpha(cfg), kPi / 4, 1e-12);
}

TEST(Config, ShippedConfigsParse) {
    for (const char* name : {"precession.json", "dual.json", "eraser.json"}) {
        const auto cfg = parse_config(read_file(std::string(QLAG_CONFIG_DIR) + "/" + name));
        EXPECT_NO_THROW(validate_config(cfg)) << name;
    }
}

TEST(Config, NonRelativisticGateMessage) {
    const auto v = violations_of(replace(kMinimal, "\"b_start\": [0, 0, 1]", "\"b_start\": [0, 0, 3000]"));
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(mentions(v, "non-relativistic gate"));
    EXPECT_TRUE(mentions(v, "exceeds the bound 1e-3*omega"));
}

TEST(Config, TimeOrderingMessage) {
    std::string text = replace(kMinimal, "\"time\": 1.0, \"axis\": [0, 0, 1]", "\"time\": 0.0, \"axis\": [0, 0, 1]");
    const auto v = violations_of(text);
    EXPECT_TRUE(mentions(v, "time ordering: preparation.time must precede measurement.time"));
}

TEST(Config, ReportsEveryViolation) {
    std::string text = kMinimal;
    text = replace(text, "\"spin_n\": 2", "\"spin_n\": 1");
    text = replace(text, "\"delta_t\": 1e-3", "\"delta_t\": -1");
    text = replace(text, "\"gamma_s\": 0.1", "\"gamma_s\": -0.1");
    text = replace(text, "\"axis\": [1, 0, 0]", "\"axis\": [0, 0, 0]");
    const auto v = violations_of(text);
    EXPECT_TRUE(mentions(v, "spin_n"));
    EXPECT_TRUE(mentions(v, "measurement.delta_t"));
    EXPECT_TRUE(mentions(v, "anomaly.gamma_s"));
    EXPECT_TRUE(mentions(v, "preparation.axis"));
    EXPECT_GE(v.size(), 4u);
}

TEST(Config, StructuralErrors) {
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"gyro\": 1.0,", "\"gyro\": 1.0, \"colour\": 3,")),
                         "colour: unknown field"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"omega\": 1e6,", "")), "omega: missing required field"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"spin_n\": 2", "\"spin_n\": \"two\"")), "spin_n: expected an integer"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"b_end\": [0, 0, 1]", "\"b_end\": [0, 1]")),
                         "schedule[0].b_end: expected an array of 3 numbers"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"t_end\": 1.0", "\"t_end\": 0.5")),
                         "schedule: does not cover"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"gamma_s\": 0.1", "\"gamma_s\": 0.1, \"t0\": 3.0")),
                         "anomaly.t0"));
    EXPECT_TRUE(mentions(violations_of("[1, 2]"), "top level"));
    EXPECT_TRUE(mentions(violations_of(replace(kMinimal, "\"omega\": 1e6", "\"omega\": 1e6, \"seed\": -4")),
                         "seed: expected a non-negative integer"));
}

TEST(Config, SyntaxErrorLineAndColumn) {
    const auto v = violations_of("{\n  \"spin_n\": 2,\n  \"omega\": ,\n}");
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].rfind("syntax error at line 3, column 12", 0), 0u) << v[0];
}

TEST(Config, ToJsonRoundTrip) {
    auto cfg = parse_config(read_file(std::string(QLAG_CONFIG_DIR) + "/dual.json"));
    cfg.erased = true;
    cfg.l_max = 77;
    const auto again = parse_config(to_json(cfg).dump());
    EXPECT_EQ(to_json(again), to_json(cfg));
    EXPECT_EQ(again.schedule.segments().size(), 3u);
    EXPECT_EQ(again.seed, 11u);
}

TEST(Config, ContextHelpers) {
    const auto cfg = parse_config(kMinimal);
    const auto ctx = make_context(cfg);
    EXPECT_EQ(ctx.dim(), 2u);
    EXPECT_EQ(ctx.omega, 1e6);
    const auto p = anomaly_params(cfg);
    EXPECT_EQ(p.gamma_s, 0.1);
    EXPECT_EQ(p.delta_t, 1e-3);
    const auto q = prepared_state(cfg);
    EXPECT_NEAR(std::abs(q[0]), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(std::abs(q[1]), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(alpha_against(Vector::Unit(2, 1), measurement_basis(cfg)), kPi / 2, 1e-15);
}

TEST(Io, CsvAndJsonRoundTrip) {
    Document doc;
    doc.command = "born";
    doc.seed = 18446744073709551615ULL;
    doc.flags = {"born", "--alpha", "0.5", "--note", "a \"quoted\" value"};
    doc.meta = {{"gamma_s", "0.1"}, {"zeta", "last"}, {"alpha", "first?"}};
    doc.table.columns = {"label", "x", "y"};
    doc.table.add({std::string("up"), 0.1, 1.0 / 3.0});
    doc.table.add({std::string("down"), std::numeric_limits<double>::quiet_NaN(), -std::numeric_limits<double>::infinity()});
    doc.table.add({std::string("S"), 5e-324, 1.7976931348623157e308});
    const auto csv = read_csv(write_csv(doc));
    const auto json = read_json(write_json(doc));
    EXPECT_TRUE(csv == doc);
    EXPECT_TRUE(json == doc);
    EXPECT_TRUE(csv == json);
    EXPECT_EQ(csv.meta_value("zeta"), "last");
    EXPECT_THROW(csv.meta_value("missing"), IoError);
    EXPECT_EQ(csv.table.number(0, "y"), 1.0 / 3.0);
    EXPECT_EQ(csv.table.text(1, "label"), "down");
    EXPECT_THROW(csv.table.text(0, "x"), IoError);
    EXPECT_THROW(csv.table.column("nope"), IoError);
}

TEST(Io, WriterRejectsAmbiguousCells) {
    Document doc;
    doc.table.columns = {"a"};
    doc.table.add({std::string("1,2")});
    EXPECT_THROW(write_csv(doc), IoError);
    doc.table.rows = {{std::string("42")}};
    EXPECT_THROW(write_csv(doc), IoError);
    EXPECT_THROW(doc.table.add({1.0, 2.0}), IoError);
}

TEST(Io, ReaderErrors) {
    EXPECT_THROW(read_csv("# qlag 0.1.0\n"), IoError);
    EXPECT_THROW(read_csv("a,b\n1\n"), IoError);
    EXPECT_THROW(read_json("{\"qlag\": 1}"), IoError);
    EXPECT_THROW(read_json("not json"), IoError);
    EXPECT_THROW(read_file("/nonexistent/dir/file.json"), IoError);
    EXPECT_THROW(write_file("/nonexistent/dir/out.csv", "x"), IoError);
}

TEST(Io, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "qlag_io_roundtrip.csv";
    write_file(path.string(), "hello\n");
    EXPECT_EQ(read_file(path.string()), "hello\n");
    std::filesystem::remove(path);
}

TEST(Seed, Precedence) {
    unsetenv("QLAG_SEED");
    EXPECT_EQ(cli::resolve_seed(std::nullopt, 7), 7u);
    setenv("QLAG_SEED", "123", 1);
    EXPECT_EQ(cli::resolve_seed(std::nullopt, 7), 123u);
    EXPECT_EQ(cli::resolve_seed(5, 7), 5u);
    setenv("QLAG_SEED", "12x", 1);
    EXPECT_THROW(cli::resolve_seed(std::nullopt, 7), ValidationError);
    setenv("QLAG_SEED", "-3", 1);
    EXPECT_THROW(cli::resolve_seed(std::nullopt, 7), ValidationError);
    EXPECT_EQ(cli::resolve_seed(9, 7), 9u);
    unsetenv("QLAG_SEED");
}
