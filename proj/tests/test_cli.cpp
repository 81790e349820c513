#include "basslv/cli.hpp"
#include "basslv/error.hpp"
#include "basslv/io.hpp"
#include "basslv/marketdata.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

using namespace basslv;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(BASSLV_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("basslv_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// End-to-end commands

TEST(CliCalibrate, BlackScholesPreset) {
    const auto dir = scratch("bs");
    const auto r = run_cli("calibrate --preset bs --tol 1e-3 --scheme trap --out-dir " + dir.string());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    for (const char* f : {"model.json", "report.json", "convergence.csv", "density_0.csv",
                          "density_1.csv", "density_2.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    bool seen = false;
    for (const auto& m : report.at("maturities")) {
        if (std::abs(m.at("maturity").get<double>() - 1.2) < 1e-12) {
            seen = true;
            EXPECT_LE(m.at("err_cab").get<double>(), 3e-2);
            EXPECT_GE(m.at("err_cab").get<double>(), 0.0);
        }
    }
    EXPECT_TRUE(seen);
}

TEST(CliCalibrate, MissingInputNamesPath) {
    const auto dir = scratch("missing");
    const std::string path = "/definitely/not/here/chain.csv";
    const auto r = run_cli("calibrate --input " + path + " --out-dir " + dir.string());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find(path), std::string::npos) << r.output;
}

TEST(CliCalibrate, ZeroToleranceRejectedBeforeWork) {
    const auto dir = scratch("tol0");
    const auto r = run_cli("calibrate --preset bs --tol 0 --out-dir " + dir.string());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("tol"), std::string::npos) << r.output;
    EXPECT_TRUE(!fs::exists(dir) || fs::is_empty(dir));
}

TEST(CliCalibrate, CalendarArbitrageIsNumericalFailure) {
    const auto dir = scratch("calendar");
    fs::create_directories(dir);
    std::ofstream chain(dir / "chain.csv");
    chain << "maturity,strike,side,iv\n";
    for (int k = 60; k <= 140; k += 5) chain << "1," << k << ",call,0.5\n";
    for (int k = 60; k <= 140; k += 5) chain << "1.2," << k << ",call,0.2\n";
    chain.close();
    const auto r = run_cli("calibrate --input " + (dir / "chain.csv").string() + " --out-dir " +
                           (dir / "out").string());
    EXPECT_EQ(r.exit_code, 1) << r.output;
    EXPECT_NE(r.output.find("CalendarArbitrage"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli("").exit_code, 2);
    EXPECT_EQ(run_cli("nonsense").exit_code, 2);
    EXPECT_EQ(run_cli("calibrate --scheme simpson --preset bs").exit_code, 2);
    EXPECT_EQ(run_cli("calibrate --config /no/such/config.json").exit_code, 2);
}

TEST(CliSynthRnd, SsviChainRoundTrip) {
    const auto dir = scratch("synth");
    ASSERT_EQ(run_cli("synth --preset ssvi --out-dir " + dir.string()).exit_code, 0);
    ASSERT_TRUE(fs::exists(dir / "chain.csv"));
    ASSERT_TRUE(fs::exists(dir / "truth.csv"));
    const auto chain = marketdata::parse_chain(io::read_file((dir / "chain.csv").string()), 100.0, 0.0);
    EXPECT_FALSE(chain.maturities.empty());
    const auto r = run_cli("rnd --input " + (dir / "chain.csv").string() + " --out-dir " +
                           (dir / "rnd").string());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto rep = nlohmann::json::parse(slurp(dir / "rnd" / "rnd_report.json"));
    EXPECT_TRUE(rep.contains("config_hash"));
}

TEST(CliPrice, CsvColumns) {
    const auto dir = scratch("price");
    ASSERT_EQ(run_cli("calibrate --preset bs --tol 1e-3 --paths 20000 --out-dir " + dir.string()).exit_code, 0);
    const auto r = run_cli("price --model " + (dir / "model.json").string() +
                           " --paths 20000 --strikes 80 100 120 --out-dir " + (dir / "p").string());
    ASSERT_EQ(r.exit_code, 0) << r.output;
    std::istringstream csv(slurp(dir / "p" / "prices.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line.rfind("# config_hash=", 0), 0u);
    std::getline(csv, line);
    EXPECT_EQ(line, "maturity,strike,price,se,iv");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 9);
    ASSERT_EQ(run_cli("report --model " + (dir / "model.json").string() + " --paths 20000 --out-dir " +
                      (dir / "q").string())
                  .exit_code,
              0);
    EXPECT_TRUE(fs::exists(dir / "q" / "report.json"));
}

TEST(CliBenchmark, WritesTable) {
    const auto dir = scratch("bench");
    ASSERT_EQ(run_cli("benchmark --out-dir " + dir.string()).exit_code, 0);
    const auto text = slurp(dir / "benchmark.csv");
    EXPECT_NE(text.find("scheme,n,abs_error,slope"), std::string::npos);
    EXPECT_NE(text.find("trap,"), std::string::npos);
    EXPECT_NE(text.find("gh,"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Reproducibility

TEST(CliInvariant, ByteIdenticalOutputs) {
    for (const std::string cmd : {"calibrate --preset bs --tol 1e-3 --paths 50000",
                                  "calibrate --preset ssvi --tol 1e-3 --paths 50000 --noise 0.002 --window-count 32",
                                  "synth --preset ssvi --noise 0.005"}) {
        const auto a = scratch("same_a"), b = scratch("same_b");
        ASSERT_EQ(run_cli(cmd + " --out-dir " + a.string()).exit_code, 0) << cmd;
        ASSERT_EQ(run_cli(cmd + " --out-dir " + b.string()).exit_code, 0) << cmd;
        const auto fa = files_in(a), fb = files_in(b);
        ASSERT_EQ(fa.size(), fb.size());
        for (std::size_t i = 0; i < fa.size(); ++i) {
            EXPECT_EQ(fa[i].filename(), fb[i].filename());
            EXPECT_EQ(slurp(fa[i]), slurp(fb[i])) << fa[i];
        }
    }
}

TEST(CliInvariant, ConfigHashInEveryOutput) {
    const auto dir = scratch("hash");
    ASSERT_EQ(run_cli("calibrate --preset bs --tol 1e-3 --paths 20000 --out-dir " + dir.string()).exit_code, 0);
    const std::regex header("^# config_hash=([0-9a-f]{16})\n");
    std::string hash;
    for (const auto& f : files_in(dir)) {
        const auto text = slurp(f);
        std::string found;
        if (f.extension() == ".csv") {
            std::smatch m;
            ASSERT_TRUE(std::regex_search(text, m, header)) << f;
            found = m[1];
        } else {
            found = nlohmann::json::parse(text).at("config_hash").get<std::string>();
        }
        if (hash.empty()) hash = found;
        EXPECT_EQ(found, hash) << f;
    }
    EXPECT_EQ(hash.size(), 16u);
}

TEST(CliConfig, FlagsOverrideConfigFile) {
    const auto dir = scratch("precedence");
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << R"({"tol": 0.01, "paths": 20000})";
    ASSERT_EQ(run_cli("calibrate --preset bs --config " + (dir / "cfg.json").string() +
                      " --tol 1e-3 --out-dir " + (dir / "a").string())
                  .exit_code,
              0);
    ASSERT_EQ(run_cli("calibrate --preset bs --tol 1e-3 --paths 20000 --out-dir " + (dir / "b").string())
                  .exit_code,
              0);
    EXPECT_EQ(slurp(dir / "a" / "convergence.csv"), slurp(dir / "b" / "convergence.csv"));
}

TEST(CliConfig, ValidateAndRoundTrip) {
    cli::RunConfig c;
    c.preset = "bs";
    EXPECT_NO_THROW(c.validate());
    for (double bad : {0.0, 1.0, -1e-3}) {
        auto d = c;
        d.tol = bad;
        EXPECT_THROW(d.validate(), Error);
    }
    auto w = c;
    w.window_count = 4;
    EXPECT_THROW(w.validate(), Error);
    cli::RunConfig back;
    back.merge(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}

// ---------------------------------------------------------------------------
// io

TEST(Io, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::exp(u(rng)) * (i % 2 ? 1.0 : -1.0);
        EXPECT_EQ(std::stod(io::format_double(x)), x);
    }
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
}

TEST(Io, Fnv1aKnownValues) {
    EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(io::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Io, ConfigHashIgnoresKeyOrder) {
    const auto a = nlohmann::json::parse(R"({"a": 1, "b": {"x": 2, "y": 3}})");
    const auto b = nlohmann::json::parse(R"({"b": {"y": 3, "x": 2}, "a": 1})");
    EXPECT_EQ(io::config_hash(a), io::config_hash(b));
    EXPECT_NE(io::config_hash(a), io::config_hash(nlohmann::json::parse(R"({"a": 2})")));
    EXPECT_EQ(io::config_hash(a).size(), 16u);
}

TEST(Io, CsvTableLayout) {
    io::CsvTable t("0123456789abcdef", {"x", "y"});
    t.row(std::vector<double>{1.0, 0.5});
    t.row(std::vector<std::string>{"gh", "2"});
    EXPECT_EQ(t.str(), "# config_hash=0123456789abcdef\nx,y\n1,0.5\ngh,2\n");
}

TEST(Io, ModelJsonRoundTrip) {
    const auto dir = scratch("model");
    ASSERT_EQ(run_cli("calibrate --preset bs --tol 1e-3 --paths 20000 --out-dir " + dir.string()).exit_code, 0);
    const auto file = io::load_model((dir / "model.json").string());
    EXPECT_EQ(file.model.maturities.size(), 3u);
    EXPECT_EQ(file.model.intervals.size(), 2u);
    io::save_model((dir / "again.json").string(), file);
    EXPECT_EQ(slurp(dir / "model.json"), slurp(dir / "again.json"));
    // the reloaded maps price like the original
    const auto& I = file.model.intervals[0];
    for (double w : {-2.0, 0.0, 2.0}) {
        EXPECT_NEAR(I.F_W(w), 0.5 * std::erfc(-w / std::sqrt(2.0)), 1e-2);
    }
}
