#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include <bergkern/cli.hpp>

using namespace bergkern;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("bergkern_test_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
    const char* exe = std::getenv("BERGKERN_CLI");
    if (!exe) return -1;
    const std::string cmd = std::string("\"") + exe + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST(Config, Defaults) {
    auto c = cli::parse_config(json::object());
    EXPECT_EQ(c.p_list, (std::vector<int>{4, 8, 12, 16}));
    EXPECT_FALSE(c.explicit_grid);
    EXPECT_EQ(c.grid_for(4), TorusConfig::auto_N(4));
    EXPECT_DOUBLE_EQ(c.model_R, 5.0);
}

TEST(Config, ExplicitGrid) {
    auto c = cli::parse_config(json::parse(R"({"p_list": [2], "grid": {"policy": "explicit", "N": {"2": 40}}})"));
    EXPECT_EQ(c.grid_for(2), 40);
    EXPECT_THROW(c.grid_for(3), config_error);
}

TEST(Config, Rejections) {
    const std::vector<std::string> bad{
        R"([1, 2])",
        R"({"colour": 1})",
        R"({"command": "everything"})",
        R"({"p_list": []})",
        R"({"p_list": [0]})",
        R"({"p_list": "4"})",
        R"({"grid": {"policy": "explicit"}})",
        R"({"grid": {"policy": "fine"}})",
        R"({"p_list": [4], "grid": {"policy": "explicit", "N": {"4": 10}}})",
        R"({"grid": {"N": {"four": 48}}})",
        R"({"tolerances": {"no.such.check": 1.0}})",
        R"({"model": {"R": 5, "step": 0.1}})",
        R"({"model": 3})",
    };
    for (const auto& s : bad) EXPECT_THROW(cli::parse_config(json::parse(s)), config_error) << s;
}

TEST(Config, TooCoarseGridNamesMinimum) {
    try {
        cli::parse_config(json::parse(R"({"p_list": [4], "grid": {"policy": "explicit", "N": {"4": 10}}})"));
        FAIL();
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("48"), std::string::npos);
    }
}

TEST(Config, LoadReportsParseErrors) {
    auto d = scratch("load");
    write_text(d / "bad.json", "{\"p_list\": [4,");
    EXPECT_THROW(cli::load_config(d / "bad.json"), config_error);
    EXPECT_THROW(cli::load_config(d / "missing.json"), config_error);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(cli::fmt(1e-12), "1e-12");
    EXPECT_EQ(cli::fmt(0.1), "0.1");
    EXPECT_EQ(std::stod(cli::fmt(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Binary, MalformedConfigExitsTwo) {
    auto d = scratch("malformed");
    write_text(d / "c.json", "{ not json");
    EXPECT_EQ(run_cli("spectrum --config \"" + (d / "c.json").string() + "\" --out \"" + (d / "out").string() + "\"",
                      d / "log"),
              2);
    EXPECT_FALSE(read_text(d / "log").empty());
}

TEST(Binary, UnknownCommandRejected) {
    auto d = scratch("unknown");
    write_text(d / "c.json", "{}");
    EXPECT_NE(run_cli("frobnicate --config \"" + (d / "c.json").string() + "\"", d / "log"), 0);
}

TEST(Binary, SpectrumWritesTables) {
    auto d = scratch("spectrum");
    write_text(d / "c.json", R"({"p_list": [4, 8]})");
    const fs::path out = d / "out";
    ASSERT_EQ(run_cli("spectrum --config \"" + (d / "c.json").string() + "\" --out \"" + out.string() + "\"", d / "log"),
              0)
        << read_text(d / "log");
    const std::string csv = read_text(out / "spectra.csv");
    EXPECT_EQ(csv.rfind("p,index,eigenvalue\n", 0), 0u);
    EXPECT_NE(csv.find("\n8,"), std::string::npos);
    auto rep = json::parse(read_text(out / "gap_report.json"));
    EXPECT_TRUE(rep.at("separated").get<bool>());
    EXPECT_EQ(rep.at("rows").size(), 2u);
    auto summary = json::parse(read_text(out / "summary.json"));
    EXPECT_TRUE(summary.at("all_pass").get<bool>());
    EXPECT_EQ(summary.at("header").at("command"), "spectrum");
}

TEST(Binary, ModelKernelResidual) {
    auto d = scratch("model");
    write_text(d / "c.json", R"({"p_list": [2]})");
    const fs::path out = d / "out";
    ASSERT_EQ(
        run_cli("model-kernel --config \"" + (d / "c.json").string() + "\" --out \"" + out.string() + "\"", d / "log"), 0)
        << read_text(d / "log");
    auto summary = json::parse(read_text(out / "summary.json"));
    bool found = false;
    for (const auto& c : summary.at("checks"))
        if (c.at("name") == "model.reproducing_residual") {
            found = true;
            EXPECT_EQ(c.at("status"), "pass");
        }
    EXPECT_TRUE(found);
    EXPECT_TRUE(fs::exists(out / "model_kernel_samples.csv"));
}
