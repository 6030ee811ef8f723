#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "manifest.hpp"
#include "run_config.hpp"

using namespace tmsv;
using namespace tmsv::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "tmsv");
    std::vector<char const*> argv;
    for (auto const& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(fs::path const& p, std::string const& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        root_ = fs::temp_directory_path()
                / ("tmsv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        // A small counting run keeps every command fast.
        spit(root_ / "small.json", R"({
  "master_seed": 5,
  "source": {"modes_per_axis": [3, 3, 3], "nu_per_mode": 2.0, "shots": 300},
  "analysis": {"bootstrap_resamples": 100, "min_mean": 0.05},
  "hom": {"t2_values": [-200, -150, -100, -50, 0, 50, 100, 150, 200], "shots_per_point": 200, "n_max": 8},
  "prediction": {"samples": 2000}
})");
    }
    void TearDown() override { fs::remove_all(root_); }

    fs::path root_;
};

} // namespace

TEST_F(Cli, UsageErrorsExitWithTwo)
{
    EXPECT_EQ(run({}).code, kInputError);
    EXPECT_EQ(run({"no-such-command"}).code, kInputError);
    EXPECT_EQ(run({"analyze-counts", "--out", (root_ / "o").string()}).code, kInputError); // --events missing
    EXPECT_EQ(run({"--version"}).code, kOk);
}

TEST_F(Cli, MissingOutputDirectory)
{
    const auto r = run({"simulate-source", "--config", (root_ / "small.json").string()});
    EXPECT_EQ(r.code, kInputError);
    EXPECT_NE(r.err.find("--out"), std::string::npos);
}

TEST_F(Cli, InvalidConfigsAreRejected)
{
    spit(root_ / "zero.json", R"({"source": {"shots": 0}})");
    auto r = run({"simulate-source", "--config", (root_ / "zero.json").string(), "--out", (root_ / "o").string()});
    EXPECT_EQ(r.code, kInputError);
    EXPECT_NE(r.err.find("shots"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(root_ / "o" / "events.csv"));

    spit(root_ / "unknown.json", R"({"source": {"shotz": 10}, "colour": "red"})");
    r = run({"simulate-source", "--config", (root_ / "unknown.json").string(), "--out", (root_ / "o").string()});
    EXPECT_EQ(r.code, kInputError);
    EXPECT_NE(r.err.find("shotz"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;

    spit(root_ / "broken.json", "{\"master_seed\": ");
    EXPECT_EQ(run({"simulate-source", "--config", (root_ / "broken.json").string(), "--out", (root_ / "o").string()})
                  .code,
              kInputError);
    EXPECT_EQ(run({"simulate-source", "--config", (root_ / "absent.json").string(), "--out", (root_ / "o").string()})
                  .code,
              kInputError);
}

TEST_F(Cli, RerunsAreByteIdentical)
{
    const std::string cfg = (root_ / "small.json").string();
    for (auto const& dir : {"a", "b"}) {
        ASSERT_EQ(run({"simulate-source", "--config", cfg, "--out", (root_ / dir).string()}).code, kOk);
        ASSERT_EQ(run({"analyze-counts", "--config", cfg, "--events", (root_ / dir / "events.csv").string(), "--out",
                       (root_ / dir / "analysis").string()})
                      .code,
                  kOk);
    }
    for (auto const& name : {"events.csv", "events.json", "manifest.json"}) {
        EXPECT_EQ(slurp(root_ / "a" / name), slurp(root_ / "b" / name)) << name;
    }
    for (auto const& name : {"cell_stats.csv", "summed_histogram.csv", "pooled_histogram.csv", "analysis.json"}) {
        EXPECT_EQ(slurp(root_ / "a" / "analysis" / name), slurp(root_ / "b" / "analysis" / name)) << name;
    }
    EXPECT_TRUE(verify_manifest(root_ / "a").empty());
    EXPECT_TRUE(verify_manifest(root_ / "a" / "analysis").empty());

    // A different seed changes the events.
    ASSERT_EQ(run({"simulate-source", "--config", cfg, "--seed", "6", "--out", (root_ / "c").string()}).code, kOk);
    EXPECT_NE(slurp(root_ / "a" / "events.csv"), slurp(root_ / "c" / "events.csv"));
}

TEST_F(Cli, ManifestDetectsTampering)
{
    ASSERT_EQ(run({"simulate-source", "--config", (root_ / "small.json").string(), "--out", (root_ / "a").string()})
                  .code,
              kOk);
    const Json manifest = Json::parse(slurp(root_ / "a" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "simulate-source");
    EXPECT_EQ(manifest["seed"], 5);
    EXPECT_FALSE(manifest.contains("timestamps"));
    EXPECT_EQ(manifest["files"].size(), 2u);

    spit(root_ / "a" / "events.csv", slurp(root_ / "a" / "events.csv") + "0,0,0,0\n");
    const auto bad = verify_manifest(root_ / "a");
    ASSERT_EQ(bad.size(), 1u);
    EXPECT_EQ(bad[0], "events.csv");
}

TEST_F(Cli, TimestampsOnlyOnRequest)
{
    ASSERT_EQ(run({"predict-visibility", "--nu", "0.33", "--nu-std", "0.07", "--timestamps", "--out",
                   (root_ / "p").string()})
                  .code,
              kOk);
    EXPECT_TRUE(Json::parse(slurp(root_ / "p" / "manifest.json")).contains("timestamps"));
}

TEST_F(Cli, ConfigDigestIgnoresFormatting)
{
    const RunConfig a = load_run_config((root_ / "small.json").string());
    // Same content, different key order, whitespace and explicit defaults.
    spit(root_ / "same.json", R"({"prediction":{"samples":2000,"nu":0.33},
        "hom":{"n_max":8,"shots_per_point":200,"t2_values":[-200,-150,-100,-50,0,50,100,150,200]},
        "analysis":{"min_mean":0.05,"bootstrap_resamples":100},
        "source":{"shots":300,"nu_per_mode":2.0,"modes_per_axis":[3,3,3]},"master_seed":5})");
    const RunConfig b = load_run_config((root_ / "same.json").string());
    EXPECT_EQ(config_digest(a), config_digest(b));
    EXPECT_EQ(config_digest(a), config_digest(parse_run_config(Json::parse(to_json(a).dump()))));
    RunConfig c = a;
    c.set_seed(6);
    EXPECT_NE(config_digest(a), config_digest(c));
}

TEST_F(Cli, SeedPropagatesToAllSections)
{
    RunConfig cfg = parse_run_config(Json{{"master_seed", 9}});
    EXPECT_EQ(cfg.source.master_seed, 9u);
    EXPECT_EQ(cfg.hom.master_seed, 9u);
    cfg.set_seed(10);
    EXPECT_EQ(cfg.source.master_seed, 10u);
    EXPECT_EQ(cfg.hom.master_seed, 10u);
}

TEST_F(Cli, EmptySelectionExitsWithThree)
{
    const std::string cfg = (root_ / "small.json").string();
    ASSERT_EQ(run({"simulate-source", "--config", cfg, "--out", (root_ / "a").string()}).code, kOk);
    spit(root_ / "strict.json", R"({"master_seed": 5, "analysis": {"min_mean": 1000}})");
    const auto r = run({"analyze-counts", "--config", (root_ / "strict.json").string(), "--events",
                        (root_ / "a" / "events.csv").string(), "--out", (root_ / "x").string()});
    EXPECT_EQ(r.code, kEmptyResult);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, MalformedEventsNameTheLine)
{
    ASSERT_EQ(run({"simulate-source", "--config", (root_ / "small.json").string(), "--out", (root_ / "a").string()})
                  .code,
              kOk);
    std::string csv = slurp(root_ / "a" / "events.csv");
    // Corrupt the third line.
    std::size_t pos = 0;
    for (int i = 0; i < 2; ++i) {
        pos = csv.find('\n', pos) + 1;
    }
    csv.insert(pos, "0,zz,1,1\n");
    spit(root_ / "a" / "events.csv", csv);
    const auto r = run({"analyze-counts", "--events", (root_ / "a" / "events.csv").string(), "--out",
                        (root_ / "x").string()});
    EXPECT_EQ(r.code, kInputError);
    EXPECT_NE(r.err.find("events.csv:3"), std::string::npos) << r.err;
}

TEST_F(Cli, FitDipPipeline)
{
    const std::string cfg = (root_ / "small.json").string();
    ASSERT_EQ(run({"simulate-hom", "--config", cfg, "--out", (root_ / "h").string()}).code, kOk);
    const auto r = run({"fit-dip", "--config", cfg, "--scan", (root_ / "h" / "scan.csv").string(), "--out",
                        (root_ / "f").string()});
    ASSERT_TRUE(r.code == kOk || r.code == kFitFailure) << r.err;
    if (r.code == kOk) {
        EXPECT_NE(r.out.find("visibility"), std::string::npos);
        const Json fit = Json::parse(slurp(root_ / "f" / "dip_fit.json"));
        EXPECT_EQ(fit["input"]["sha256"], file_sha256(root_ / "h" / "scan.csv"));
        EXPECT_TRUE(verify_manifest(root_ / "f").empty());
    }
}

TEST_F(Cli, FitDipInputErrors)
{
    spit(root_ / "short.csv", "t2_us,corr,err\n0,0.1,0.01\n25,0.2,0.01\n");
    auto r = run({"fit-dip", "--scan", (root_ / "short.csv").string(), "--out", (root_ / "f").string()});
    EXPECT_EQ(r.code, kInputError);

    spit(root_ / "bad.csv", "t2_us,corr,err\n0,0.1,0.01\n25,x,0.01\n");
    r = run({"fit-dip", "--scan", (root_ / "bad.csv").string(), "--out", (root_ / "f").string()});
    EXPECT_EQ(r.code, kInputError);
    EXPECT_NE(r.err.find("bad.csv:3"), std::string::npos) << r.err;

    std::string flat = "t2_us,corr,err\n";
    for (int i = -10; i <= 10; ++i) {
        flat += std::to_string(25 * i) + (i % 2 == 0 ? ",1.0" : ",1.3") + ",0.01\n";
    }
    spit(root_ / "flat.csv", flat);
    r = run({"fit-dip", "--scan", (root_ / "flat.csv").string(), "--out", (root_ / "f").string()});
    EXPECT_EQ(r.code, kFitFailure) << r.err;
}

TEST_F(Cli, PredictVisibility)
{
    auto r = run({"predict-visibility", "--nu", "0.33", "--nu-std", "0.07"});
    EXPECT_EQ(r.code, kOk);
    EXPECT_NE(r.out.find("0.7155"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("0.0260"), std::string::npos) << r.out;

    r = run({"predict-visibility", "--nu", "0", "--nu-std", "0.07"});
    EXPECT_EQ(r.code, kInputError);
    r = run({"predict-visibility", "--nu", "-1"});
    EXPECT_EQ(r.code, kInputError);
}

TEST_F(Cli, SchemaListsEveryConfigKey)
{
    const Json schema = Json::parse(slurp(fs::path(TMSV_SOURCE_DIR) / "schema" / "run_config.schema.json"));
    const Json normalized = to_json(parse_run_config(Json::object()));
    std::function<void(Json const&, Json const&, std::string const&)> check =
        [&](Json const& value, Json const& node, std::string const& path) {
            ASSERT_TRUE(node.contains("properties")) << path;
            EXPECT_EQ(node.value("additionalProperties", true), false) << path;
            for (auto const& [key, v] : value.items()) {
                ASSERT_TRUE(node["properties"].contains(key)) << path << "/" << key;
                if (v.is_object()) {
                    check(v, node["properties"][key], path + "/" + key);
                }
            }
            for (auto const& [key, v] : node["properties"].items()) {
                EXPECT_TRUE(value.contains(key)) << "schema-only key " << path << "/" << key;
            }
        };
    check(normalized, schema, "");
}

TEST_F(Cli, ExecutableRuns)
{
    const std::string out = (root_ / "exe").string();
    const std::string cmd = std::string(TMSV_EXECUTABLE) + " predict-visibility --nu 0.8 --nu-std 0.2 --out " + out
                            + " > " + (root_ / "stdout.txt").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_NE(slurp(root_ / "stdout.txt").find("0.6190"), std::string::npos);
    EXPECT_TRUE(verify_manifest(out).empty());
    const std::string bad = std::string(TMSV_EXECUTABLE) + " predict-visibility --nu -1 2> /dev/null";
    const int status = std::system(bad.c_str());
    EXPECT_EQ(WEXITSTATUS(status), kInputError);
}
