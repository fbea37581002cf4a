#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microvol/cli.hpp"
#include "microvol/frame.hpp"
#include "microvol/lod.hpp"
#include "microvol/runtime.hpp"
#include "support.hpp"

using namespace microvol;
using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "microvol");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate, encode, render, replay, compare") {
    test::TempDir dir("cli");
    const auto p = [&](const std::string& n) { return (dir / n).string(); };
    REQUIRE(cli({"gen-ml", "--dims", "33", "--min", "0", "--max", "1", "-o", p("ml.raw")}).code == kExitOk);
    CHECK(std::filesystem::file_size(p("ml.raw")) == 33u * 33 * 33 * 4);
    CHECK(std::filesystem::exists(p("ml.raw.json")));

    const auto enc = cli({"encode", "-i", p("ml.raw"), "-o", p("mfa"), "--levels", "2", "--micro", "17", "--coarsest", "1",
                          "--error-bound", "1e-2", "--report", p("enc.json")});
    REQUIRE(enc.code == kExitOk);
    CHECK(enc.out.find("compression ratio") != std::string::npos);
    std::ifstream rep(p("enc.json"));
    const json report = json::parse(rep);
    CHECK(report.at("total_blocks") == 9);
    CHECK(report.at("searched_blocks").get<int>() >= 1);
    CHECK(load_manifest(dir / "mfa" / "manifest.json").entries.size() == 9);

    REQUIRE(cli({"encode", "-i", p("ml.raw"), "-o", p("ds"), "--backend", "ds", "--levels", "2", "--micro", "17", "--coarsest", "1"}).code == kExitOk);

    const auto r = cli({"render", "--store", p("mfa"), "-o", p("a.png"), "--width", "24", "--height", "16", "--sample-distance", "0.05"});
    REQUIRE(r.code == kExitOk);
    const Frame f = read_png(p("a.png"));
    CHECK(f.width == 24);
    CHECK(f.height == 16);
    const auto serial = cli({"render", "--store", p("mfa"), "-o", p("b.png"), "--width", "24", "--height", "16",
                             "--sample-distance", "0.05", "--serial"});
    REQUIRE(serial.code == kExitOk);
    CHECK(read_png(p("b.png")) == f);

    REQUIRE(cli({"gen-trajectory", "--count", "6", "--radius", "1.5", "-o", p("t.jsonl")}).code == kExitOk);
    CHECK(read_trajectory(p("t.jsonl")).size() == 6);
    const auto rep_run = cli({"replay", "--store", p("mfa"), "-t", p("t.jsonl"), "--size", "16", "--sample-distance", "0.05",
                              "--prefetch", "linear", "--json", p("r.json"), "--csv", p("r.csv"), "--frames-dir", p("frames")});
    REQUIRE(rep_run.code == kExitOk);
    std::ifstream rj(p("r.json"));
    CHECK(json::parse(rj).at("frames").size() == 6);
    CHECK(std::filesystem::exists(dir / "frames" / "frame_00005.png"));

    const auto cmp = cli({"compare", "--mfa", p("mfa"), "--ds", p("ds"), "--size", "16", "--sample-distances", "0.05,0.1",
                          "--json", p("q.json")});
    REQUIRE(cmp.code == kExitOk);
    std::ifstream qj(p("q.json"));
    CHECK(json::parse(qj).at("datasets").at(0).at("quality").size() == 4);
}

TEST_CASE("constant volume renders the same from any hierarchy") {
    test::TempDir dir("cli_const");
    const auto p = [&](const std::string& n) { return (dir / n).string(); };
    const auto v = sample_grid(test::constant_field(0.5), {17, 17, 17}, unit_cube());
    write_raw(p("c.raw"), v);
    write_sidecar(p("c.raw.json"), v);
    REQUIRE(cli({"encode", "-i", p("c.raw"), "-o", p("multi"), "--levels", "3", "--micro", "5", "--coarsest", "1"}).code == kExitOk);
    REQUIRE(cli({"encode", "-i", p("c.raw"), "-o", p("single"), "--levels", "1", "--micro", "17", "--coarsest", "1"}).code == kExitOk);
    std::ofstream(p("tf.json")) << R"({"domain":[0,1],"color":[[0,0.9,0.5,0.1],[1,0.9,0.5,0.1]],"opacity":[[0,0.05],[1,0.05]]})";
    for (const char* store : {"multi", "single"}) {
        REQUIRE(cli({"render", "--store", p(store), "-o", p(std::string(store) + ".png"), "--size", "24", "--pos", "0.3,0.2,1.2",
                     "--sample-distance", "0.02", "--no-shading", "--tf", p("tf.json")})
                    .code == kExitOk);
    }
    const Frame a = read_png(p("multi.png")), b = read_png(p("single.png"));
    CHECK(a == b);
    int lit = 0;
    for (std::size_t i = 3; i < a.rgba.size(); i += 4) lit += a.rgba[i] > 0;
    CHECK(lit > 100);
}

TEST_CASE("exit codes") {
    test::TempDir dir("cli_codes");
    const auto p = [&](const std::string& n) { return (dir / n).string(); };
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"render", "-o", p("x.png")}).code == kExitUsage);
    CHECK(cli({"encode", "-i", "x", "-o", "y", "--backend", "zip"}).code == kExitUsage);
    CHECK(cli({"gen-ml", "--dims", "1x2", "-o", p("x.raw")}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
    const auto missing = cli({"render", "--store", p("nowhere"), "-o", p("x.png")});
    CHECK(missing.code == kExitData);
    CHECK(missing.err.find("nowhere") != std::string::npos);

    REQUIRE(cli({"gen-ml", "--dims", "20", "-o", p("odd.raw")}).code == kExitOk);
    const auto bad = cli({"encode", "-i", p("odd.raw"), "-o", p("s"), "--levels", "2", "--micro", "9", "--coarsest", "1"});
    CHECK(bad.code == kExitData);
    const auto padded = cli({"encode", "-i", p("odd.raw"), "-o", p("s"), "--levels", "2", "--micro", "9", "--coarsest", "1",
                             "--pad", "--backend", "fam", "--ncp", "3"});
    CHECK(padded.code == kExitOk);
    CHECK(padded.out.find("padding") != std::string::npos);

    // The close view needs many fine blocks; a capacity of 1 cannot hold them.
    REQUIRE(cli({"gen-ml", "--dims", "33", "-o", p("ml.raw")}).code == kExitOk);
    REQUIRE(cli({"encode", "-i", p("ml.raw"), "-o", p("fam"), "--backend", "fam", "--ncp", "3", "--levels", "3", "--micro", "5",
                 "--coarsest", "2"}).code == kExitOk);
    write_trajectory(dir / "t.jsonl", std::vector{PointOfView::look_at({0.2, 0.3, 1.1}, {0, 0, 0})});
    const auto cap = cli({"replay", "--store", p("fam"), "-t", p("t.jsonl"), "--cache-capacity", "1", "--size", "8", "--json", p("partial.json")});
    CHECK(cap.code == kExitCapacity);
    std::ifstream partial(p("partial.json"));
    CHECK(json::parse(partial).at("frames").empty());
}

TEST_CASE("config file and environment") {
    test::TempDir dir("cli_cfg");
    const auto p = [&](const std::string& n) { return (dir / n).string(); };
    std::ofstream(p("cfg.json")) << json{{"gen-ml", {{"dims", "9"}, {"max", 2}}}, {"render", {{"size", 8}}}}.dump();
    REQUIRE(cli({"gen-ml", "--config", p("cfg.json"), "-o", p("v.raw")}).code == kExitOk);
    CHECK(std::filesystem::file_size(p("v.raw")) == 9u * 9 * 9 * 4);
    // Command-line flags override the config.
    REQUIRE(cli({"gen-ml", "--config", p("cfg.json"), "--dims", "5", "-o", p("w.raw")}).code == kExitOk);
    CHECK(std::filesystem::file_size(p("w.raw")) == 5u * 5 * 5 * 4);
    std::ofstream(p("flat.json")) << json{{"dims", "3"}, {"fm", 2}}.dump();
    REQUIRE(cli({"gen-ml", "--config", p("flat.json"), "-o", p("f.raw")}).code == kExitOk);
    CHECK(std::filesystem::file_size(p("f.raw")) == 27u * 4);
    CHECK(cli({"gen-ml", "--config", p("missing.json"), "-o", p("f.raw")}).code == kExitData);

    REQUIRE(cli({"encode", "-i", p("v.raw"), "-o", p("store"), "--levels", "1", "--micro", "9", "--coarsest", "1"}).code == kExitOk);
    ::setenv("MICROVOL_STORE", p("store").c_str(), 1);
    const auto r = cli({"render", "--config", p("cfg.json"), "-o", p("e.png"), "--sample-distance", "0.1"});
    ::unsetenv("MICROVOL_STORE");
    REQUIRE(r.code == kExitOk);
    CHECK(read_png(p("e.png")).width == 8);
}

}
