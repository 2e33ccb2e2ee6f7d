#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/io.hpp"
#include "vvlab/lab.hpp"

using namespace vvlab;
using namespace vvlab::lab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmall = R"({
  "viscosity": {"nu0": 0.01, "ratio": 0.5, "count": 2},
  "time": {"final": 0.1, "first": 0.001, "count": 4},
  "grid": {"intervals": 512},
  "diagnostics": {"pairing_battery": 2},
  "verify": {"battery_size": 2, "member_fields": 1}
})";

fs::path fresh(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "vvlab_test_lab" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Relative path -> contents, manifest excluded (it carries wall-clock times).
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            out[fs::relative(e.path(), dir).generic_string()] = io::read_file(e.path());
    return out;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(VVLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("default config matches the documented schedule") {
    const ExperimentConfig cfg = parse_config("{}");
    const auto members = schedule(cfg);
    REQUIRE(members.size() == 7);
    for (std::size_t n = 0; n < members.size(); ++n) {
        CHECK(members[n].nu == doctest::Approx(1e-2 / double(1 << n)).epsilon(1e-15));
        CHECK(members[n].family_index == (2 << n));
    }
    CHECK(cfg.final_time == 0.1);
    CHECK(parse_config(config_text(cfg)).nu_count == 7);
    CHECK(config_text(parse_config(config_text(cfg))) == config_text(cfg));
}

TEST_CASE("config validation rejects bad input") {
    CHECK_THROWS_AS(parse_config(R"({"viscosity": {"count": 0}})"), ConfigError);
    CHECK(message_of([] { parse_config(R"({"viscosity": {"count": 0}})"); }).find("empty") != std::string::npos);
    CHECK(message_of([] { parse_config(R"({"viscosity": {"nu": 0.1}})"); }).find("'nu'") != std::string::npos);
    CHECK_THROWS_AS(parse_config(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"viscosity": {"ratio": 1.0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"viscosity": {"nu0": -1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"mass": "big"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"viscosity": {"count": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"family_indices": [2, 4]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"diagnostics": {"maximal_radii": [0.05, 0.1]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"heat": {"eps": 0.4}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"kind": "chebyshev"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
}

TEST_CASE("config hash ignores the output directory only") {
    ExperimentConfig a = parse_config(kSmall);
    ExperimentConfig b = a;
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw ParameterError("x"); }), ParameterError);
}

TEST_CASE("staged execution equals run and reruns are byte-identical") {
    const ExperimentConfig cfg = parse_config(kSmall);
    const fs::path a = fresh("run"), b = fresh("staged");

    Lab(cfg, a, 4).run();
    {
        Lab staged(cfg, b, 1);
        staged.simulate();
        staged.diagnose();
        CHECK(io::read_file(b / "diagnostics.csv") == io::read_file(a / "diagnostics.csv"));
        CHECK(io::read_file(b / "members.csv") == io::read_file(a / "members.csv"));
        staged.kernels();
        staged.verify();
        staged.heat();
        staged.report();
    }
    CHECK(snapshot(a) == snapshot(b));

    const fs::path c = fresh("cli");
    fs::create_directories(c);
    io::write_atomic(c / "small.json", kSmall);
    CHECK(run_cli("run --config " + (c / "small.json").string() + " --out " + (c / "out").string() +
                  " --workers 2") == 1);  // criteria 4 and 7 fail on this schedule
    CHECK(snapshot(c / "out") == snapshot(a));

    const json manifest = json::parse(io::read_file(a / "manifest.json"));
    CHECK(manifest["config_hash"] == config_hash(cfg));
    std::vector<std::string> names;
    for (const auto& s : manifest["stages"]) names.push_back(s["name"]);
    CHECK(names == std::vector<std::string>{"simulate", "kernels", "diagnose", "verify", "heat", "report"});
    for (const auto& f : manifest["files"]) {
        const std::string data = io::read_file(a / f["path"].get<std::string>());
        CHECK(f["sha256"] == io::sha256_hex(data));
        CHECK(f["bytes"] == data.size());
    }
    CHECK(manifest["files"].size() == snapshot(a).size());

    const json summary = json::parse(io::read_file(a / "summary.json"));
    CHECK(summary["schema_version"] == 1);
    REQUIRE(summary["criteria"].size() == 11);
    for (int i = 0; i < 11; ++i) CHECK(summary["criteria"][i]["id"] == i + 1);
    CHECK(summary["all_pass"] == false);
}

TEST_CASE("stages report the missing input and its producer") {
    const ExperimentConfig cfg = parse_config(kSmall);
    const fs::path dir = fresh("missing");
    Lab lab(cfg, dir);
    const std::string msg = message_of([&] { lab.diagnose(); });
    CHECK(msg.find("members.csv") != std::string::npos);
    CHECK(msg.find("simulate") != std::string::npos);
    CHECK(msg.find("[diagnose]") != std::string::npos);
    CHECK_THROWS_AS(lab.report(), StageError);
    CHECK(message_of([&] { lab.report(); }).find("kernels.json") != std::string::npos);

    const json manifest = json::parse(io::read_file(dir / "manifest.json"));
    bool failed = false;
    for (const auto& s : manifest["stages"]) failed = failed || (s["name"] == "diagnose" && s["status"] == "failed");
    CHECK(failed);
}

TEST_CASE("verify on a constant-zero trajectory gives zero residuals") {
    const ExperimentConfig cfg = parse_config(kSmall);
    const fs::path dir = fresh("zero");
    std::string csv = "t,r,u_theta,omega\n";
    for (double t : {0.0, 0.05, 0.1})
        for (int i = 0; i <= 32; ++i) csv += io::format_double(t) + "," + io::format_double(i / 32.0) + ",0,0\n";
    io::write_atomic(dir / "zero.csv", csv);

    Lab lab(cfg, dir / "out");
    lab.use_trajectories({dir / "zero.csv"});
    lab.verify();
    const json v = json::parse(io::read_file(dir / "out" / "verify.json"));
    REQUIRE(v["members"].size() == 1);
    for (const auto& m : v["members"]) {
        CHECK(m["R_vel"] == 0.0);
        CHECK(m["R_vort"] == 0.0);
        CHECK(m["magnitude_vel"] == 0.0);
    }
    CHECK(run_cli("verify --config " + (dir / "none.json").string()) == 2);
}

TEST_CASE("kernels stage dumps a pair list") {
    const ExperimentConfig cfg = parse_config(kSmall);
    const fs::path dir = fresh("kernels");
    io::write_atomic(dir / "pairs.csv", "x1,x2,y1,y2\n0.1,0.2,-0.3,0.4\n0.5,0,0,0.5\n");
    Lab lab(cfg, dir / "out");
    lab.kernels(dir / "pairs.csv");
    const std::string out = io::read_file(dir / "out" / "kernels.csv");
    CHECK(out.rfind("x1,x2,y1,y2,G,K1,K2,H\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == 3);
    // G(x, y) = (1/2pi) log(|x - y| / (|y| |x - y*|)) at the second pair, by hand.
    const double d = std::sqrt(0.5), far = std::sqrt(0.25 + 4.0);
    const double g = std::log(d / (0.5 * far)) / (2.0 * std::numbers::pi);
    const auto second = out.substr(out.find('\n', out.find('\n') + 1) + 1);
    CHECK(std::stod(second.substr(second.find("0.5,0,0,0.5,") + 12)) == doctest::Approx(g).epsilon(1e-12));

    io::write_atomic(dir / "bad.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(lab.kernels(dir / "bad.csv"), StageError);
    CHECK_THROWS_AS(kernel_dump(cfg, "x1,x2,y1,y2\n1,2,3\n"), FormatError);
    CHECK(run_cli("kernels --out " + (dir / "cli").string() + " --pairs " + (dir / "pairs.csv").string()) == 0);
    CHECK(io::read_file(dir / "cli" / "kernels.csv") == out);
}

TEST_CASE("cli rejects unknown flags and stages") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("--bogus") == 2);
    CHECK(run_cli("dance") == 2);
}
