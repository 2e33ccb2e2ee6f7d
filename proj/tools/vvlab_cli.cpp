// vvlab command line: runs the experiment pipeline or a single stage of it.
//
//   vvlab_cli [run|simulate|kernels|diagnose|verify|heat|report] [--config PATH] [--out DIR]
//             [--workers N] [--seed S] [--pairs CSV] [--trajectory FILE ...]
//
// Exit status: 0 when the stage succeeded (for run and report: when every acceptance check
// passed), 1 when checks failed, 2 on configuration, input or stage errors.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/lab.hpp"

namespace {

constexpr int kChecksFailed = 1;
constexpr int kError = 2;

int print_summary(const vvlab::lab::Summary& s) {
    for (const auto& c : s.criteria)
        std::printf("%-4s %2d %-28s measured=%-14.6g threshold=%-12.6g %s\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.measured, c.threshold, c.detail.c_str());
    std::printf("%s\n", s.all_pass ? "all checks pass" : "some checks fail");
    return s.all_pass ? 0 : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vanishing-viscosity lab for radial vortex sheets on the unit disk"};
    std::string stage = "run";
    std::string stage_flag;
    std::string config_path;
    std::string out_dir;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::optional<std::uint64_t> seed;
    std::string pairs;
    std::vector<std::string> trajectories;

    const std::vector<std::string> stages{"run", "simulate", "kernels", "diagnose", "verify", "heat", "report"};
    app.add_option("command", stage, "Stage to execute")->check(CLI::IsMember(stages));
    app.add_option("--stage", stage_flag, "Stage to execute (same as the positional form)")
        ->check(CLI::IsMember(stages));
    app.add_option("--config", config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides output_dir of the config)");
    app.add_option("--workers", workers, "Concurrent member jobs")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for test-function batteries and kernel samples");
    app.add_option("--pairs", pairs, "Pair list for the kernels stage (CSV header x1,x2,y1,y2)")
        ->check(CLI::ExistingFile);
    app.add_option("--trajectory", trajectories, "Trajectory file used instead of the simulate outputs")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kError;
    }
    if (!stage_flag.empty()) stage = stage_flag;

    try {
        vvlab::lab::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = vvlab::lab::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        cfg.validate();

        vvlab::lab::Lab lab(cfg, cfg.output_dir, workers);
        if (!trajectories.empty()) lab.use_trajectories({trajectories.begin(), trajectories.end()});

        if (stage == "run") return print_summary(lab.run());
        if (stage == "report") return print_summary(lab.report());
        if (stage == "simulate") lab.simulate();
        if (stage == "kernels") lab.kernels(pairs.empty() ? std::nullopt : std::optional<std::filesystem::path>(pairs));
        if (stage == "diagnose") lab.diagnose();
        if (stage == "verify") lab.verify();
        if (stage == "heat") lab.heat();
        std::printf("%s: ok (%s)\n", stage.c_str(), cfg.output_dir.c_str());
        return 0;
    } catch (const vvlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kError;
    }
}
