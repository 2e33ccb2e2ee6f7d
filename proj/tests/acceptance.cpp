// Acceptance suite: one PASS/FAIL line per criterion on the default configuration.
//
//   acceptance                 all eleven criteria
//   acceptance --criterion N   criterion N alone (ctest registers one entry per criterion)
//
// Thresholds are pinned in vvlab/acceptance.hpp. Exit status is 0 only if every evaluated
// criterion passes.

#include <cstdio>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "vvlab/lab.hpp"

namespace lab = vvlab::lab;
using vvlab::acceptance::CriterionResult;

namespace {

std::vector<vvlab::Trajectory> simulate_all(const lab::ExperimentConfig& cfg, const std::vector<lab::Member>& members,
                                            int workers) {
    std::vector<vvlab::Trajectory> trajs(members.size());
    lab::parallel_for(members.size(), workers, [&](std::size_t i) { trajs[i] = lab::simulate_member(cfg, members[i]); });
    return trajs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    int only = 0;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--criterion", only, "Evaluate a single criterion (1-11)")->check(CLI::Range(1, 11));
    app.add_option("--workers", workers, "Concurrent member jobs")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    std::setvbuf(stdout, nullptr, _IONBF, 0);

    const lab::ExperimentConfig cfg;
    auto wanted = [&](std::initializer_list<int> ids) {
        if (only == 0) return true;
        for (int id : ids)
            if (id == only) return true;
        return false;
    };

    std::vector<CriterionResult> results;
    auto add = [&](const CriterionResult& c) {
        if (only != 0 && c.id != only) return;
        std::printf("%s criterion %d (%s): measured %.6g, threshold %.6g; %s\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.measured, c.threshold, c.detail.c_str());
        results.push_back(c);
    };

    try {
        if (wanted({1})) add(vvlab::acceptance::kernel_identities(cfg.seed));
        if (wanted({2})) add(vvlab::acceptance::aux_plateau(cfg.seed));
        if (wanted({3, 4, 5, 6, 7, 8})) {
            const auto members = lab::schedule(cfg);
            const auto trajs = simulate_all(cfg, members, workers);
            if (wanted({3})) add(vvlab::acceptance::solver_exactness(trajs));
            if (wanted({4, 5, 6}))
                for (const auto& c : lab::diagnose_members(cfg, members, trajs, workers).criteria) add(c);
            if (wanted({7, 8}))
                for (const auto& c : lab::heat_members(cfg, members, trajs, workers).criteria) add(c);
        }
        for (int id : {9, 10, 11})
            if (wanted({id}))
                for (const auto& c : lab::verify_steady(cfg, id).criteria) add(c);
    } catch (const std::exception& e) {
        std::printf("FAIL criterion %d: error: %s\n", only, e.what());
        return 1;
    }

    bool all = !results.empty();
    for (const auto& c : results) all = all && c.pass;
    return all ? 0 : 1;
}
