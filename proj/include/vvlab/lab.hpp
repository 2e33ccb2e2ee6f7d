#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vvlab/acceptance.hpp"
#include "vvlab/diagnostics.hpp"
#include "vvlab/heat.hpp"
#include "vvlab/radial.hpp"

namespace vvlab::lab {

/// Experiment configuration. The JSON schema mirrors these fields; see README.
struct ExperimentConfig {
    // nu_n = nu0 * ratio^n, n = 0 .. count - 1.
    double nu0 = 1e-2;
    double nu_ratio = 0.5;
    int nu_count = 7;
    /// Sheet-family index per viscosity; empty means the paired default 2^(n+1).
    std::vector<int> family_indices;
    double mass = 6.283185307179586;
    double final_time = 0.1;
    double first_time = 1e-4;
    int time_count = 24;
    int grid_intervals = 4096;
    bool grid_clustered = false;

    double compact_radius = 0.7;
    std::vector<double> maximal_radii{0.1, 0.05, 0.025, 0.0125};
    bool time_supremum = false;
    int pairing_battery = 5;

    double eps = 0.1;
    double heat_compact_radius = 0.65;

    int battery_size = 10;
    std::uint64_t seed = 1;
    double support_radius = 0.75;
    int member_fields = 3;
    int verify_level = 0;

    Point probe_center{0.0, 0.0};
    double probe_radius = 0.5;

    std::string output_dir = "out";

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Strict parse: unknown keys, wrong types and invalid values raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON text (sorted keys, two-space indent).
std::string config_text(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

struct Member {
    int n = 0;
    int family_index = 0;
    double nu = 0.0;
};
std::vector<Member> schedule(const ExperimentConfig& cfg);
std::vector<double> sample_times(const ExperimentConfig& cfg);
GridPtr experiment_grid(const ExperimentConfig& cfg);
/// u_0 scaled to the configured mass.
RadialProfile limit_profile(const ExperimentConfig& cfg);

/// Runs fn(i) for i < count on up to `workers` threads; the first exception is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

Trajectory simulate_member(const ExperimentConfig& cfg, const Member& m);

struct DiagnoseResult {
    std::vector<ConvergenceEntry> entries;
    std::vector<double> initial_masses;
    MaximalFunctionCurve curve;
    std::vector<acceptance::CriterionResult> criteria;
};
DiagnoseResult diagnose_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                                const std::vector<Trajectory>& trajs, int workers);

struct HeatResult {
    std::vector<Claim1Entry> claim1;
    std::vector<Claim2Entry> claim2;
    std::vector<acceptance::CriterionResult> criteria;
};
HeatResult heat_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                        const std::vector<Trajectory>& trajs, int workers);

struct ResidualRecord {
    std::string group;
    int member = -1;
    std::uint64_t field_seed = 0;
    Point center;
    double radius = 0.0;
    acceptance::LevelPair r_vel;
    acceptance::LevelPair r_vort;
    double tol_vel = 0.0;
    double tol_vort = 0.0;
    double eta = 0.0;
    int k = 0;
    std::array<double, 4> boundary_terms{};
    DeltaSplitting splitting;
};

struct VerifyResult {
    std::vector<ResidualRecord> steady;
    std::vector<ResidualRecord> equivalence;
    std::vector<ResidualRecord> cutoffs;
    std::vector<ResidualRecord> members;
    std::vector<acceptance::CriterionResult> criteria;
};
/// Steady checks on u_0 and sheet members, and residuals of the given trajectories.
VerifyResult verify_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                            const std::vector<Trajectory>& trajs, int workers);
/// The steady checks alone (criteria 9, 10 and 11 individually).
VerifyResult verify_steady(const ExperimentConfig& cfg, int which = 0);

std::vector<acceptance::CriterionResult> kernel_checks(const ExperimentConfig& cfg);

struct Summary {
    std::vector<acceptance::CriterionResult> criteria;
    bool all_pass = false;
};

/// Stage driver writing into an output directory. Every write is atomic; manifest.json is
/// rewritten after each stage, also when the stage fails.
class Lab {
public:
    Lab(ExperimentConfig cfg, std::filesystem::path out, int workers = 1);

    /// Trajectory files used instead of the simulate outputs (CSV or binary by extension).
    void use_trajectories(std::vector<std::filesystem::path> files) { overrides_ = std::move(files); }

    void simulate();
    void kernels(const std::optional<std::filesystem::path>& pairs = std::nullopt);
    void diagnose();
    void verify();
    void heat();
    Summary report();
    /// All stages in order, then report.
    Summary run();

    const std::filesystem::path& out() const { return out_; }

private:
    void stage(const std::string& name, const std::function<void()>& body);
    void write(const std::string& relative, const std::string& content);
    void write_manifest();
    void load_inputs(const std::string& stage, std::vector<Member>& members, std::vector<Trajectory>& trajs) const;

    ExperimentConfig cfg_;
    std::filesystem::path out_;
    int workers_;
    std::vector<std::filesystem::path> overrides_;
    struct StageRecord {
        std::string name;
        std::string status;
        double seconds = 0.0;
    };
    std::vector<StageRecord> stages_;
};

/// Text of a kernel-dump CSV (x1,x2,y1,y2,G,K1,K2,H) for a pair list with header x1,x2,y1,y2.
std::string kernel_dump(const ExperimentConfig& cfg, std::string_view pairs_csv);

}  // namespace vvlab::lab
