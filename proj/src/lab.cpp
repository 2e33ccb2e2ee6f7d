#include "vvlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/io.hpp"
#include "vvlab/kernels.hpp"
#include "vvlab/tolerances.hpp"
#include "vvlab/trajectory_io.hpp"
#include "vvlab/weak.hpp"

namespace vvlab::lab {

namespace fs = std::filesystem;
using nlohmann::json;
using acceptance::CriterionResult;

namespace {

constexpr int kSummarySchema = 1;
constexpr const char* kVersion = "1.0.0";

// ---- config parsing ----

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError("unknown key '" + it.key() + "' in " + (where.empty() ? "config" : "'" + where + "'"));
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    try {
        const json& v = obj.at(key);
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_integer()) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("");
        }
        out = v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("key '" + where + (where.empty() ? "" : ".") + key + "' has the wrong type");
    }
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["viscosity"] = {{"nu0", c.nu0}, {"ratio", c.nu_ratio}, {"count", c.nu_count}};
    j["family_indices"] = c.family_indices;
    j["mass"] = c.mass;
    j["time"] = {{"final", c.final_time}, {"first", c.first_time}, {"count", c.time_count}};
    j["grid"] = {{"intervals", c.grid_intervals}, {"kind", c.grid_clustered ? "clustered" : "uniform"}};
    j["diagnostics"] = {{"compact_radius", c.compact_radius},
                        {"maximal_radii", c.maximal_radii},
                        {"time_aggregate", c.time_supremum ? "supremum" : "integral"},
                        {"pairing_battery", c.pairing_battery}};
    j["heat"] = {{"eps", c.eps}, {"compact_radius", c.heat_compact_radius}};
    j["verify"] = {{"battery_size", c.battery_size},
                   {"seed", c.seed},
                   {"support_radius", c.support_radius},
                   {"member_fields", c.member_fields},
                   {"level", c.verify_level}};
    j["kernels"] = {{"probe_center", {c.probe_center.x1, c.probe_center.x2}}, {"probe_radius", c.probe_radius}};
    j["output_dir"] = c.output_dir;
    return j;
}

// ---- CSV helpers ----

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(where + ": '" + s + "' is not a number");
    }
}

std::string fmt(double v) { return io::format_double(v); }

// ---- JSON of results ----

json criterion_json(const CriterionResult& c) {
    return {{"id", c.id},           {"name", c.name},           {"pass", c.pass},
            {"measured", c.measured}, {"threshold", c.threshold}, {"detail", c.detail}};
}

CriterionResult criterion_from_json(const json& j) {
    CriterionResult c;
    c.id = j.at("id").get<int>();
    c.name = j.at("name").get<std::string>();
    c.pass = j.at("pass").get<bool>();
    c.measured = j.at("measured").is_number() ? j.at("measured").get<double>() : std::nan("");
    c.threshold = j.at("threshold").is_number() ? j.at("threshold").get<double>() : std::nan("");
    c.detail = j.at("detail").get<std::string>();
    return c;
}

json criteria_json(const std::vector<CriterionResult>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back(criterion_json(c));
    return a;
}

json splitting_json(const DeltaSplitting& s) {
    return {{"deltas", s.deltas},
            {"far", s.far},
            {"near", s.near},
            {"observed_order", s.observed_order},
            {"extrapolated", s.extrapolated},
            {"fallback", s.fallback}};
}

json record_json(const ResidualRecord& r) {
    json j{{"group", r.group},
           {"field_seed", r.field_seed},
           {"center", {r.center.x1, r.center.x2}},
           {"radius", r.radius},
           {"R_vel", r.r_vel.fine},
           {"R_vort", r.r_vort.fine},
           {"magnitude_vel", r.r_vel.magnitude},
           {"magnitude_vort", r.r_vort.magnitude},
           {"tol_vel", r.tol_vel},
           {"tol_vort", r.tol_vort},
           {"eta", r.eta},
           {"k", r.k},
           {"boundary_terms", r.boundary_terms},
           {"delta_extrapolation", splitting_json(r.splitting)}};
    if (r.member >= 0) j["member"] = r.member;
    if (!std::isnan(r.r_vel.coarse)) j["R_vel_coarse"] = r.r_vel.coarse;
    if (!std::isnan(r.r_vort.coarse)) j["R_vort_coarse"] = r.r_vort.coarse;
    return j;
}

// ---- verification pieces ----

Cutoff cutoff_for(const TestFunction& phi, double gap, double width) {
    return Cutoff(phi.outer_radius() + gap, phi.outer_radius() + gap + width);
}

int decomposition_index(double eta) { return static_cast<int>(std::floor(1.0 / eta)) + 1; }

void fill_decomposition(ResidualRecord& r, const RadialField& omega, const Cutoff& chi, const TestFunction& phi) {
    r.k = decomposition_index(r.eta);
    r.boundary_terms = boundary_split_terms(decompose_interior_boundary(omega, chi, r.k), phi);
}

ResidualRecord steady_record(const std::string& group, const DivFreeTestField& field, const VectorField2D& u,
                             const RadialProfile& omega, const RadialField& omega_grid, const Cutoff& chi,
                             int level, bool two_levels) {
    const auto& phi = field.generator();
    ResidualRecord r;
    r.group = group;
    r.field_seed = field.seed();
    r.center = phi.center();
    r.radius = phi.radius();
    WeakQuadrature q;
    q.level = level;
    const WeakQuadrature fine_q = two_levels ? q.refined() : q;
    const auto vf = velocity_weak_residual(u, field, fine_q);
    const auto wf = vorticity_interior_residual(omega, phi, chi, fine_q);
    r.r_vel = {std::nan(""), vf.value, vf.magnitude};
    r.r_vort = {std::nan(""), wf.value, wf.magnitude};
    if (two_levels) {
        r.r_vel.coarse = velocity_weak_residual(u, field, q).value;
        r.r_vort.coarse = vorticity_interior_residual(omega, phi, chi, q).value;
    }
    r.tol_vel = tol::quadrature_target * vf.magnitude;
    r.tol_vort = tol::quadrature_target * wf.magnitude;
    r.eta = wf.eta;
    r.splitting = wf.splitting;
    fill_decomposition(r, omega_grid, chi, phi);
    return r;
}

std::vector<TestFunction> equivalence_probes(const ExperimentConfig& cfg) {
    const double t0 = 0.1 * cfg.final_time, t1 = 0.9 * cfg.final_time;
    return {TestFunction({0.5, 0.0}, 0.2, t0, t1), TestFunction({0.0, 0.45}, 0.25, t0, t1),
            TestFunction({-0.35, -0.35}, 0.2, t0, t1)};
}

int max_family_index(const ExperimentConfig& cfg) {
    int m = 0;
    for (const auto& mem : schedule(cfg)) m = std::max(m, mem.family_index);
    return m;
}

}  // namespace

// ---- config ----

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (nu_count < 1) fail("viscosity.count: the viscosity schedule is empty");
    if (!(nu0 > 0.0)) fail("viscosity.nu0 must be positive");
    if (!(nu_ratio > 0.0 && nu_ratio < 1.0)) fail("viscosity.ratio must lie in (0, 1) for a decreasing schedule");
    if (!family_indices.empty() && static_cast<int>(family_indices.size()) != nu_count)
        fail("family_indices must list one index per viscosity");
    for (int n : family_indices)
        if (n < 1) fail("family_indices must be positive");
    if (!(mass > 0.0)) fail("mass must be positive");
    if (!(final_time > 0.0)) fail("time.final must be positive");
    if (!(first_time > 0.0 && first_time < final_time)) fail("time.first must lie in (0, time.final)");
    if (time_count < 1) fail("time.count must be positive");
    if (grid_intervals < 16) fail("grid.intervals must be at least 16");
    if (!(compact_radius > 0.0 && compact_radius < 1.0)) fail("diagnostics.compact_radius must lie in (0, 1)");
    if (maximal_radii.size() < 2) fail("diagnostics.maximal_radii needs at least two radii");
    for (std::size_t i = 0; i < maximal_radii.size(); ++i) {
        if (!(maximal_radii[i] > 0.0)) fail("diagnostics.maximal_radii must be positive");
        if (i > 0 && !(maximal_radii[i] < maximal_radii[i - 1]))
            fail("diagnostics.maximal_radii must be strictly decreasing");
    }
    if (pairing_battery < 1) fail("diagnostics.pairing_battery must be positive");
    if (!(eps > 0.0 && eps < 1.0 / 3.0)) fail("heat.eps must lie in (0, 1/3)");
    if (!(heat_compact_radius > 0.0 && heat_compact_radius < 1.0 - 3.0 * eps))
        fail("heat.compact_radius must lie in (0, 1 - 3 eps)");
    if (battery_size < 1) fail("verify.battery_size must be positive");
    if (!(support_radius > 0.0 && support_radius <= 0.75)) fail("verify.support_radius must lie in (0, 0.75]");
    if (member_fields < 0 || member_fields > battery_size) fail("verify.member_fields must lie in [0, battery_size]");
    if (verify_level < 0 || verify_level > 3) fail("verify.level must lie in [0, 3]");
    if (!(probe_radius > 0.0 && norm(probe_center) + probe_radius < 1.0))
        fail("kernels.probe disk must lie inside the unit disk");
    if (output_dir.empty()) fail("output_dir must not be empty");
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    reject_unknown(j, "", {"viscosity", "family_indices", "mass", "time", "grid", "diagnostics", "heat", "verify",
                           "kernels", "output_dir"});
    if (j.contains("viscosity")) {
        const auto& v = j["viscosity"];
        reject_unknown(v, "viscosity", {"nu0", "ratio", "count"});
        read(v, "nu0", "viscosity", c.nu0);
        read(v, "ratio", "viscosity", c.nu_ratio);
        read(v, "count", "viscosity", c.nu_count);
    }
    if (j.contains("family_indices")) {
        if (!j["family_indices"].is_array()) throw ConfigError("key 'family_indices' has the wrong type");
        c.family_indices.clear();
        for (const auto& e : j["family_indices"]) {
            if (!e.is_number_integer()) throw ConfigError("key 'family_indices' has the wrong type");
            c.family_indices.push_back(e.get<int>());
        }
    }
    read(j, "mass", "", c.mass);
    if (j.contains("time")) {
        const auto& t = j["time"];
        reject_unknown(t, "time", {"final", "first", "count"});
        read(t, "final", "time", c.final_time);
        read(t, "first", "time", c.first_time);
        read(t, "count", "time", c.time_count);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, "grid", {"intervals", "kind"});
        read(g, "intervals", "grid", c.grid_intervals);
        std::string kind = c.grid_clustered ? "clustered" : "uniform";
        read(g, "kind", "grid", kind);
        if (kind != "uniform" && kind != "clustered") throw ConfigError("grid.kind must be 'uniform' or 'clustered'");
        c.grid_clustered = kind == "clustered";
    }
    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        reject_unknown(d, "diagnostics", {"compact_radius", "maximal_radii", "time_aggregate", "pairing_battery"});
        read(d, "compact_radius", "diagnostics", c.compact_radius);
        if (d.contains("maximal_radii")) {
            if (!d["maximal_radii"].is_array()) throw ConfigError("key 'diagnostics.maximal_radii' has the wrong type");
            c.maximal_radii.clear();
            for (const auto& e : d["maximal_radii"]) {
                if (!e.is_number()) throw ConfigError("key 'diagnostics.maximal_radii' has the wrong type");
                c.maximal_radii.push_back(e.get<double>());
            }
        }
        std::string agg = c.time_supremum ? "supremum" : "integral";
        read(d, "time_aggregate", "diagnostics", agg);
        if (agg != "integral" && agg != "supremum")
            throw ConfigError("diagnostics.time_aggregate must be 'integral' or 'supremum'");
        c.time_supremum = agg == "supremum";
        read(d, "pairing_battery", "diagnostics", c.pairing_battery);
    }
    if (j.contains("heat")) {
        const auto& h = j["heat"];
        reject_unknown(h, "heat", {"eps", "compact_radius"});
        read(h, "eps", "heat", c.eps);
        read(h, "compact_radius", "heat", c.heat_compact_radius);
    }
    if (j.contains("verify")) {
        const auto& v = j["verify"];
        reject_unknown(v, "verify", {"battery_size", "seed", "support_radius", "member_fields", "level"});
        read(v, "battery_size", "verify", c.battery_size);
        read(v, "seed", "verify", c.seed);
        read(v, "support_radius", "verify", c.support_radius);
        read(v, "member_fields", "verify", c.member_fields);
        read(v, "level", "verify", c.verify_level);
    }
    if (j.contains("kernels")) {
        const auto& k = j["kernels"];
        reject_unknown(k, "kernels", {"probe_center", "probe_radius"});
        if (k.contains("probe_center")) {
            const auto& pc = k["probe_center"];
            if (!pc.is_array() || pc.size() != 2 || !pc[0].is_number() || !pc[1].is_number())
                throw ConfigError("key 'kernels.probe_center' must be an array of two numbers");
            c.probe_center = {pc[0].get<double>(), pc[1].get<double>()};
        }
        read(k, "probe_radius", "kernels", c.probe_radius);
    }
    read(j, "output_dir", "", c.output_dir);
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string config_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& cfg) {
    // The output directory does not change any result.
    ExperimentConfig c = cfg;
    c.output_dir = "";
    return io::sha256_hex(to_json(c).dump());
}

std::vector<Member> schedule(const ExperimentConfig& cfg) {
    std::vector<Member> out;
    for (int n = 0; n < cfg.nu_count; ++n) {
        Member m;
        m.n = n;
        m.nu = cfg.nu0 * std::pow(cfg.nu_ratio, n);
        m.family_index = cfg.family_indices.empty() ? (1 << (n + 1)) : cfg.family_indices[n];
        out.push_back(m);
    }
    return out;
}

std::vector<double> sample_times(const ExperimentConfig& cfg) {
    return geometric_times(cfg.final_time, cfg.first_time, cfg.time_count);
}

GridPtr experiment_grid(const ExperimentConfig& cfg) {
    return make_grid(cfg.grid_clustered ? RadialGrid::clustered(cfg.grid_intervals)
                                        : RadialGrid::uniform(cfg.grid_intervals));
}

RadialProfile limit_profile(const ExperimentConfig& cfg) {
    RadialProfile p = SheetFamily::limit_profile();
    const double scale = cfg.mass / (2.0 * std::numbers::pi);
    auto base = p.eval;
    p.eval = [base, scale](double r) { return scale * base(r); };
    return p;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t w = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

Trajectory simulate_member(const ExperimentConfig& cfg, const Member& m) {
    const GridPtr grid = experiment_grid(cfg);
    const SheetFamily fam = build_sheet_family(m.family_index, *grid, cfg.mass);
    const auto modes = project_modes(fam.velocity_profile(), mode_count_for(m.family_index));
    auto traj = evolve(modes, m.nu, sample_times(cfg), grid);
    traj.family_index = m.family_index;
    return traj;
}

DiagnoseResult diagnose_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                                const std::vector<Trajectory>& trajs, int workers) {
    DiagnoseResult r;
    const CompactSubdomain K(cfg.compact_radius);
    const auto reference = limit_profile(cfg);
    const auto battery = make_pairing_battery(cfg.pairing_battery, cfg.final_time, cfg.seed);
    const auto mode = cfg.time_supremum ? TimeAggregate::supremum : TimeAggregate::integral;
    r.entries.resize(trajs.size());
    r.initial_masses.resize(trajs.size());
    parallel_for(trajs.size(), workers, [&](std::size_t i) {
        r.entries[i] = diagnose_member(trajs[i], members[i].n, K, cfg.maximal_radii, reference, battery, mode);
        r.initial_masses[i] = l1_norm(trajs[i].vorticity.front());
    });
    std::vector<std::vector<double>> rows;
    std::vector<double> dist, l1;
    for (const auto& e : r.entries) {
        rows.push_back(e.maximal_values);
        dist.push_back(e.l2_distance);
        l1.push_back(e.l1_sup);
    }
    r.curve = assemble_curve(cfg.maximal_radii, rows);
    r.criteria = {acceptance::sheet_limit(dist), acceptance::l1_bound(l1, r.initial_masses),
                  acceptance::maximal_decay(r.curve)};
    return r;
}

HeatResult heat_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                        const std::vector<Trajectory>& trajs, int workers) {
    HeatResult r;
    r.claim1.resize(trajs.size());
    r.claim2.resize(trajs.size());
    const auto times = sample_times(cfg);
    const auto chi = collar_cutoff(cfg.eps);
    const CompactSubdomain K(cfg.heat_compact_radius);
    parallel_for(trajs.size(), workers, [&](std::size_t i) {
        if (!(trajs[i].nu > 0.0)) throw ParameterError("heat bounds need the trajectory viscosity");
        const SheetFamily fam(members[i].family_index, cfg.mass);
        r.claim1[i] = claim1_entry(fam, trajs[i].nu, trajs[i].times, chi);
        r.claim2[i] = claim2_entry(trajs[i], cfg.eps, K, cfg.final_time);
        r.claim1[i].index = members[i].n;
        r.claim2[i].index = members[i].n;
    });
    r.criteria = {acceptance::claim2(r.claim2), acceptance::claim1(r.claim1)};
    return r;
}

VerifyResult verify_steady(const ExperimentConfig& cfg, int which) {
    VerifyResult r;
    const GridPtr grid = experiment_grid(cfg);
    const double t_lo = 0.1 * cfg.final_time, t_hi = 0.9 * cfg.final_time;
    if (which == 0 || which == 9) {
        // u_0 itself carries a measure-valued vorticity; the finest sheet member stands in for it.
        const auto u0 = swirl_field(limit_profile(cfg));
        const SheetFamily stand_in(max_family_index(cfg), cfg.mass);
        const auto w = stand_in.vorticity_profile();
        const auto wg = sample(w, grid, FieldKind::vorticity);
        const auto battery =
            make_test_battery(cfg.battery_size, cfg.seed, {0.0, 0.0}, cfg.support_radius, t_lo, t_hi, cfg.final_time);
        r.steady.resize(battery.size());
        for (std::size_t i = 0; i < battery.size(); ++i) {
            const auto chi = cutoff_for(battery[i].generator(), 0.1, 0.1);
            r.steady[i] = steady_record("steady", battery[i], u0, w, wg, chi, cfg.verify_level, true);
        }
        std::vector<acceptance::LevelPair> vel, vort;
        for (const auto& s : r.steady) {
            vel.push_back(s.r_vel);
            vort.push_back(s.r_vort);
        }
        r.criteria.push_back(acceptance::residual_vanishing(vel, vort));
    }
    if (which == 0 || which == 10) {
        const auto probes = equivalence_probes(cfg);
        const int indices[] = {4, 16, 64};
        std::vector<acceptance::EquivalenceInstance> inst;
        for (int i = 0; i < 3; ++i) {
            const SheetFamily fam(indices[i], cfg.mass);
            const auto w = fam.vorticity_profile();
            const auto rec =
                steady_record("equivalence", DivFreeTestField(probes[i]), swirl_field(fam.velocity_profile()), w,
                              sample(w, grid, FieldKind::vorticity), cutoff_for(probes[i], 0.1, 0.1),
                              cfg.verify_level + 1, false);
            r.equivalence.push_back(rec);
            inst.push_back({rec.r_vel.fine, rec.r_vort.fine, rec.tol_vel, rec.tol_vort});
        }
        r.criteria.push_back(acceptance::equivalence(inst));
    }
    if (which == 0 || which == 11) {
        const auto phi = equivalence_probes(cfg).front();
        const SheetFamily fam(16, cfg.mass);
        const auto w = fam.vorticity_profile();
        const auto wg = sample(w, grid, FieldKind::vorticity);
        std::vector<acceptance::CutoffResidual> res;
        for (double gap : {0.05, 0.1, 0.15}) {
            const auto rec = steady_record("cutoff", DivFreeTestField(phi), swirl_field(fam.velocity_profile()), w, wg,
                                           cutoff_for(phi, gap, 0.1), cfg.verify_level + 1, false);
            r.cutoffs.push_back(rec);
            res.push_back({rec.r_vort.fine, rec.tol_vort});
        }
        r.criteria.push_back(acceptance::chi_independence(res));
    }
    return r;
}

VerifyResult verify_members(const ExperimentConfig& cfg, const std::vector<Member>& members,
                            const std::vector<Trajectory>& trajs, int workers) {
    VerifyResult r = verify_steady(cfg, 0);
    const double t_lo = 0.1 * cfg.final_time, t_hi = 0.9 * cfg.final_time;
    const auto battery = make_test_battery(static_cast<std::size_t>(cfg.member_fields), cfg.seed, {0.0, 0.0},
                                           cfg.support_radius, t_lo, t_hi, cfg.final_time);
    const std::size_t nf = battery.size();
    r.members.resize(trajs.size() * nf);
    WeakQuadrature q;
    q.level = cfg.verify_level;
    parallel_for(r.members.size(), workers, [&](std::size_t idx) {
        const std::size_t i = idx / nf, f = idx % nf;
        const auto& field = battery[f];
        const auto& phi = field.generator();
        const auto chi = cutoff_for(phi, 0.1, 0.1);
        ResidualRecord rec;
        rec.group = "member";
        rec.member = members[i].n;
        rec.field_seed = field.seed();
        rec.center = phi.center();
        rec.radius = phi.radius();
        const auto v = velocity_weak_residual(trajs[i], field, q);
        const auto w = vorticity_interior_residual(trajs[i], phi, chi, q);
        rec.r_vel = {std::nan(""), v.value, v.magnitude};
        rec.r_vort = {std::nan(""), w.value, w.magnitude};
        rec.tol_vel = tol::quadrature_target * v.magnitude;
        rec.tol_vort = tol::quadrature_target * w.magnitude;
        rec.eta = w.eta;
        rec.splitting = w.splitting;
        if (!trajs[i].vorticity.empty()) fill_decomposition(rec, trajs[i].vorticity.back(), chi, phi);
        r.members[idx] = rec;
    });
    return r;
}

std::vector<CriterionResult> kernel_checks(const ExperimentConfig& cfg) {
    return {acceptance::kernel_identities(cfg.seed), acceptance::aux_plateau(cfg.seed)};
}

std::string kernel_dump(const ExperimentConfig& cfg, std::string_view pairs_csv) {
    std::istringstream in{std::string(pairs_csv)};
    std::string line;
    if (!std::getline(in, line)) throw FormatError("pair list is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x1,x2,y1,y2") throw FormatError("pair list header must be 'x1,x2,y1,y2', got '" + line + "'");
    const TestFunction probe(cfg.probe_center, cfg.probe_radius, 0.1 * cfg.final_time, 0.9 * cfg.final_time);
    std::string out = "x1,x2,y1,y2,G,K1,K2,H\n";
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        const std::string where = "pair list line " + std::to_string(row);
        if (cells.size() != 4) throw FormatError(where + ": expected 4 columns");
        const Point x{parse_double(cells[0], where), parse_double(cells[1], where)};
        const Point y{parse_double(cells[2], where), parse_double(cells[3], where)};
        const Vec2 k = biot_savart_kernel(x, y);
        const double h = aux_kernel(x, y, probe.spatial_grad(x), probe.spatial_grad(y));
        out += fmt(x.x1) + "," + fmt(x.x2) + "," + fmt(y.x1) + "," + fmt(y.x2) + "," + fmt(green_disk(x, y)) + "," +
               fmt(k.x1) + "," + fmt(k.x2) + "," + fmt(h) + "\n";
    }
    return out;
}

// ---- Lab ----

Lab::Lab(ExperimentConfig cfg, fs::path out, int workers) : cfg_(std::move(cfg)), out_(std::move(out)), workers_(workers) {
    cfg_.validate();
    fs::create_directories(out_);
    // Keep stage records of earlier invocations on the same configuration.
    const fs::path manifest = out_ / "manifest.json";
    if (fs::exists(manifest)) {
        try {
            const json m = json::parse(io::read_file(manifest));
            if (m.value("config_hash", "") == config_hash(cfg_))
                for (const auto& s : m.at("stages"))
                    stages_.push_back({s.at("name"), s.at("status"), s.at("seconds").get<double>()});
        } catch (const std::exception&) {
            stages_.clear();
        }
    }
    // The output directory is left out so that results do not depend on where they are written.
    json persisted = to_json(cfg_);
    persisted.erase("output_dir");
    io::write_atomic(out_ / "config.json", persisted.dump(2) + "\n");
}

void Lab::write(const std::string& relative, const std::string& content) {
    const fs::path p = out_ / relative;
    fs::create_directories(p.parent_path());
    io::write_atomic(p, content);
}

void Lab::write_manifest() {
    json files = json::array();
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(out_))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        const std::string data = io::read_file(p);
        files.push_back({{"path", fs::relative(p, out_).generic_string()},
                         {"bytes", data.size()},
                         {"sha256", io::sha256_hex(data)}});
    }
    json stages = json::array();
    for (const auto& s : stages_) stages.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}});
    const json m{{"config_hash", config_hash(cfg_)},
                 {"versions",
                  {{"vvlab", kVersion}, {"trajectory_format", kTrajectoryFormatVersion}, {"summary_schema", kSummarySchema}}},
                 {"files", files},
                 {"stages", stages}};
    io::write_atomic(out_ / "manifest.json", m.dump(2) + "\n");
}

void Lab::stage(const std::string& name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string status = "ok";
    std::string error;
    try {
        body();
    } catch (const std::exception& e) {
        status = "failed";
        error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::erase_if(stages_, [&](const StageRecord& s) { return s.name == name; });
    stages_.push_back({name, status, seconds});
    write_manifest();
    if (status != "ok") throw StageError(name, error);
}

void Lab::load_inputs(const std::string& stage_name, std::vector<Member>& members,
                      std::vector<Trajectory>& trajs) const {
    members.clear();
    trajs.clear();
    if (!overrides_.empty()) {
        for (std::size_t i = 0; i < overrides_.size(); ++i) {
            const auto& p = overrides_[i];
            if (!fs::exists(p)) throw Error("missing input " + p.string() + " (given with --trajectory)");
            trajs.push_back(p.extension() == ".csv" ? read_trajectory_csv(p) : read_trajectory_binary(p));
            members.push_back({static_cast<int>(i), trajs.back().family_index, trajs.back().nu});
        }
        return;
    }
    const fs::path index = out_ / "members.csv";
    if (!fs::exists(index))
        throw Error("missing input " + index.string() + " needed by " + stage_name +
                    "; it is produced by the simulate stage");
    std::istringstream in(io::read_file(index));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split(line);
        if (c.size() != 4) throw FormatError("members.csv: expected 4 columns");
        Member m{std::stoi(c[0]), std::stoi(c[1]), parse_double(c[2], "members.csv")};
        const fs::path file = out_ / c[3];
        if (!fs::exists(file))
            throw Error("missing input " + file.string() + " needed by " + stage_name +
                        "; it is produced by the simulate stage");
        auto t = read_trajectory_binary(file);
        t.family_index = m.family_index;
        members.push_back(m);
        trajs.push_back(std::move(t));
    }
}

void Lab::simulate() {
    stage("simulate", [&] {
        const auto members = schedule(cfg_);
        std::vector<Trajectory> trajs(members.size());
        parallel_for(members.size(), workers_, [&](std::size_t i) { trajs[i] = simulate_member(cfg_, members[i]); });
        std::string index = "n,family_index,nu,file\n";
        json rows = json::array();
        for (std::size_t i = 0; i < members.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "trajectories/member_%02d.bin", members[i].n);
            write(name, trajectory_binary(trajs[i]));
            index += std::to_string(members[i].n) + "," + std::to_string(members[i].family_index) + "," +
                     fmt(members[i].nu) + "," + name + "\n";
            double slip = 0.0;
            for (std::size_t j = 0; j < trajs[i].time_count(); ++j)
                if (trajs[i].times[j] > 0.0) slip = std::max(slip, std::abs(trajs[i].velocity[j].values.back()));
            rows.push_back({{"n", members[i].n},
                            {"family_index", members[i].family_index},
                            {"nu", members[i].nu},
                            {"modes", trajs[i].modes ? trajs[i].modes->size() : 0},
                            {"reconstruction_error", trajs[i].modes ? trajs[i].modes->reconstruction_error : 0.0},
                            {"truncation_warning", trajs[i].truncation_warning},
                            {"energy", acceptance::sample_energies(trajs[i])},
                            {"max_boundary_velocity", slip}});
        }
        write("members.csv", index);
        const json j{{"members", rows}, {"criteria", criteria_json({acceptance::solver_exactness(trajs)})}};
        write("simulate.json", j.dump(2) + "\n");
    });
}

void Lab::kernels(const std::optional<fs::path>& pairs) {
    stage("kernels", [&] {
        if (pairs) {
            if (!fs::exists(*pairs)) throw Error("missing input " + pairs->string() + " (pair list)");
            write("kernels.csv", kernel_dump(cfg_, io::read_file(*pairs)));
            return;
        }
        const auto checks = kernel_checks(cfg_);
        const TestFunction probe(cfg_.probe_center, cfg_.probe_radius, 0.1 * cfg_.final_time, 0.9 * cfg_.final_time);
        const auto plateau = acceptance::aux_plateau_profile(probe, cfg_.seed);
        const json j{{"plateau", {{"decade_floor", plateau.decade_floor}, {"sup", plateau.sup}}},
                     {"criteria", criteria_json(checks)}};
        write("kernels.json", j.dump(2) + "\n");
    });
}

void Lab::diagnose() {
    stage("diagnose", [&] {
        std::vector<Member> members;
        std::vector<Trajectory> trajs;
        load_inputs("diagnose", members, trajs);
        const auto r = diagnose_members(cfg_, members, trajs, workers_);
        std::string csv = "n,nu,r,maximal_value,l1_sup,l2_dist,pairing_residual\n";
        json rows = json::array();
        for (std::size_t i = 0; i < r.entries.size(); ++i) {
            const auto& e = r.entries[i];
            for (std::size_t k = 0; k < cfg_.maximal_radii.size(); ++k)
                csv += std::to_string(e.index) + "," + fmt(e.nu) + "," + fmt(cfg_.maximal_radii[k]) + "," +
                       fmt(e.maximal_values[k]) + "," + fmt(e.l1_sup) + "," + fmt(e.l2_distance) + "," +
                       fmt(e.pairing_residual) + "\n";
            rows.push_back({{"n", e.index},
                            {"nu", e.nu},
                            {"initial_mass", r.initial_masses[i]},
                            {"l1_sup", e.l1_sup},
                            {"l2_dist", e.l2_distance},
                            {"pairing_residual", e.pairing_residual},
                            {"maximal_values", e.maximal_values}});
        }
        write("diagnostics.csv", csv);
        const json j{{"members", rows},
                     {"curve", {{"radii", r.curve.radii}, {"sup_values", r.curve.sup_values}}},
                     {"criteria", criteria_json(r.criteria)}};
        write("diagnostics.json", j.dump(2) + "\n");
    });
}

void Lab::verify() {
    stage("verify", [&] {
        std::vector<Member> members;
        std::vector<Trajectory> trajs;
        load_inputs("verify", members, trajs);
        const auto r = verify_members(cfg_, members, trajs, workers_);
        auto records = [](const std::vector<ResidualRecord>& v) {
            json a = json::array();
            for (const auto& x : v) a.push_back(record_json(x));
            return a;
        };
        const json j{{"level", cfg_.verify_level},
                     {"steady", records(r.steady)},
                     {"equivalence", records(r.equivalence)},
                     {"cutoffs", records(r.cutoffs)},
                     {"members", records(r.members)},
                     {"criteria", criteria_json(r.criteria)}};
        write("verify.json", j.dump(2) + "\n");
    });
}

void Lab::heat() {
    stage("heat", [&] {
        std::vector<Member> members;
        std::vector<Trajectory> trajs;
        load_inputs("heat", members, trajs);
        const auto r = heat_members(cfg_, members, trajs, workers_);
        std::string csv = "n,nu,sup_A,bound_A,sup_B,bound_B,pass\n";
        json rows = json::array();
        for (std::size_t i = 0; i < r.claim2.size(); ++i) {
            const auto& c2 = r.claim2[i];
            const auto& c1 = r.claim1[i];
            csv += std::to_string(c2.index) + "," + fmt(c2.nu) + "," + fmt(c2.sup_A) + "," + fmt(c2.bound_A) + "," +
                   fmt(c2.sup_B) + "," + fmt(c2.bound_B) + "," + (c2.pass ? "true" : "false") + "\n";
            rows.push_back({{"n", c2.index},
                            {"nu", c2.nu},
                            {"claim2",
                             {{"sup_A", c2.sup_A},
                              {"sup_B", c2.sup_B},
                              {"sup_II", c2.sup_II},
                              {"bound_A", c2.bound_A},
                              {"bound_B", c2.bound_B},
                              {"derived_bound_B", c2.derived_bound_B},
                              {"vorticity_l1", c2.vorticity_l1},
                              {"pass", c2.pass}}},
                            {"claim1",
                             {{"min_value", c1.min_value},
                              {"l1", c1.l1},
                              {"l1_nonincreasing", c1.l1_nonincreasing},
                              {"piece1", c1.piece1},
                              {"piece1_bound", c1.piece1_bound},
                              {"piece2", c1.piece2},
                              {"piece2_bound", c1.piece2_bound},
                              {"pass", c1.pass}}}});
        }
        write("heat.csv", csv);
        const json j{{"members", rows}, {"criteria", criteria_json(r.criteria)}};
        write("heat.json", j.dump(2) + "\n");
    });
}

Summary Lab::report() {
    Summary s;
    stage("report", [&] {
        const std::pair<const char*, const char*> inputs[] = {{"kernels.json", "kernels"},
                                                              {"simulate.json", "simulate"},
                                                              {"diagnostics.json", "diagnose"},
                                                              {"verify.json", "verify"},
                                                              {"heat.json", "heat"}};
        for (const auto& [file, producer] : inputs) {
            const fs::path p = out_ / file;
            if (!fs::exists(p))
                throw Error(std::string("missing input ") + p.string() + "; it is produced by the " + producer +
                            " stage");
            const json j = json::parse(io::read_file(p));
            for (const auto& c : j.at("criteria")) s.criteria.push_back(criterion_from_json(c));
        }
        std::sort(s.criteria.begin(), s.criteria.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        s.all_pass = s.criteria.size() == 11 &&
                     std::all_of(s.criteria.begin(), s.criteria.end(), [](const auto& c) { return c.pass; });
        const json j{{"schema_version", kSummarySchema},
                     {"config_hash", config_hash(cfg_)},
                     {"all_pass", s.all_pass},
                     {"criteria", criteria_json(s.criteria)}};
        write("summary.json", j.dump(2) + "\n");
    });
    return s;
}

Summary Lab::run() {
    simulate();
    kernels();
    diagnose();
    verify();
    heat();
    return report();
}

}  // namespace vvlab::lab
