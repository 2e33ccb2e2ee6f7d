#include "vvlab/trajectory_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "vvlab/errors.hpp"
#include "vvlab/io.hpp"

namespace vvlab {

namespace {

constexpr char kMagic[8] = {'V', 'V', 'L', 'T', 'R', 'A', 'J', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& data, const std::string& name) : data_(data), name_(name) {}

    std::uint64_t bytes(int n) {
        if (pos_ + n > data_.size()) throw FormatError(name_ + ": truncated trajectory file");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    double f64() { return std::bit_cast<double>(bytes(8)); }
    bool done() const { return pos_ == data_.size(); }

private:
    const std::string& data_;
    std::string name_;
    std::size_t pos_ = 8;
};

Trajectory assemble(double nu, std::vector<double> radii, std::vector<double> times,
                    const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& w) {
    const GridPtr grid = make_grid(RadialGrid(std::move(radii)));
    Trajectory traj;
    traj.nu = nu;
    traj.times = std::move(times);
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        traj.velocity.push_back(RadialField{grid, u[j], FieldKind::swirl_velocity});
        traj.vorticity.push_back(RadialField{grid, w[j], FieldKind::vorticity});
    }
    return traj;
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,r,u_theta,omega\n";
    const RadialGrid& g = *traj.grid();
    for (std::size_t j = 0; j < traj.time_count(); ++j) {
        const std::string t = io::format_double(traj.times[j]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            out += t;
            out += ',';
            out += io::format_double(g[i]);
            out += ',';
            out += io::format_double(traj.velocity[j].values[i]);
            out += ',';
            out += io::format_double(traj.vorticity[j].values[i]);
            out += '\n';
        }
    }
    return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    io::write_atomic(path, trajectory_csv(traj));
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, double nu) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,r,u_theta,omega")
        throw FormatError(path.string() + ": expected header t,r,u_theta,omega");
    std::vector<double> times;
    std::vector<double> radii;
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> w;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        double v[4];
        std::size_t start = 0;
        for (int c = 0; c < 4; ++c) {
            const std::size_t end = (c < 3) ? line.find(',', start) : line.size();
            if (end == std::string::npos) throw FormatError(path.string() + ": row " + std::to_string(row) + " has too few columns");
            const auto res = std::from_chars(line.data() + start, line.data() + end, v[c]);
            if (res.ec != std::errc() || res.ptr != line.data() + end)
                throw FormatError(path.string() + ": bad number in row " + std::to_string(row));
            start = end + 1;
        }
        if (times.empty() || v[0] != times.back()) {
            times.push_back(v[0]);
            u.emplace_back();
            w.emplace_back();
        }
        if (times.size() == 1) radii.push_back(v[1]);
        else if (u.back().size() >= radii.size() || radii[u.back().size()] != v[1])
            throw FormatError(path.string() + ": radii differ between time blocks at row " + std::to_string(row));
        u.back().push_back(v[2]);
        w.back().push_back(v[3]);
    }
    if (times.empty()) throw FormatError(path.string() + ": no data rows");
    for (const auto& block : u)
        if (block.size() != radii.size()) throw FormatError(path.string() + ": incomplete time block");
    return assemble(nu, std::move(radii), std::move(times), u, w);
}

std::string trajectory_binary(const Trajectory& traj) {
    const RadialGrid& g = *traj.grid();
    std::string out(kMagic, kMagic + 8);
    put_u32(out, kTrajectoryFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(g.size()));
    put_u32(out, static_cast<std::uint32_t>(traj.time_count()));
    put_f64(out, traj.nu);
    for (double r : g.nodes()) put_f64(out, r);
    for (double t : traj.times) put_f64(out, t);
    for (const auto& f : traj.velocity)
        for (double v : f.values) put_f64(out, v);
    for (const auto& f : traj.vorticity)
        for (double v : f.values) put_f64(out, v);
    return out;
}

void write_trajectory_binary(const std::filesystem::path& path, const Trajectory& traj) {
    io::write_atomic(path, trajectory_binary(traj));
}

Trajectory read_trajectory_binary(const std::filesystem::path& path) {
    const std::string data = io::read_file(path);
    if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0)
        throw FormatError(path.string() + ": not a trajectory file (bad magic)");
    Reader rd(data, path.string());
    const std::uint32_t version = rd.u32();
    if (version != kTrajectoryFormatVersion)
        throw FormatError(path.string() + ": unsupported trajectory format version " + std::to_string(version));
    const std::uint32_t m = rd.u32();
    const std::uint32_t jn = rd.u32();
    const double nu = rd.f64();
    std::vector<double> radii(m);
    std::vector<double> times(jn);
    for (auto& r : radii) r = rd.f64();
    for (auto& t : times) t = rd.f64();
    std::vector<std::vector<double>> u(jn, std::vector<double>(m));
    std::vector<std::vector<double>> w(jn, std::vector<double>(m));
    for (auto& row : u)
        for (auto& v : row) v = rd.f64();
    for (auto& row : w)
        for (auto& v : row) v = rd.f64();
    if (!rd.done()) throw FormatError(path.string() + ": trailing bytes after payload");
    return assemble(nu, std::move(radii), std::move(times), u, w);
}

}  // namespace vvlab
