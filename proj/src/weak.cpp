#include "vvlab/weak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "vvlab/diagnostics.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/kernels.hpp"
#include "vvlab/quadrature.hpp"
#include "vvlab/tolerances.hpp"

namespace vvlab {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Node {
    Point x;
    double w;
};

/// Half-angle of the arc {|y| = r} inside B(c, R), centred on the direction of c.
/// Returns pi for a full circle and a negative value when the circle misses the ball.
double arc_half_angle(double r, double cn, double R) {
    if (r + cn <= R) return kPi;
    if (r <= 0.0 || std::abs(r - cn) >= R) return -1.0;
    const double cosb = (r * r + cn * cn - R * R) / (2.0 * r * cn);
    if (cosb >= 1.0) return -1.0;
    if (cosb <= -1.0) return kPi;
    return std::acos(cosb);
}

/// Cuts [lo, hi] at the breaks strictly inside; each segment gets a panel count proportional to
/// its length (at least one) times `scale`, with an `order`-point Gauss rule per panel (order 1
/// is the midpoint rule). Returns nodes; `weights` receives the radial weights.
std::vector<double> radial_nodes(double lo, double hi, const std::vector<double>& breaks, int base, int scale,
                                 int order, std::vector<double>& weights) {
    std::vector<double> cuts{lo};
    for (double b : breaks)
        if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> nodes;
    weights.clear();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        const int panels = scale * std::max(1, static_cast<int>(std::lround(base * len / (hi - lo))));
        const quad::Rule rule = quad::composite(cuts[i], cuts[i + 1], panels, order);
        nodes.insert(nodes.end(), rule.x.begin(), rule.x.end());
        weights.insert(weights.end(), rule.w.begin(), rule.w.end());
    }
    return nodes;
}

/// Nodes on the polar grid about the origin covering B(c, R): Gauss in r, midpoint along the arc
/// of each circle inside the ball. Area weights included.
std::vector<Node> ball_nodes(Point c, double R, const std::vector<double>& breaks, int radial, int angular, int scale,
                             int order) {
    const double cn = norm(c);
    const double lo = std::max(0.0, cn - R);
    const double hi = std::min(1.0, cn + R);
    std::vector<double> widths;
    const auto mids = radial_nodes(lo, hi, breaks, radial, scale, order, widths);
    const double theta_c = std::atan2(c.x2, c.x1);
    const int nt = angular * scale;
    std::vector<Node> out;
    out.reserve(mids.size() * nt);
    for (std::size_t i = 0; i < mids.size(); ++i) {
        const double r = mids[i];
        const double beta = arc_half_angle(r, cn, R);
        if (beta <= 0.0) continue;
        const double dth = 2.0 * beta / nt;
        for (int j = 0; j < nt; ++j) {
            const double th = theta_c - beta + (j + 0.5) * dth;
            out.push_back({polar(r, th), r * widths[i] * dth});
        }
    }
    return out;
}

/// Gauss in r times periodic trapezoid in theta on the annulus lo <= |x| <= hi.
std::vector<Node> annulus_nodes(double lo, double hi, const std::vector<double>& breaks, int radial, int angular,
                                int scale, int order) {
    std::vector<Node> out;
    if (!(hi > lo)) return out;
    std::vector<double> widths;
    const auto mids = radial_nodes(lo, hi, breaks, radial, scale, order, widths);
    const int nt = angular * scale;
    const double dth = 2.0 * kPi / nt;
    out.reserve(mids.size() * nt);
    for (std::size_t i = 0; i < mids.size(); ++i)
        for (int j = 0; j < nt; ++j) out.push_back({polar(mids[i], (j + 0.5) * dth), mids[i] * widths[i] * dth});
    return out;
}

struct TimeRule {
    std::vector<double> t;
    double dt = 0.0;
};

TimeRule time_midpoints(const TestFunction& phi, int n) {
    TimeRule rule;
    rule.dt = (phi.t1() - phi.t0()) / n;
    for (int m = 0; m < n; ++m) rule.t.push_back(phi.t0() + (m + 0.5) * rule.dt);
    return rule;
}

/// int g hat_j and int g' hat_j for the hat functions of the sample times.
void hat_weights(std::span<const double> times, const TestFunction& phi, std::vector<double>& cg,
                 std::vector<double>& cdg) {
    const std::size_t J = times.size();
    cg.assign(J, 0.0);
    cdg.assign(J, 0.0);
    quad::AdaptiveOptions topt;
    topt.abs_tol = 1e-15;
    topt.rel_tol = 1e-12;
    topt.relative_to_magnitude = true;
    for (std::size_t j = 0; j + 1 < J; ++j) {
        const double a = std::max(times[j], phi.t0());
        const double b = std::min(times[j + 1], phi.t1());
        if (!(b > a)) continue;
        const double t0 = times[j];
        const double t1 = times[j + 1];
        const double dt = t1 - t0;
        cg[j] += quad::adaptive([&](double t) { return phi.time_factor(t) * (t1 - t) / dt; }, a, b, topt);
        cg[j + 1] += quad::adaptive([&](double t) { return phi.time_factor(t) * (t - t0) / dt; }, a, b, topt);
        cdg[j] += quad::adaptive([&](double t) { return phi.time_derivative(t) * (t1 - t) / dt; }, a, b, topt);
        cdg[j + 1] += quad::adaptive([&](double t) { return phi.time_derivative(t) * (t - t0) / dt; }, a, b, topt);
    }
}

double contract(const Mat2& m, Vec2 u) {
    return m.a11 * u.x1 * u.x1 + (m.a12 + m.a21) * u.x1 * u.x2 + m.a22 * u.x2 * u.x2;
}

Mat2 spatial_gradient(const TestFunction& phi, Point x) {
    const Sym2 h = phi.spatial_hessian(x);
    return {-h.h12, -h.h22, h.h11, h.h12};
}

/// Spatial pieces of the velocity residual for one field: int perp(grad psi) . u and
/// int grad(perp grad psi) : u (x) u, with their absolute counterparts.
struct VelocitySpatial {
    double linear = 0.0;
    double linear_abs = 0.0;
    double quadratic = 0.0;
    double quadratic_abs = 0.0;
};

VelocitySpatial velocity_spatial(const std::vector<Node>& nodes, const TestFunction& phi,
                                 const std::function<Vec2(Point)>& u) {
    VelocitySpatial s;
    for (const Node& n : nodes) {
        const Vec2 v = u(n.x);
        const double a = dot(perp(phi.spatial_grad(n.x)), v);
        const double b = contract(spatial_gradient(phi, n.x), v);
        s.linear += n.w * a;
        s.linear_abs += n.w * std::abs(a);
        s.quadratic += n.w * b;
        s.quadratic_abs += n.w * std::abs(b);
    }
    return s;
}

// The near part shrinks like delta for line-like densities and like delta^2 to delta^3 for
// bounded ones; orders outside this window mean the schedule is not yet asymptotic.
constexpr double kMinOrder = 1.0;
constexpr double kMaxOrder = 4.0;

void gauss_panels(const quad::Rule& base, double lo, double hi, int panels, std::vector<double>& xs,
                  std::vector<double>& ws) {
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * h;
        for (std::size_t i = 0; i < base.size(); ++i) {
            xs.push_back(mid + 0.5 * h * base.x[i]);
            ws.push_back(0.5 * h * base.w[i]);
        }
    }
}

double rho_delta(double s, double delta) { return smooth_step(2.0 * s / delta - 1.0).v; }

/// Evaluation counter shared by the double integrals of one residual.
struct Budget {
    std::size_t used = 0;
    std::size_t cap = 0;
    void spend(std::size_t n) {
        used += n;
        if (used > cap) {
            throw BudgetError("kernel evaluation budget of " + std::to_string(cap) + " exceeded");
        }
    }
};

struct SpatialSplit {
    std::array<double, kDeltaSchedule.size()> far{};
    std::array<double, kDeltaSchedule.size()> near{};
    double magnitude = 0.0;
};

/// int int H^psi(x, y) chi w(x) chi w(y) dx dy split by rho_delta, for every delta of the schedule.
/// Outer x on a polar midpoint grid over supp(chi w); inner y along rays from x, restricted to
/// the ball supp psi when x lies outside it.
SpatialSplit h_double_integral(const ScalarField2D& omega, const TestFunction& phi, const Cutoff& chi,
                               const WeakQuadrature& q, Budget& budget) {
    SpatialSplit out;
    const double ra = omega.r_min;
    const double rb = std::min(omega.r_max, chi.a_out());
    if (!(rb > ra)) return out;

    std::vector<double> circles{ra, rb};
    for (double b : omega.breaks)
        if (b > ra && b < rb) circles.push_back(b);
    if (chi.a_in() > ra && chi.a_in() < rb) circles.push_back(chi.a_in());
    std::vector<double> outer_breaks(circles.begin() + 2, circles.end());

    const Point c = phi.center();
    const double R = phi.radius();
    const auto chiw = [&](Point y) {
        const double w = omega.eval(y);
        return w == 0.0 ? 0.0 : chi.value(y) * w;
    };

    const auto& base = quad::gauss_legendre(q.ray_order);
    auto ray_rule = [&](double lo, double hi, std::vector<double>& xs, std::vector<double>& ws) {
        gauss_panels(base, lo, hi, q.ray_panels, xs, ws);
    };
    auto angle_rule = [&](double lo, double hi, std::vector<double>& xs, std::vector<double>& ws) {
        const int panels = std::max(q.ray_panels, static_cast<int>(std::ceil((hi - lo) / q.max_angle_panel)));
        gauss_panels(base, lo, hi, panels, xs, ws);
    };

    const int scale = q.scale();
    const auto outer = annulus_nodes(ra, rb, outer_breaks, q.radial_panels, 4 * q.angular_nodes, scale, q.radial_order);
    std::vector<double> alphas, alpha_w, ss, sw;
    for (const Node& on : outer) {
        const Point x = on.x;
        const double wx = chiw(x);
        if (wx == 0.0) continue;
        const Vec2 gx = phi.spatial_grad(x);
        const bool inside = norm2(x - c) < R * R;
        const double rx = norm(x);

        // Angular range and its breaks (tangent directions to the circles).
        double a_lo, a_hi;
        if (inside) {
            const double base_dir = std::atan2(-x.x2, -x.x1);
            a_lo = base_dir - kPi;
            a_hi = base_dir + kPi;
        } else {
            const double dc = norm(c - x);
            const double half = std::asin(std::min(1.0, R / dc));
            const double dir = std::atan2(c.x2 - x.x2, c.x1 - x.x1);
            a_lo = dir - half;
            a_hi = dir + half;
        }
        std::vector<double> acuts{a_lo, a_hi};
        if (rx > 0.0) {
            const double to_origin = std::atan2(-x.x2, -x.x1);
            for (double cr : circles) {
                if (!(cr < rx)) continue;
                const double t = std::asin(cr / rx);
                for (double a : {to_origin - t, to_origin + t})
                    for (double shift : {-2.0 * kPi, 0.0, 2.0 * kPi})
                        if (a + shift > a_lo && a + shift < a_hi) acuts.push_back(a + shift);
            }
        }
        std::sort(acuts.begin(), acuts.end());
        alphas.clear();
        alpha_w.clear();
        for (std::size_t i = 0; i + 1 < acuts.size(); ++i)
            if (acuts[i + 1] > acuts[i]) angle_rule(acuts[i], acuts[i + 1], alphas, alpha_w);

        std::array<double, kDeltaSchedule.size()> near{}, far{};
        double mag = 0.0;
        std::size_t evals = 0;
        for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
            const Vec2 e{std::cos(alphas[ia]), std::sin(alphas[ia])};
            const double b = dot(x, e);
            const double c0 = rx * rx;
            const double s_exit = -b + std::sqrt(std::max(0.0, b * b - c0 + rb * rb));
            if (!(s_exit > 0.0)) continue;
            std::vector<double> cuts{0.0, s_exit};
            for (double cr : circles) {
                const double disc = b * b - c0 + cr * cr;
                if (disc <= 0.0) continue;
                const double root = std::sqrt(disc);
                for (double s : {-b - root, -b + root})
                    if (s > 0.0 && s < s_exit) cuts.push_back(s);
            }
            // Crossings with the ball boundary.
            const Vec2 xc = x - c;
            const double bc = dot(xc, e);
            const double discb = bc * bc - norm2(xc) + R * R;
            if (discb > 0.0) {
                const double root = std::sqrt(discb);
                for (double s : {-bc - root, -bc + root})
                    if (s > 0.0 && s < s_exit) cuts.push_back(s);
            }
            for (double d : kDeltaSchedule)
                for (double s : {0.5 * d, d})
                    if (s < s_exit) cuts.push_back(s);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

            ss.clear();
            sw.clear();
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const double lo = cuts[i];
                const double hi = cuts[i + 1];
                const Point ym = x + (0.5 * (lo + hi)) * e;
                const double rm = norm(ym);
                if (rm < ra || rm > rb) continue;
                if (!inside && norm2(ym - c) >= R * R) continue;
                ray_rule(lo, hi, ss, sw);
            }
            for (std::size_t is = 0; is < ss.size(); ++is) {
                const double s = ss[is];
                const Point y = x + s * e;
                const double wy = chiw(y);
                if (wy == 0.0) continue;
                const Vec2 gy = phi.spatial_grad(y);
                if (!inside && gy.x1 == 0.0 && gy.x2 == 0.0) continue;
                ++evals;
                const double h = aux_kernel(x, y, gx, gy) * wy * s * sw[is] * alpha_w[ia];
                mag += std::abs(h);
                for (std::size_t k = 0; k < kDeltaSchedule.size(); ++k) {
                    const double rho = rho_delta(s, kDeltaSchedule[k]);
                    near[k] += rho * h;
                    far[k] += (1.0 - rho) * h;
                }
            }
        }
        budget.spend(evals);
        const double W = on.w * wx;
        for (std::size_t k = 0; k < kDeltaSchedule.size(); ++k) {
            out.near[k] += W * near[k];
            out.far[k] += W * far[k];
        }
        out.magnitude += std::abs(W) * mag;
    }
    return out;
}

/// Gauss nodes in r times trapezoid in theta on supp((1 - chi) w), weights include (1 - chi) w.
std::vector<Node> outer_part_nodes(const ScalarField2D& omega, const Cutoff& chi, const WeakQuadrature& q) {
    std::vector<Node> out;
    const double lo = std::max(chi.a_in(), omega.r_min);
    const double hi = std::min(1.0, omega.r_max);
    if (!(hi > lo)) return out;
    const int scale = q.scale();
    std::vector<double> breaks = omega.breaks;
    breaks.push_back(chi.a_out());
    const quad::Rule ry = quad::composite(lo, hi, breaks, q.ray_panels * scale, q.ray_order);
    const int na = 4 * q.angular_nodes * scale;
    for (std::size_t i = 0; i < ry.size(); ++i) {
        const double r = ry.x[i];
        const double wr = 1.0 - chi.value(r);
        for (int j = 0; j < na; ++j) {
            const Point y = polar(r, 2.0 * kPi * (j + 0.5) / na);
            const double w = omega.eval(y) * wr;
            if (w != 0.0) out.push_back({y, w * r * ry.w[i] * 2.0 * kPi / na});
        }
    }
    return out;
}

struct FarTerm {
    double value = 0.0;
    double magnitude = 0.0;
};

/// int int K(x, y) (1 - chi(y)) chi(x) . grad psi(x) w(x) w(y): x over supp psi, y over
/// supp((1 - chi) w).
FarTerm far_term(const ScalarField2D& omega, const TestFunction& phi, const Cutoff& chi, const WeakQuadrature& q,
                 Budget& budget) {
    FarTerm out;
    const auto ynodes = outer_part_nodes(omega, chi, q);
    if (ynodes.empty()) return out;
    const auto xnodes = ball_nodes(phi.center(), phi.radius(), omega.breaks, q.radial_panels, q.angular_nodes,
                                   q.scale(), q.radial_order);
    for (const Node& xn : xnodes) {
        const double wx = omega.eval(xn.x) * chi.value(xn.x);
        if (wx == 0.0) continue;
        const Vec2 g = phi.spatial_grad(xn.x);
        if (g.x1 == 0.0 && g.x2 == 0.0) continue;
        budget.spend(ynodes.size());
        double sum = 0.0, mag = 0.0;
        for (const Node& yn : ynodes) {
            const double v = dot(biot_savart_kernel(xn.x, yn.x), g) * yn.w;
            sum += v;
            mag += std::abs(v);
        }
        out.value += xn.w * wx * sum;
        out.magnitude += std::abs(xn.w * wx) * mag;
    }
    return out;
}

struct SampleTerms {
    double pairing = 0.0;
    double pairing_abs = 0.0;
    SpatialSplit split;
    FarTerm far;
};

SampleTerms sample_terms(const ScalarField2D& omega, const TestFunction& phi, const Cutoff& chi,
                         const WeakQuadrature& q, Budget& budget) {
    SampleTerms t;
    const auto nodes = ball_nodes(phi.center(), phi.radius(), omega.breaks, q.radial_panels, q.angular_nodes,
                                  q.scale(), q.radial_order);
    for (const Node& n : nodes) {
        const double v = phi.spatial(n.x) * omega.eval(n.x);
        t.pairing += n.w * v;
        t.pairing_abs += n.w * std::abs(v);
    }
    t.split = h_double_integral(omega, phi, chi, q, budget);
    t.far = far_term(omega, phi, chi, q, budget);
    return t;
}

/// Radial vorticity: the kernel integrals v(x) = int K(x, y) m(|x - y|) f(|y|) dy are rotation
/// equivariant, so they are tabulated once per radius at x = (r, 0) as (e_r, e_theta) components
/// and rotated onto the outer nodes. The H double integral equals int chi w grad psi . v for
/// v built from chi w, by the x <-> y symmetry of its weight.
SampleTerms sample_terms_radial(const RadialProfile& omega, const TestFunction& phi, const Cutoff& chi,
                                const WeakQuadrature& q, Budget& budget) {
    SampleTerms t;
    const ScalarField2D field = omega.as_field();
    const Point c = phi.center();
    const double cn = norm(c);
    const double R = phi.radius();
    const int scale = q.scale();
    std::vector<double> widths;
    const auto radii =
        radial_nodes(std::max(0.0, cn - R), std::min(1.0, cn + R), omega.breaks, q.radial_panels, scale,
                     q.radial_order, widths);

    const double ra = omega.r_min;
    const double rb = std::min(omega.r_max, chi.a_out());
    std::vector<double> circles{ra, rb};
    for (double b : omega.breaks)
        if (b > ra && b < rb) circles.push_back(b);
    if (chi.a_in() > ra && chi.a_in() < rb) circles.push_back(chi.a_in());
    const auto chiw = [&](double r) {
        const double w = omega(r);
        return w == 0.0 ? 0.0 : chi.value(r) * w;
    };
    const auto ynodes = outer_part_nodes(field, chi, q);
    const std::size_t nd = kDeltaSchedule.size();

    const auto& base = quad::gauss_legendre(q.ray_order);
    auto ray_rule = [&](double lo, double hi, std::vector<double>& xs, std::vector<double>& ws) {
        gauss_panels(base, lo, hi, q.ray_panels, xs, ws);
    };
    auto angle_rule = [&](double lo, double hi, std::vector<double>& xs, std::vector<double>& ws) {
        const int panels = std::max(q.ray_panels, static_cast<int>(std::ceil((hi - lo) / q.max_angle_panel)));
        gauss_panels(base, lo, hi, panels, xs, ws);
    };

    std::vector<double> alphas, alpha_w, ss, sw;
    const int nt = q.angular_nodes * scale;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double r = radii[i];
        const double beta = arc_half_angle(r, cn, R);
        if (beta <= 0.0) continue;
        const double wx = chiw(r);
        const Point x{r, 0.0};

        std::array<Vec2, kDeltaSchedule.size()> far{}, near{};
        double mag = 0.0;
        if (wx != 0.0 && rb > ra) {
            // Rays from x; alpha = pi points at the origin.
            std::vector<double> acuts{0.0, 2.0 * kPi};
            for (double cr : circles)
                if (cr < r) {
                    const double a = std::asin(cr / r);
                    acuts.push_back(kPi - a);
                    acuts.push_back(kPi + a);
                }
            std::sort(acuts.begin(), acuts.end());
            alphas.clear();
            alpha_w.clear();
            for (std::size_t k = 0; k + 1 < acuts.size(); ++k)
                if (acuts[k + 1] > acuts[k]) angle_rule(acuts[k], acuts[k + 1], alphas, alpha_w);
            std::size_t evals = 0;
            for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
                const Vec2 e{std::cos(alphas[ia]), std::sin(alphas[ia])};
                const double b = e.x1 * r;
                const double s_exit = -b + std::sqrt(std::max(0.0, b * b - r * r + rb * rb));
                if (!(s_exit > 0.0)) continue;
                std::vector<double> cuts{0.0, s_exit};
                for (double cr : circles) {
                    const double disc = b * b - r * r + cr * cr;
                    if (disc <= 0.0) continue;
                    const double root = std::sqrt(disc);
                    for (double sc : {-b - root, -b + root})
                        if (sc > 0.0 && sc < s_exit) cuts.push_back(sc);
                }
                for (double d : kDeltaSchedule)
                    for (double sc : {0.5 * d, d})
                        if (sc < s_exit) cuts.push_back(sc);
                std::sort(cuts.begin(), cuts.end());
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                ss.clear();
                sw.clear();
                for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
                    const double rm = norm(x + (0.5 * (cuts[k] + cuts[k + 1])) * e);
                    if (rm >= ra && rm <= rb) ray_rule(cuts[k], cuts[k + 1], ss, sw);
                }
                const Vec2 free = -(0.5 * std::numbers::inv_pi) * perp(e);
                for (std::size_t is = 0; is < ss.size(); ++is) {
                    const double sv = ss[is];
                    const Point y = x + sv * e;
                    const double wy = chiw(norm(y));
                    if (wy == 0.0) continue;
                    ++evals;
                    const Vec2 v = (wy * sw[is] * alpha_w[ia]) * (free + sv * biot_savart_image(x, y));
                    mag += norm(v);
                    for (std::size_t k = 0; k < nd; ++k) {
                        const double rho = rho_delta(sv, kDeltaSchedule[k]);
                        near[k] += rho * v;
                        far[k] += (1.0 - rho) * v;
                    }
                }
            }
            budget.spend(evals);
        }

        Vec2 vout;
        double vout_mag = 0.0;
        const double wox = omega(r) * chi.value(r);
        if (wox != 0.0 && !ynodes.empty()) {
            budget.spend(ynodes.size());
            for (const Node& yn : ynodes) {
                const Vec2 v = yn.w * biot_savart_kernel(x, yn.x);
                vout += v;
                vout_mag += norm(v);
            }
        }

        const double dth = 2.0 * beta / nt;
        const double theta_c = std::atan2(c.x2, c.x1);
        for (int j = 0; j < nt; ++j) {
            const double th = theta_c - beta + (j + 0.5) * dth;
            const Vec2 er{std::cos(th), std::sin(th)};
            const Vec2 et = perp(er);
            const Point xn = r * er;
            const double w = r * widths[i] * dth;
            const Vec2 g = phi.spatial_grad(xn);
            const double gr = dot(g, er);
            const double gt = dot(g, et);
            const double p = phi.spatial(xn) * omega(r);
            t.pairing += w * p;
            t.pairing_abs += w * std::abs(p);
            const double gn = norm(g);
            for (std::size_t k = 0; k < nd; ++k) {
                t.split.far[k] += w * wx * (gr * far[k].x1 + gt * far[k].x2);
                t.split.near[k] += w * wx * (gr * near[k].x1 + gt * near[k].x2);
            }
            t.split.magnitude += w * std::abs(wx) * gn * mag;
            t.far.value += w * wox * (gr * vout.x1 + gt * vout.x2);
            t.far.magnitude += w * std::abs(wox) * gn * vout_mag;
        }
    }
    return t;
}

double check_separation(const TestFunction& phi, const Cutoff& chi) {
    const double eta = chi.separation(phi.outer_radius());
    if (!(eta > 0.0)) {
        throw SeparationError("cutoff is not 1 on a neighborhood of the test function support (eta = " +
                              std::to_string(eta) + ")");
    }
    return eta;
}

/// Combines per-sample terms with time weights cdg (for d_t phi) and cg (for the bilinear terms).
VorticityResidual combine(const std::vector<SampleTerms>& terms, const std::vector<double>& cdg,
                          const std::vector<double>& cg) {
    VorticityResidual r;
    const std::size_t nd = kDeltaSchedule.size();
    r.splitting.deltas.assign(kDeltaSchedule.begin(), kDeltaSchedule.end());
    r.splitting.far.assign(nd, 0.0);
    r.splitting.near.assign(nd, 0.0);
    double h_mag = 0.0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const SampleTerms& t = terms[j];
        r.time_term += cdg[j] * t.pairing;
        r.far_term += cg[j] * t.far.value;
        for (std::size_t k = 0; k < nd; ++k) {
            r.splitting.far[k] += cg[j] * t.split.far[k];
            r.splitting.near[k] += cg[j] * t.split.near[k];
        }
        h_mag += std::abs(cg[j]) * t.split.magnitude;
        r.splitting.time_weight += std::abs(cg[j]);
        r.magnitude += std::abs(cdg[j]) * t.pairing_abs + std::abs(cg[j]) * (t.split.magnitude + t.far.magnitude);
    }
    extrapolate_splitting(r.splitting, tol::quadrature_target * h_mag);
    r.h_term = r.splitting.extrapolated;
    r.value = r.time_term + r.h_term + r.far_term;
    return r;
}

}  // namespace

DivFreeTestField::DivFreeTestField(TestFunction phi, std::uint64_t seed) : phi_(phi), seed_(seed) {}

Mat2 DivFreeTestField::gradient(double t, Point x) const {
    const Mat2 m = spatial_gradient(phi_, x);
    const double g = phi_.time_factor(t);
    return {g * m.a11, g * m.a12, g * m.a21, g * m.a22};
}

double DivFreeTestField::divergence(double t, Point x) const {
    const Mat2 m = gradient(t, x);
    return m.a11 + m.a22;
}

DivFreeTestField generate_test_field(std::uint64_t seed, Point support_center, double support_radius, double t_lo,
                                     double t_hi, double final_time) {
    if (!(support_radius > 0.0) || !(norm(support_center) + support_radius < 1.0)) {
        throw SupportError("spatial support disk must lie in the open unit disk");
    }
    if (!(t_lo > 0.0) || !(t_lo < t_hi) || !(t_hi < final_time)) {
        throw SupportError("time window must satisfy 0 < t_lo < t_hi < T");
    }
    std::mt19937_64 rng(seed);
    const double R = support_radius * (0.2 + 0.2 * uniform01(rng));
    const double dist = (support_radius - R) * std::sqrt(uniform01(rng));
    const double angle = 2.0 * kPi * uniform01(rng);
    const Point c = support_center + polar(dist, angle);
    const double span = t_hi - t_lo;
    const double t0 = t_lo + 0.1 * span * uniform01(rng);
    const double t1 = t_hi - 0.1 * span * uniform01(rng);
    TestFunction phi(c, R, t0, t1);
    phi.validate(final_time);
    return DivFreeTestField(phi, seed);
}

std::vector<DivFreeTestField> make_test_battery(std::size_t count, std::uint64_t first_seed, Point support_center,
                                                double support_radius, double t_lo, double t_hi, double final_time) {
    std::vector<DivFreeTestField> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(generate_test_field(first_seed + i, support_center, support_radius, t_lo, t_hi, final_time));
    return out;
}

ResidualValue velocity_weak_residual(const VectorField2D& u, const DivFreeTestField& field, const WeakQuadrature& q) {
    const TestFunction& phi = field.generator();
    std::vector<double> breaks = u.breaks;
    breaks.push_back(u.r_min);
    breaks.push_back(u.r_max);
    const auto nodes = ball_nodes(phi.center(), phi.radius(), breaks, q.radial_panels, q.angular_nodes, q.scale(), q.radial_order);
    const auto s = velocity_spatial(nodes, phi, [&](Point x) {
        const double r = norm(x);
        return (r < u.r_min || r > u.r_max) ? Vec2{} : u.eval(x);
    });
    const TimeRule tr = time_midpoints(phi, q.time_nodes * q.scale());
    double g = 0.0, g_abs = 0.0, dg = 0.0, dg_abs = 0.0;
    for (double t : tr.t) {
        g += phi.time_factor(t) * tr.dt;
        g_abs += std::abs(phi.time_factor(t)) * tr.dt;
        dg += phi.time_derivative(t) * tr.dt;
        dg_abs += std::abs(phi.time_derivative(t)) * tr.dt;
    }
    return {dg * s.linear + g * s.quadratic, dg_abs * s.linear_abs + g_abs * s.quadratic_abs};
}

ResidualValue velocity_weak_residual(const Trajectory& traj, const DivFreeTestField& field, const WeakQuadrature& q) {
    const TestFunction& phi = field.generator();
    if (traj.velocity.empty()) return {};
    phi.validate(traj.times.back());
    const auto nodes = ball_nodes(phi.center(), phi.radius(), {}, q.radial_panels, q.angular_nodes, q.scale(),
                                  q.radial_order);
    const auto& times = traj.times;
    const std::size_t J = times.size();
    std::vector<double> cg, cdg;
    hat_weights(times, phi, cg, cdg);

    // Per node: r, e_theta-weighted derivative terms of the test field.
    struct NodeData {
        double w, r, lin, quad;
    };
    std::vector<NodeData> nd;
    nd.reserve(nodes.size());
    for (const Node& n : nodes) {
        const double r = norm(n.x);
        if (r == 0.0) continue;
        const Vec2 e = perp(n.x) * (1.0 / r);
        nd.push_back({n.w, r, dot(perp(phi.spatial_grad(n.x)), e), contract(spatial_gradient(phi, n.x), e)});
    }
    auto linear = [&](std::size_t j, bool absolute) {
        double s = 0.0;
        for (const auto& n : nd) {
            const double v = n.lin * traj.velocity[j].at(n.r);
            s += n.w * (absolute ? std::abs(v) : v);
        }
        return s;
    };
    auto quadratic = [&](std::size_t j, std::size_t k, bool absolute) {
        double s = 0.0;
        for (const auto& n : nd) {
            const double v = n.quad * traj.velocity[j].at(n.r) * traj.velocity[k].at(n.r);
            s += n.w * (absolute ? std::abs(v) : v);
        }
        return s;
    };

    ResidualValue out;
    for (std::size_t j = 0; j < J; ++j) {
        if (cdg[j] == 0.0) continue;
        out.value += cdg[j] * linear(j, false);
        out.magnitude += std::abs(cdg[j]) * linear(j, true);
    }
    // u = (1 - l) u_j + l u_{j+1} on each interval; g times the quadratic weights in l, integrated exactly.
    quad::AdaptiveOptions topt;
    topt.abs_tol = 1e-15;
    topt.rel_tol = 1e-12;
    topt.relative_to_magnitude = true;
    for (std::size_t j = 0; j + 1 < J; ++j) {
        const double a = std::max(times[j], phi.t0());
        const double b = std::min(times[j + 1], phi.t1());
        if (!(b > a)) continue;
        const double t0 = times[j];
        const double dt = times[j + 1] - t0;
        auto lam = [&](double t) { return (t - t0) / dt; };
        const double w00 = quad::adaptive([&](double t) { return phi.time_factor(t) * std::pow(1.0 - lam(t), 2); }, a, b, topt);
        const double w01 = quad::adaptive([&](double t) { return phi.time_factor(t) * 2.0 * lam(t) * (1.0 - lam(t)); }, a, b, topt);
        const double w11 = quad::adaptive([&](double t) { return phi.time_factor(t) * lam(t) * lam(t); }, a, b, topt);
        out.value += w00 * quadratic(j, j, false) + w01 * quadratic(j, j + 1, false) + w11 * quadratic(j + 1, j + 1, false);
        out.magnitude += std::abs(w00) * quadratic(j, j, true) + std::abs(w01) * quadratic(j, j + 1, true) +
                         std::abs(w11) * quadratic(j + 1, j + 1, true);
    }
    return out;
}

void extrapolate_splitting(DeltaSplitting& s, double tolerance) {
    const std::size_t n = s.far.size();
    if (n < 3) throw ParameterError("extrapolation needs at least three deltas");
    const double d1 = s.far[n - 2] - s.far[n - 3];
    const double d2 = s.far[n - 1] - s.far[n - 2];
    s.observed_order = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(d2) <= tolerance) {
        s.fallback = true;
        s.extrapolated = s.far[n - 1];
        return;
    }
    const double ratio = d1 / d2;
    s.fallback = false;
    s.observed_order = ratio > 0.0 ? std::log2(ratio) : std::numeric_limits<double>::quiet_NaN();
    if (!(s.observed_order >= kMinOrder && s.observed_order <= kMaxOrder)) {
        throw QuadratureFailure("delta splitting did not converge: differences " + std::to_string(d1) + ", " +
                                std::to_string(d2) + " give observed order " + std::to_string(s.observed_order));
    }
    s.extrapolated = s.far[n - 1] + d2 / (ratio - 1.0);
}

VorticityResidual vorticity_interior_residual(const ScalarField2D& omega, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q) {
    const double eta = check_separation(phi, chi);
    Budget budget{0, q.max_kernel_evaluations};
    const TimeRule tr = time_midpoints(phi, q.time_nodes * q.scale());
    double g = 0.0, dg = 0.0;
    for (double t : tr.t) {
        g += phi.time_factor(t) * tr.dt;
        dg += phi.time_derivative(t) * tr.dt;
    }
    const std::vector<SampleTerms> terms{sample_terms(omega, phi, chi, q, budget)};
    auto r = combine(terms, {dg}, {g});
    r.eta = eta;
    r.kernel_evaluations = budget.used;
    return r;
}

VorticityResidual vorticity_interior_residual(const Trajectory& traj, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q) {
    const double eta = check_separation(phi, chi);
    if (traj.vorticity.empty()) {
        VorticityResidual r;
        r.eta = eta;
        r.splitting.deltas.assign(kDeltaSchedule.begin(), kDeltaSchedule.end());
        r.splitting.far.assign(kDeltaSchedule.size(), 0.0);
        r.splitting.near.assign(kDeltaSchedule.size(), 0.0);
        r.splitting.fallback = true;
        return r;
    }
    phi.validate(traj.times.back());
    std::vector<double> cg, cdg;
    hat_weights(traj.times, phi, cg, cdg);
    Budget budget{0, q.max_kernel_evaluations};
    std::vector<SampleTerms> terms(traj.time_count());
    for (std::size_t j = 0; j < terms.size(); ++j) {
        if (cg[j] == 0.0 && cdg[j] == 0.0) continue;
        terms[j] = sample_terms_radial(traj.vorticity[j].profile(), phi, chi, q, budget);
    }
    auto r = combine(terms, cdg, cg);
    r.eta = eta;
    r.kernel_evaluations = budget.used;
    return r;
}

VorticityResidual vorticity_interior_residual(const RadialProfile& omega, const TestFunction& phi, const Cutoff& chi,
                                              const WeakQuadrature& q) {
    const double eta = check_separation(phi, chi);
    Budget budget{0, q.max_kernel_evaluations};
    const TimeRule tr = time_midpoints(phi, q.time_nodes * q.scale());
    double g = 0.0, dg = 0.0;
    for (double t : tr.t) {
        g += phi.time_factor(t) * tr.dt;
        dg += phi.time_derivative(t) * tr.dt;
    }
    const std::vector<SampleTerms> terms{sample_terms_radial(omega, phi, chi, q, budget)};
    auto r = combine(terms, {dg}, {g});
    r.eta = eta;
    r.kernel_evaluations = budget.used;
    return r;
}

ConvergedResidual converge_residual(const std::function<ResidualValue(const WeakQuadrature&)>& eval,
                                    WeakQuadrature q, int max_level) {
    ResidualValue coarse = eval(q);
    while (true) {
        const WeakQuadrature fine_q = q.refined();
        const ResidualValue fine = eval(fine_q);
        ConvergedResidual out;
        out.value = fine.value;
        out.coarse = coarse.value;
        out.estimate = std::abs(fine.value - coarse.value);
        out.tolerance = tol::quadrature_target * fine.magnitude;
        out.level = fine_q.level;
        if (out.estimate <= out.tolerance) return out;
        if (fine_q.level >= max_level) {
            throw QuadratureFailure("residual quadrature did not converge by level " + std::to_string(max_level) +
                                    " (estimate " + std::to_string(out.estimate) + ")");
        }
        q = fine_q;
        coarse = fine;
    }
}

double sampled_aux_sup(const TestFunction& phi, double outer_radius, std::uint64_t seed, int pairs) {
    std::mt19937_64 rng(seed);
    const Point c = phi.center();
    const double R = phi.radius();
    auto in_ball = [&](Point center, double radius) {
        const double r = radius * std::sqrt(uniform01(rng));
        return center + polar(r, 2.0 * kPi * uniform01(rng));
    };
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const Point x = in_ball(c, R);
        Point y;
        if (i % 2 == 0) {
            const double d = std::pow(10.0, -6.0 + 6.0 * uniform01(rng));
            y = x + polar(d, 2.0 * kPi * uniform01(rng));
        } else {
            y = in_ball({0.0, 0.0}, outer_radius);
        }
        if (norm(y) > outer_radius || norm2(x - y) < 1e-24) continue;
        best = std::max(best, std::abs(aux_kernel(x, y, phi.spatial_grad(x), phi.spatial_grad(y))));
    }
    return best;
}

std::vector<A1Check> a1_bound_check(const DeltaSplitting& s, const RadialProfile& omega, const TestFunction& phi,
                                    const Cutoff& chi) {
    const double M = sampled_aux_sup(phi, chi.a_out(), 7);
    RadialProfile chiw{[&](double r) { return chi.value(r) * omega(r); }, omega.r_min,
                       std::min(omega.r_max, chi.a_out()), omega.breaks};
    const auto f = sample(chiw, make_grid(RadialGrid::uniform(4096)), FieldKind::vorticity);
    const double l1 = l1_norm(f);
    const CompactSubdomain K(chi.a_out());
    std::vector<A1Check> out;
    for (std::size_t i = 0; i < s.deltas.size(); ++i) {
        A1Check c;
        c.delta = s.deltas[i];
        c.near = s.near[i];
        c.bound = s.time_weight * M * l1 * maximal_function(f, K, c.delta);
        c.pass = std::abs(c.near) <= c.bound;
        out.push_back(c);
    }
    return out;
}

Decomposition decompose_interior_boundary(const RadialField& omega, const Cutoff& chi, int k) {
    if (k < 2) throw ParameterError("mollification index must be at least 2, got " + std::to_string(k));
    const Mollifier zeta(k);
    const BoundaryCutoff rho(k);
    const RadialGrid& grid = *omega.grid;
    const std::size_t n = grid.size();

    RadialField fi{omega.grid, std::vector<double>(n), FieldKind::vorticity};
    RadialField fb{omega.grid, std::vector<double>(n), FieldKind::vorticity};
    for (std::size_t i = 0; i < n; ++i) {
        const double r = grid[i];
        const double base = rho.value(r) * omega.values[i];
        const double c = chi.value(r);
        fi.values[i] = c * base;
        fb.values[i] = (1.0 - c) * base;
    }

    const auto srule = quad::composite(0.0, zeta.radius(), 1, 16);
    const int na = 64;
    auto mollify = [&](const RadialField& f) {
        RadialField out{omega.grid, std::vector<double>(n, 0.0), FieldKind::vorticity};
        // Support of f in node indices, widened by the mollifier radius.
        std::size_t first = n, last = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (f.values[i] != 0.0) {
                first = std::min(first, i);
                last = i;
            }
        if (first == n) return out;
        const double lo = grid[first > 0 ? first - 1 : 0] - zeta.radius();
        const double hi = grid[std::min(last + 1, n - 1)] + zeta.radius();
        for (std::size_t i = 0; i < n; ++i) {
            const double r = grid[i];
            if (r < lo || r > hi) continue;
            double sum = 0.0;
            for (std::size_t is = 0; is < srule.size(); ++is) {
                const double s = srule.x[is];
                double ring = 0.0;
                for (int j = 0; j < na; ++j) {
                    const double a = 2.0 * kPi * (j + 0.5) / na;
                    ring += f.at(std::hypot(r + s * std::cos(a), s * std::sin(a)));
                }
                sum += srule.w[is] * s * zeta.scaled(s) * ring * (2.0 * kPi / na);
            }
            out.values[i] = sum;
        }
        return out;
    };
    return {k, mollify(fi), mollify(fb)};
}

std::array<double, 4> boundary_split_terms(const Decomposition& d, const TestFunction& phi) {
    const auto ui = velocity_from_vorticity_radial(d.interior);
    const auto ub = velocity_from_vorticity_radial(d.boundary);
    const auto nodes = ball_nodes(phi.center(), phi.radius(), {}, 64, 256, 1, 4);
    std::array<double, 4> out{};
    for (const Node& n : nodes) {
        const double r = norm(n.x);
        if (r == 0.0) continue;
        const double gth = dot(phi.spatial_grad(n.x), perp(n.x)) / r;
        const double wi = d.interior.at(r);
        const double wb = d.boundary.at(r);
        const double vi = ui.at(r) * gth;
        const double vb = ub.at(r) * gth;
        out[0] += n.w * vi * wi;
        out[1] += n.w * vb * wi;
        out[2] += n.w * vi * wb;
        out[3] += n.w * vb * wb;
    }
    return out;
}

}  // namespace vvlab
