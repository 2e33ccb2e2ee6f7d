#include "vvlab/bessel.hpp"

#include <cmath>
#include <numbers>

#include "vvlab/errors.hpp"

namespace vvlab {

namespace {

constexpr double kSeriesLimit = 5.0;
constexpr double kAsymptoticLimit = 25.0;

double series_j(int order, double x) {
    const double h = 0.5 * x;
    const double q = -h * h;
    double term = (order == 0) ? 1.0 : h;
    double sum = term;
    for (int k = 1; k < 60; ++k) {
        term *= q / (k * static_cast<double>(k + order));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// Normalized backward recurrence; returns J_0 and J_1 together.
void miller_j01(double x, double& j0, double& j1) {
    const int start = 2 * ((static_cast<int>(x) + 40) / 2);
    double next = 0.0;
    double cur = 1e-30;
    double norm = 0.0;
    double b0 = 0.0;
    double b1 = 0.0;
    for (int k = start; k >= 1; --k) {
        const double prev = (2.0 * k / x) * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalized J_{k-1}.
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
        if (k - 1 == 1) b1 = cur;
        if (k - 1 == 0) b0 = cur;
        if (std::abs(cur) > 1e250) {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            b1 *= 1e-250;
        }
    }
    norm += b0;
    j0 = b0 / norm;
    j1 = b1 / norm;
}

double asymptotic_j(int order, double x) {
    const double mu = 4.0 * order * order;
    double p = 0.0;
    double q = 0.0;
    double a = 1.0;
    double xpow = 1.0;
    double last = INFINITY;
    for (int k = 0; k < 200; ++k) {
        if (k > 0) {
            a *= (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k);
            xpow *= x;
        }
        const double term = a / xpow;
        if (std::abs(term) > last) break;
        last = std::abs(term);
        const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0)
            p += sign * term;
        else
            q += sign * term;
        if (std::abs(term) < 1e-17) break;
    }
    // chi = x - phase with phase = (2 order + 1) pi / 4, expanded to keep sin/cos on exact x.
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double r = std::numbers::sqrt2 / 2.0;
    const double cos_phase = (order == 0) ? r : -r;
    const double sin_phase = r;
    const double cos_chi = c * cos_phase + s * sin_phase;
    const double sin_chi = s * cos_phase - c * sin_phase;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

double j_positive(int order, double x) {
    if (x < kSeriesLimit) return series_j(order, x);
    if (x < kAsymptoticLimit) {
        double j0 = 0.0;
        double j1 = 0.0;
        miller_j01(x, j0, j1);
        return order == 0 ? j0 : j1;
    }
    return asymptotic_j(order, x);
}

}  // namespace

double bessel_j0(double x) { return j_positive(0, std::abs(x)); }

double bessel_j1(double x) { return x < 0.0 ? -j_positive(1, -x) : j_positive(1, x); }

std::vector<double> bessel_j1_zeros(int m) {
    if (m < 1) throw ParameterError("bessel_j1_zeros needs m >= 1");
    std::vector<double> zeros;
    zeros.reserve(m);
    for (int k = 1; k <= m; ++k) {
        const double beta = (k + 0.25) * std::numbers::pi;
        const double guess = beta - 3.0 / (8.0 * beta);
        double lo = guess - 0.5;
        double hi = guess + 0.5;
        double flo = bessel_j1(lo);
        double x = guess;
        for (int iter = 0; iter < 200; ++iter) {
            const double f = bessel_j1(x);
            if (f == 0.0) break;
            if ((f < 0.0) == (flo < 0.0)) {
                lo = x;
                flo = f;
            } else {
                hi = x;
            }
            const double df = bessel_j0(x) - f / x;
            double step = f / df;
            double next = x - step;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - x) < 1e-15 * x || hi - lo < 1e-15 * x) {
                x = next;
                break;
            }
            x = next;
        }
        zeros.push_back(x);
    }
    return zeros;
}

double scaled_bessel_i(int order, double z) {
    if (order != 0 && order != 1) throw ParameterError("scaled_bessel_i supports orders 0 and 1");
    if (z < 0.0) throw DomainError("scaled_bessel_i needs z >= 0");
    if (z < kAsymptoticLimit) {
        const double h = 0.5 * z;
        const double q = h * h;
        double term = (order == 0) ? 1.0 : h;
        double sum = term;
        for (int k = 1; k < 200; ++k) {
            term *= q / (k * static_cast<double>(k + order));
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum * std::exp(-z);
    }
    const double mu = 4.0 * order * order;
    double a = 1.0;
    double sum = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        a *= -(mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * z);
        if (std::abs(a) > last) break;
        last = std::abs(a);
        sum += a;
        if (std::abs(a) < 1e-17) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

}  // namespace vvlab
