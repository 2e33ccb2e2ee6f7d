#pragma once

#include <vector>

namespace vvlab {

/// Bessel functions of the first kind, orders 0 and 1, for real x.
double bessel_j0(double x);
double bessel_j1(double x);

/// First m positive zeros of J_1, increasing.
std::vector<double> bessel_j1_zeros(int m);

/// Exponentially scaled modified Bessel function exp(-z) I_order(z), order 0 or 1, z >= 0.
double scaled_bessel_i(int order, double z);

}  // namespace vvlab
