#pragma once

// Piecewise-linear relaxations of the occupation indicator 1_{x < gamma_th}
// and the tail indicator 1_{x > w}. Estimating with these changes the target
// quantity; the half-widths are fixed constants, not tolerance-adaptive.

namespace occis {

struct SmoothingParams {
    double c = 0.5;    // half-width of the tail ramp (time units)
    double d = 0.125;  // half-width of the occupation ramp (units of h)
};

/// Smoothed occupation indicator: 1 below gamma_th - d, 0 above gamma_th + d,
/// linear ramp in between. Nonincreasing, Lipschitz constant 1/(2d).
double f_smooth(double x, double gamma_th, double d);

/// Smoothed tail indicator: 0 below w - c, 1 above w + c, linear ramp in
/// between. Nondecreasing, Lipschitz constant 1/(2c).
double g_smooth(double x, double w, double c);

}  // namespace occis
