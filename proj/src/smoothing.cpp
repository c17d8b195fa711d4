#include "occis/smoothing.hpp"

namespace occis {

double f_smooth(double x, double gamma_th, double d) {
    double u = x - gamma_th;
    if (u >= d) return 0.0;
    if (u <= -d) return 1.0;
    return 1.0 - (0.5 + u / (2.0 * d));
}

double g_smooth(double x, double w, double c) {
    if (x <= w - c) return 0.0;
    if (x >= w + c) return 1.0;
    return 0.5 + (x - w) / (2.0 * c);
}

}  // namespace occis
