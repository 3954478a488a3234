#pragma once

#include <cmath>

namespace mortboost::detail {

/// d log(d/m) - (d - m), with 0 log 0 = 0. Near d = m the direct form
/// cancels badly at large counts, so it switches to the series
/// m sum_{n>=2} (-r)^n / (n (n - 1)) with r = d/m - 1.
inline double unit_deviance(double d, double m) {
    if (!(d > 0.0)) {
        return m;
    }
    const double r = (d - m) / m;
    if (std::abs(r) < 1e-2) {
        double sum = 0.0;
        double power = -r;
        for (int n = 2; n <= 12; ++n) {
            power *= -r;
            sum += power / (n * (n - 1.0));
        }
        return m * sum;
    }
    return d * std::log(d / m) - (d - m);
}

} // namespace mortboost::detail
