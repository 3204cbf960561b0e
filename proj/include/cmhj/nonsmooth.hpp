#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cmhj/grid_function.hpp"
#include "cmhj/report.hpp"

namespace cmhj {

/// Clarke generalized gradient of a 1-D Lipschitz function: an interval.
struct ClarkeInterval {
    double lo_slope = 0.0;
    double hi_slope = 0.0;

    bool contains(double s, double tol = 0.0) const { return s >= lo_slope - tol && s <= hi_slope + tol; }
    double width() const { return hi_slope - lo_slope; }
    double mid() const { return 0.5 * (lo_slope + hi_slope); }
};

/// Widening applied to every Clarke interval of f.
inline double clarke_tolerance(const GridFunction& f) { return 2.0 * f.lip / f.n; }

/// Hull of the limiting slopes at x: both adjacent cells at a node, the
/// containing cell elsewhere; widened by 2 lip / n. A Hermite grid function is
/// C^1 inside [lo, hi] away from kinked cells, so there the hull is the single
/// derivative value; at a cell kink it spans the two tangent slopes.
inline ClarkeInterval clarke_subgradient(const GridFunction& f, double x) {
    const double tol = clarke_tolerance(f);
    if (f.hermite() && x > f.lo && x < f.hi) {
        const int c = std::min(f.cell_of(x), f.n - 2);
        if (f.kinked(c) && std::abs(x - f.kink(c)) <= 1e-9 * f.dx()) {
            const double a = f.slopes[c], b = f.slopes[c + 1];
            return ClarkeInterval{std::min(a, b) - tol, std::max(a, b) + tol};
        }
        const double d = f.derivative_in_cell(c, x);
        return ClarkeInterval{d - tol, d + tol};
    }
    const double u = (x - f.lo) / f.dx();
    const double j = std::round(u);
    double a, b;
    if (std::abs(u - j) <= 1e-9 * std::max(1.0, std::abs(u))) {
        const int node = static_cast<int>(j);
        a = f.slope(node - 1);
        b = f.slope(node);
    } else {
        const int cell = static_cast<int>(std::floor(u));
        a = b = f.slope(cell);
    }
    return ClarkeInterval{std::min(a, b) - tol, std::max(a, b) + tol};
}

/// Lebourg mean value theorem: some z in (x, y) has f(y) - f(x) in
/// <df(z), y - x>. Scans all nodes in (x, y) and a uniform sample of 1000 points.
inline CheckReport mean_value_check(const GridFunction& f, double x, double y) {
    CheckReport r;
    r.name = "mean_value";
    const double d = f(y) - f(x);
    const double a = std::min(x, y), b = std::max(x, y);
    double best = std::numeric_limits<double>::infinity();
    double best_z = a;
    auto test = [&](double z) {
        if (!(z > a && z < b)) return;
        const ClarkeInterval c = clarke_subgradient(f, z);
        const double lo = std::min(c.lo_slope * (y - x), c.hi_slope * (y - x));
        const double hi = std::max(c.lo_slope * (y - x), c.hi_slope * (y - x));
        const double miss = d < lo ? lo - d : (d > hi ? d - hi : 0.0);
        if (miss < best) {
            best = miss;
            best_z = z;
        }
    };
    const int i0 = static_cast<int>(std::ceil((a - f.lo) / f.dx()));
    const int i1 = static_cast<int>(std::floor((b - f.lo) / f.dx()));
    for (int i = i0; i <= i1; ++i) test(f.lo + i * f.dx());
    for (int k = 1; k < 1000; ++k) test(a + (b - a) * k / 1000.0);
    r.value = best;
    r.threshold = 1e-12 * (1.0 + std::abs(d));
    r.pass = best <= r.threshold;
    r.samples = 1;
    r.detail = "z=" + std::to_string(best_z);
    return r;
}

}  // namespace cmhj
