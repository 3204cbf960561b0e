#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cmhj/errors.hpp"

namespace cmhj {

enum class Extrapolation { clamped_slope, constant };

inline const char* to_string(Extrapolation e) {
    return e == Extrapolation::constant ? "constant" : "clamped_slope";
}

/// Lipschitz function sampled on a uniform 1-D grid and extended outside
/// [lo, hi] by the extrapolation rule. Between nodes it is piecewise linear,
/// or, when node slopes are carried, the cubic Hermite interpolant, except in
/// kinked cells (an isolated slope jump, see find_kinks) where it is the pair
/// of node tangent lines meeting at the kink.
struct GridFunction {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;
    std::vector<double> values;
    std::vector<double> slopes;  // empty: piecewise linear
    double lip = 0.0;  // certified bound on |v'| (hence |v[i+1] - v[i]| <= lip * dx)
    Extrapolation extrapolation = Extrapolation::clamped_slope;
    std::vector<double> kinks;  // per cell: kink location, NaN when smooth (Hermite only)

    GridFunction() = default;
    GridFunction(double lo_, double hi_, std::vector<double> vals, double lip_ = -1.0,
                 Extrapolation ex = Extrapolation::clamped_slope, std::vector<double> node_slopes = {})
        : lo(lo_), hi(hi_), n(static_cast<int>(vals.size())), values(std::move(vals)),
          slopes(std::move(node_slopes)), extrapolation(ex) {
        if (n < 2 || !(hi > lo)) throw Error(ErrorKind::config, "grid needs n >= 2 and hi > lo");
        if (!slopes.empty() && static_cast<int>(slopes.size()) != n)
            throw Error(ErrorKind::config, "node slopes must match the node count");
        find_kinks();
        lip = std::max(lip_, interpolant_lip());
    }

    /// Samples f at the nodes; with df the node slopes are carried as well.
    static GridFunction sample(const std::function<double(double)>& f, double lo, double hi, int n,
                               double lip = -1.0, const std::function<double(double)>& df = nullptr) {
        if (n < 2 || !(hi > lo)) throw Error(ErrorKind::config, "grid needs n >= 2 and hi > lo");
        std::vector<double> v(n), d;
        for (int i = 0; i < n; ++i) v[i] = f(lo + (hi - lo) * i / (n - 1));
        if (df) {
            d.resize(n);
            for (int i = 0; i < n; ++i) d[i] = df(lo + (hi - lo) * i / (n - 1));
        }
        return GridFunction(lo, hi, std::move(v), lip, Extrapolation::clamped_slope, std::move(d));
    }

    bool hermite() const { return !slopes.empty(); }
    bool kinked(int cell) const { return !kinks.empty() && !std::isnan(kinks[cell]); }
    double kink(int cell) const { return kinks[cell]; }
    double dx() const { return (hi - lo) / (n - 1); }
    double node(int i) const { return lo + (hi - lo) * i / (n - 1); }
    double cell_slope(int i) const { return (values[i + 1] - values[i]) / dx(); }

    /// Slope used beyond the left (side < 0) or right end.
    double end_slope(int side) const {
        if (extrapolation == Extrapolation::constant) return 0.0;
        double s;
        if (hermite()) s = side < 0 ? slopes[0] : slopes[n - 1];
        else s = side < 0 ? cell_slope(0) : cell_slope(n - 2);
        return std::clamp(s, -lip, lip);
    }

    /// Secant slope of the (possibly virtual) cell i; i < 0 and i > n - 2 are
    /// the extrapolated half-lines.
    double slope(int i) const {
        if (i < 0) return end_slope(-1);
        if (i > n - 2) return end_slope(1);
        return cell_slope(i);
    }

    /// Cell index for x (virtual cells outside the grid).
    int cell_of(double x) const { return static_cast<int>(std::floor((x - lo) / dx())); }

    double operator()(double x) const {
        if (x <= lo) return values[0] + end_slope(-1) * (x - lo);
        if (x >= hi) return values[n - 1] + end_slope(1) * (x - hi);
        const double u = (x - lo) / dx();
        const int i = std::min(static_cast<int>(u), n - 2);
        const double s = u - i;
        if (!hermite()) return values[i] + s * (values[i + 1] - values[i]);
        if (kinked(i))
            return x <= kinks[i] ? values[i] + slopes[i] * (x - node(i)) : values[i + 1] + slopes[i + 1] * (x - node(i + 1));
        const double h = dx();
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        return h00 * values[i] + h10 * h * slopes[i] + h01 * values[i + 1] + h11 * h * slopes[i + 1];
    }

    /// Derivative inside cell `cell` at x (the cell's secant slope when piecewise linear).
    double derivative_in_cell(int cell, double x) const {
        if (cell < 0) return end_slope(-1);
        if (cell > n - 2) return end_slope(1);
        if (!hermite()) return cell_slope(cell);
        if (kinked(cell)) return x <= kinks[cell] ? slopes[cell] : slopes[cell + 1];
        const double h = dx();
        const double s = std::clamp((x - node(cell)) / h, 0.0, 1.0);
        const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
        const double d01 = -d00, d11 = 3 * s * s - 2 * s;
        return (d00 * values[cell] + d01 * values[cell + 1]) / h + d10 * slopes[cell] + d11 * slopes[cell + 1];
    }

    /// Bound on |v'|: secant slopes, or the exact maximum of the Hermite
    /// derivative (a quadratic per cell).
    double interpolant_lip() const {
        double m = 0.0;
        const double h = dx();
        for (int i = 0; i + 1 < n; ++i) {
            m = std::max(m, std::abs(values[i + 1] - values[i]) / h);
            if (!hermite()) continue;
            m = std::max({m, std::abs(slopes[i]), std::abs(slopes[i + 1])});
            if (kinked(i)) continue;
            // p'(s) = a s^2 + b s + c
            const double D = (values[i + 1] - values[i]) / h;
            const double a = -6 * D + 3 * slopes[i] + 3 * slopes[i + 1];
            const double b = 6 * D - 4 * slopes[i] - 2 * slopes[i + 1];
            if (a != 0.0) {
                const double sv = -b / (2 * a);
                if (sv > 0 && sv < 1) m = std::max(m, std::abs(derivative_in_cell(i, node(i) + sv * h)));
            }
        }
        return m;
    }

    /// A cell is kinked when its node-slope jump exceeds 4x the jumps of both
    /// neighbouring cells (a shock between the nodes) and the node tangent lines
    /// meet inside it. There the cubic would overshoot the kink by up to
    /// dx |jump| / 8; the tangent lines reproduce it.
    void find_kinks() {
        kinks.clear();
        if (!hermite() || n < 3) return;
        kinks.assign(n - 1, std::numeric_limits<double>::quiet_NaN());
        const double h = dx();
        double smax = 0.0;
        for (double d : slopes) smax = std::max(smax, std::abs(d));
        auto jump = [&](int i) { return std::abs(slopes[i + 1] - slopes[i]); };
        for (int i = 0; i + 1 < n; ++i) {
            const double J = jump(i);
            if (J <= 1e-6 * (1.0 + smax)) continue;
            const double nb = std::max(i > 0 ? jump(i - 1) : 0.0, i + 2 < n ? jump(i + 1) : 0.0);
            if (J <= 4.0 * nb) continue;
            const double D = (values[i + 1] - values[i]) / h;
            const double th = (D - slopes[i + 1]) / (slopes[i] - slopes[i + 1]);
            if (th >= 0.0 && th <= 1.0) kinks[i] = node(i) + th * h;
        }
    }

    double discrete_lip() const {
        double m = 0.0;
        for (int i = 0; i + 1 < n; ++i) m = std::max(m, std::abs(values[i + 1] - values[i]));
        return m / dx();
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    /// Checks the certified Lipschitz invariant.
    void validate() const {
        if (static_cast<int>(values.size()) != n) throw Error(ErrorKind::domain, "grid size mismatch");
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(values[i]) || (hermite() && !std::isfinite(slopes[i])))
                throw Error(ErrorKind::domain, "non-finite grid value");
        const double slack = 1e-12 * (1.0 + lip);
        for (int i = 0; i + 1 < n; ++i)
            if (std::abs(values[i + 1] - values[i]) > (lip + slack) * dx())
                throw Error(ErrorKind::domain, "grid values violate the certified Lipschitz constant");
    }

    /// Same nodes, new values (lip recomputed unless given).
    GridFunction with_values(std::vector<double> vals, double lip_ = -1.0, std::vector<double> sl = {}) const {
        return GridFunction(lo, hi, std::move(vals), lip_, extrapolation, std::move(sl));
    }

    /// Piecewise-linear copy (node slopes dropped).
    GridFunction linear() const { return GridFunction(lo, hi, values, -1.0, extrapolation); }

    /// Resample onto another uniform grid (piecewise linear result).
    GridFunction resample(double lo2, double hi2, int n2) const {
        std::vector<double> v(n2);
        for (int i = 0; i < n2; ++i) v[i] = (*this)(lo2 + (hi2 - lo2) * i / (n2 - 1));
        return GridFunction(lo2, hi2, std::move(v), -1.0, extrapolation);
    }
};

/// sup |f - g| over the nodes of f lying in [a, b].
inline double sup_diff(const GridFunction& f, const GridFunction& g, double a, double b) {
    double m = 0.0;
    for (int i = 0; i < f.n; ++i) {
        const double x = f.node(i);
        if (x < a - 1e-12 || x > b + 1e-12) continue;
        m = std::max(m, std::abs(f.values[i] - g(x)));
    }
    return m;
}

}  // namespace cmhj
