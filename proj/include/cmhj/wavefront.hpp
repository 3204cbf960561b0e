#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cmhj/contact_flow.hpp"
#include "cmhj/grid_function.hpp"
#include "cmhj/nonsmooth.hpp"
#include "cmhj/report.hpp"

namespace cmhj {

/// Smooth initial data with an explicit slope (used where v is analytic).
struct InitialJet {
    std::function<double(double)> value;
    std::function<double(double)> slope;
};

struct FrontSample {
    double t = 0.0;
    double x0 = 0.0;
    JetPoint<1> p;
    double dxdx0 = 1.0;
    int fold_flag = 0;  // 0 regular, 1 reversed orientation, 2 degenerate
};

inline constexpr double kFoldDegenerateTol = 1e-6;

inline int fold_flag_of(double dxdx0) {
    if (std::abs(dxdx0) < kFoldDegenerateTol) return 2;
    return dxdx0 < 0.0 ? 1 : 0;
}

/// Flows (x0, v'(x0), v(x0)) over [0, t] for every seed and time; the fold
/// indicator dx(t)/dx0 is a central difference with step 1e-4 (1 + |x0|).
inline std::vector<FrontSample> propagate_front(const HamiltonianSpec<1>& H, const InitialJet& v,
                                                const std::vector<double>& t_samples,
                                                const std::vector<double>& x0_grid, int steps = 0) {
    std::vector<FrontSample> out;
    out.reserve(t_samples.size() * x0_grid.size());
    auto shoot = [&](double t, double x0) {
        return flow_map(H, TimeInterval{0.0, t}, JetPoint<1>{{x0}, {v.slope(x0)}, v.value(x0)}, steps);
    };
    for (double t : t_samples) {
        for (double x0 : x0_grid) {
            FrontSample f;
            f.t = t;
            f.x0 = x0;
            f.p = shoot(t, x0);
            const double h = 1e-4 * (1.0 + std::abs(x0));
            f.dxdx0 = (shoot(t, x0 + h).x[0] - shoot(t, x0 - h).x[0]) / (2.0 * h);
            f.fold_flag = fold_flag_of(f.dxdx0);
            out.push_back(f);
        }
    }
    return out;
}

/// Seeds from a grid function: slope = Clarke midpoint, rejected (domain-error)
/// when the Clarke interval is wider than the discretization tolerance allows.
inline InitialJet initial_jet(const GridFunction& v) {
    return InitialJet{[v](double x) { return v(x); },
                      [v](double x) {
                          const ClarkeInterval c = clarke_subgradient(v, x);
                          if (c.width() > 2.0 * clarke_tolerance(v) + 1e-12)
                              throw Error(ErrorKind::domain, "seed at a kink needs an explicit slope selection");
                          return c.mid();
                      }};
}

/// Earliest t in (0, t_max] with min over seeds of dx/dx0 <= 0, bracketed by
/// bisection to `tol`. Returns +infinity if no fold occurs before t_max.
inline double first_fold_time(const HamiltonianSpec<1>& H, const InitialJet& v, const std::vector<double>& x0_grid,
                              double t_max, double tol = 1e-3, int steps = 0) {
    auto min_ind = [&](double t) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& f : propagate_front(H, v, {t}, x0_grid, steps)) m = std::min(m, f.dxdx0);
        return m;
    };
    if (min_ind(t_max) > 0.0) return std::numeric_limits<double>::infinity();
    double a = 0.0, b = t_max;
    while (b - a > tol) {
        const double m = 0.5 * (a + b);
        (min_ind(m) > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
}

/// Fraction of nodes of u (away from fold projections) whose graph point lies
/// within 2 cells of the front at the same time. Front samples must be ordered
/// by seed. Cells: dx horizontally, dx * max(1, lip) vertically.
inline CheckReport section_check(const std::vector<FrontSample>& front, const GridFunction& u) {
    const double dx = u.dx();
    const double dz = dx * std::max(1.0, u.lip);
    std::vector<double> folds;
    for (std::size_t k = 0; k + 1 < front.size(); ++k) {
        const bool a = front[k].dxdx0 > 0.0, b = front[k + 1].dxdx0 > 0.0;
        if (a != b || front[k].fold_flag == 2) folds.push_back(front[k].p.x[0]);
    }
    std::size_t tested = 0, hit = 0;
    for (int i = 0; i < u.n; ++i) {
        const double x = u.node(i);
        bool near_fold = false;
        for (double f : folds)
            if (std::abs(f - x) <= 2.0 * dx) near_fold = true;
        if (near_fold) continue;
        ++tested;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < front.size(); ++k) {
            const auto& p = front[k].p;
            if (std::abs(p.x[0] - x) <= 2.0 * dx) best = std::min(best, std::abs(p.z - u.values[i]));
            if (k + 1 < front.size()) {
                const auto& q = front[k + 1].p;
                const double lo = std::min(p.x[0], q.x[0]), hi = std::max(p.x[0], q.x[0]);
                if (x >= lo && x <= hi && hi > lo) {
                    const double w = (x - p.x[0]) / (q.x[0] - p.x[0]);
                    best = std::min(best, std::abs(p.z + w * (q.z - p.z) - u.values[i]));
                }
            }
        }
        if (best <= 2.0 * dz) ++hit;
    }
    CheckReport r;
    r.name = "section";
    r.value = tested ? static_cast<double>(hit) / tested : 1.0;
    r.threshold = 0.99;
    r.pass = r.value >= r.threshold;
    r.samples = tested;
    return r;
}

// ---------------------------------------------------------------------------
// Flowed Clarke 1-jet of a grid function v: the curve made of the cell jets
// (x0, v'(x0), v(x0)) and, wherever the one-sided derivatives differ at a
// node, the vertical fan {x_j} x [v'(x_j-), v'(x_j+)], transported by
// phi^{s,t}. Its points with X = x are exactly the fiber-critical points of
// the generating family at x.

struct CriticalPoint {
    double x0 = 0.0;
    double y0 = 0.0;
    JetPoint<1> end;  // end.x == x up to root tolerance
    int maslov = 0;   // Maslov potential of the front sheet (fiber index up to a constant)
    double value() const { return end.z; }
};

class FlowedJet {
public:
    struct Vertex {
        double x0, y0, z0;
        int cell;  // cell whose jet contains the vertex; pieces with equal x0 are fans
        JetPoint<1> end;
    };

    /// Curve over x0 in [a, b]: each cell sampled at >= cell_sub pieces and
    /// bisected until consecutive slopes differ by <= fan_dy; fans sampled with
    /// spacing <= fan_dy.
    FlowedJet(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v, double a, double b,
              int cell_sub = 4, double fan_dy = 0.02, int steps = 0)
        : H_(H), iv_(iv), v_(v), steps_(steps) {
        const double dx = v.dx();
        int cell = v.cell_of(a);
        double x = a;
        std::vector<std::pair<double, double>> pts;  // (x0, y0) within a cell
        while (x < b) {
            const double g = std::min(v.node(0) + (cell + 1) * dx, b);
            pts.clear();
            const bool kinked = cell >= 0 && cell < v.n - 1 && v.kinked(cell) && v.kink(cell) > x && v.kink(cell) < g;
            if (kinked) {
                // two straight pieces and the fan of the kink between them
                const double xs = v.kink(cell), sl = v.slopes[cell], sr = v.slopes[cell + 1];
                for (int k = 0; k <= cell_sub; ++k) pts.emplace_back(x + (xs - x) * k / cell_sub, sl);
                const int nf = static_cast<int>(std::ceil(std::abs(sr - sl) / fan_dy - 1e-12));
                for (int k = 1; k < nf; ++k) pts.emplace_back(xs, sl + (sr - sl) * k / nf);
                for (int k = 0; k <= cell_sub; ++k) pts.emplace_back(xs + (g - xs) * k / cell_sub, sr);
            } else {
                for (int k = 0; k <= cell_sub; ++k) {
                    const double xx = x + (g - x) * k / cell_sub;
                    pts.emplace_back(xx, v.derivative_in_cell(cell, xx));
                }
            }
            if (v.hermite() && !kinked) {
                for (int pass = 0; pass < 8; ++pass) {
                    std::vector<std::pair<double, double>> q;
                    bool split = false;
                    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
                        q.push_back(pts[k]);
                        if (std::abs(pts[k + 1].second - pts[k].second) > fan_dy) {
                            const double xm = 0.5 * (pts[k].first + pts[k + 1].first);
                            q.emplace_back(xm, v.derivative_in_cell(cell, xm));
                            split = true;
                        }
                    }
                    q.push_back(pts.back());
                    pts.swap(q);
                    if (!split) break;
                }
            }
            for (std::size_t k = verts_.empty() || verts_.back().x0 != pts.front().first ? 0 : 1; k < pts.size(); ++k) {
                // fan vertices of a cell kink carry no cell (their pieces interpolate y0)
                const bool fan = kinked && k > 0 && k + 1 < pts.size() && pts[k].first == v.kink(cell) &&
                                 pts[k - 1].first == pts[k].first;
                add(pts[k].first, pts[k].second, fan ? -1 : cell);
            }
            // the start vertex of this cell may duplicate the previous fan end: keep both (zero-length piece)
            x = g;
            if (g >= b) break;
            const double yl = v.derivative_in_cell(cell, g), yr = v.derivative_in_cell(cell + 1, g);
            const int nf = static_cast<int>(std::ceil(std::abs(yr - yl) / fan_dy - 1e-12));
            for (int k = 1; k < nf; ++k) add(g, yl + (yr - yl) * k / nf, -1);
            ++cell;
        }
        maslov_potential();
    }

    const std::vector<Vertex>& vertices() const { return verts_; }

    /// Potential of the last piece; 0 when every cusp of the curve lies inside
    /// [a, b] (the curve starts and ends on graph-like sheets).
    int maslov_end() const { return mu_.empty() ? 0 : mu_.back(); }

    /// All points of the flowed curve with X = x, refined by the Illinois
    /// variant of regula falsi along each bracketing piece.
    std::vector<CriticalPoint> critical_points(double x) const {
        std::vector<CriticalPoint> out;
        const std::size_t m = verts_.size();
        for (std::size_t k = 0; k < m; ++k) {
            const double fa = verts_[k].end.x[0] - x;
            if (fa == 0.0) {
                out.push_back(CriticalPoint{verts_[k].x0, verts_[k].y0, verts_[k].end,
                                            mu_.empty() ? 0 : mu_[std::min(k, mu_.size() - 1)]});
                continue;
            }
            if (k + 1 == m) break;
            const double fb = verts_[k + 1].end.x[0] - x;
            if (fa * fb < 0.0) {
                CriticalPoint cp = refine(verts_[k], verts_[k + 1], fa, fb, x);
                cp.maslov = mu_[k];
                if (std::abs(cp.end.x[0] - x) <= 1e-9 * (1.0 + std::abs(x))) out.push_back(cp);  // drop unconverged roots
            }
        }
        return out;
    }

private:
    /// Potential per piece: 0 on the first, changed by +-1 at every turning
    /// point of X along the curve (a cusp of the front), up when the curve
    /// turns onto the upper sheet. At a common abscissa X* beside the turn the
    /// sheets differ by the integral of Y_app - Y_ret from X* to the turn, and
    /// with Y linear on each piece that has the sign of Y_app(X*) - Y_ret(X*)
    /// times the approach direction. Unlike the sign of Y' X'' this also holds
    /// at corners where Y turns too (a shock cell of a re-interpolated step).
    void maslov_potential() {
        const std::size_t m = verts_.size();
        mu_.assign(m > 1 ? m - 1 : 0, 0);
        auto y_on = [&](std::size_t a, double X) {
            const auto& p = verts_[a].end;
            const auto& q = verts_[a + 1].end;
            return p.y[0] + (q.y[0] - p.y[0]) * (X - p.x[0]) / (q.x[0] - p.x[0]);
        };
        int mu = 0, dir = 0;
        std::size_t last = 0;  // last piece with nonzero dX
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const double dX = verts_[k + 1].end.x[0] - verts_[k].end.x[0];
            const int d = dX > 0 ? 1 : (dX < 0 ? -1 : 0);
            if (d != 0) {
                if (dir != 0 && d != dir) {
                    const double xa = verts_[last].end.x[0], xr = verts_[k + 1].end.x[0];
                    const double xs = std::abs(xa - verts_[k].end.x[0]) < std::abs(xr - verts_[k].end.x[0]) ? xa : xr;
                    const double gap = (y_on(last, xs) - y_on(k, xs)) * dir;
                    if (gap != 0.0) mu += gap > 0 ? 1 : -1;
                }
                dir = d;
                last = k;
            }
            mu_[k] = mu;
        }
    }

    void add(double x0, double y0, int cell) {
        const double z0 = v_(x0);
        verts_.push_back(Vertex{x0, y0, z0, cell, flow_map(H_, iv_, JetPoint<1>{{x0}, {y0}, z0}, steps_)});
    }

    // jet at parameter l of the piece A -> B
    JetPoint<1> jet_at(const Vertex& A, const Vertex& B, double l) const {
        if (A.x0 == B.x0) return JetPoint<1>{{A.x0}, {A.y0 + l * (B.y0 - A.y0)}, A.z0};
        const double x0 = A.x0 + l * (B.x0 - A.x0);
        // B lies in the piece's cell (A may sit on the cell's left boundary)
        const int cell = B.cell >= 0 ? B.cell : A.cell;
        return JetPoint<1>{{x0}, {v_.derivative_in_cell(cell, x0)}, v_(x0)};
    }

    CriticalPoint refine(const Vertex& A, const Vertex& B, double fa, double fb, double x) const {
        double la = 0.0, lb = 1.0;
        CriticalPoint best{A.x0, A.y0, A.end};
        double best_f = std::abs(fa);
        if (std::abs(fb) < best_f) {
            best = CriticalPoint{B.x0, B.y0, B.end};
            best_f = std::abs(fb);
        }
        const double xtol = 1e-13 * (1.0 + std::abs(x));
        for (int it = 0; it < 60 && best_f > xtol; ++it) {
            double l = (la * fb - lb * fa) / (fb - fa);
            const double lo = std::min(la, lb), hi = std::max(la, lb);
            if (!(l > lo && l < hi)) l = 0.5 * (la + lb);
            const JetPoint<1> p = jet_at(A, B, l);
            const JetPoint<1> e = flow_map(H_, iv_, p, steps_);
            const double f = e.x[0] - x;
            if (std::abs(f) < best_f) {
                best_f = std::abs(f);
                best = CriticalPoint{p.x[0], p.y[0], e};
            }
            if (f * fb < 0.0) {
                la = lb;
                fa = fb;
            } else {
                fa *= 0.5;
            }
            lb = l;
            fb = f;
            if (hi - lo < 1e-15) break;
        }
        return best;
    }

    const HamiltonianSpec<1>& H_;
    TimeInterval iv_;
    const GridFunction& v_;
    int steps_;
    std::vector<Vertex> verts_;
    std::vector<int> mu_;  // per piece
};

}  // namespace cmhj
