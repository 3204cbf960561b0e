#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "cmhj/contact_flow.hpp"
#include "cmhj/errors.hpp"
#include "cmhj/generating_family.hpp"
#include "cmhj/generating_function.hpp"
#include "cmhj/grid_function.hpp"
#include "cmhj/parallel.hpp"
#include "cmhj/report.hpp"
#include "cmhj/wavefront.hpp"

namespace cmhj {

/// Which fiber coordinates tabulate the one-step family.
///  - generating_function: (x0, Y) with S = v(x0) + (x - x0) Y - Phi^{s,t}(x0, Y, v(x0));
///    needs t - s < delta_H.
///  - characteristic: (x0, y0) with S = Z + (x - X) Y, (X, Y, Z) = phi^{s,t}(x0, y0, v(x0));
///    the multi-step family restricted to chains that follow the flow. Same
///    critical points and values for any step length, but dS/dy0 = (x - X) dY/dy0
///    also vanishes on momentum folds (dY/dy0 = 0), where the table can show a
///    pass that is no critical point; see Selection.
enum class FiberRoute { characteristic, generating_function };

/// How the minimax critical point is chosen at each output point.
///  - persistence: sublevel persistence of the critical points of the family
///    graded by the Maslov potential of their front sheets; the value at which
///    the essential class is born. The grid pass is kept as a cross-check and
///    as the fallback when the grading is inconsistent.
///  - mountain_pass: the grid pass of the (x0, y0) table snapped to the
///    nearest exact critical value.
enum class Selection { persistence, mountain_pass };

struct MinimaxConfig {
    double x0_window_pad = 0.0;  // 0: a-priori domain-of-dependence bound + 20%
    double y_bound = 0.0;        // 0: a-priori momentum bound + 20%
    int grid_x0 = 161;           // points across the x0 window (at most one per grid cell of v)
    int grid_y = 121;
    int refine_levels = 2;
    FiberRoute route = FiberRoute::characteristic;
    Selection selection = Selection::persistence;
    int table_steps = 16;  // RK4 steps for the selection table
    int flow_steps = 0;    // RK4 steps for critical points (0 = default 64)
    int cell_sub = 4;      // staircase pieces per cell
    double fan_dy = 0.02;  // staircase fan spacing
    bool snap = true;      // replace the grid pass value by the nearest exact critical value
    bool carry_slopes = true;  // output carries node slopes Y (cubic Hermite between nodes)
    int threads = 1;

    void validate() const {
        if (grid_x0 < 9 || grid_y < 9) throw Error(ErrorKind::config, "selector grids need >= 9 points per axis");
        if (x0_window_pad < 0 || y_bound < 0) throw Error(ErrorKind::config, "negative selector window");
        if (refine_levels < 0 || table_steps < 1 || cell_sub < 1 || !(fan_dy > 0))
            throw Error(ErrorKind::config, "bad selector resolution parameters");
    }
};

struct MinimaxResult {
    double value = 0.0;
    double grid_value = 0.0;  // mountain-pass level on the table
    double arg_x0 = 0.0;
    double arg_y = 0.0;   // fiber momentum y_1 (= Y at the end of the step)
    double arg_y0 = 0.0;  // source momentum in the Clarke interval of v at arg_x0
    std::vector<CriticalPoint> near_optimal_set;  // critical points within grid_tol of value
    bool is_boundary_hit = false;
    bool snapped = false;
    bool fold_pass = false;  // grid pass on a momentum fold of the table, away from every critical point
    bool by_persistence = false;
    double pass_gap = 0.0;  // |selected value - grid pass level|
    double snap_distance = 0.0;
    double stationarity = 0.0;  // distance of 0 from the one-sided fiber derivatives
    double grid_tol = 0.0;
    int level = 0;
};

struct SelectorWindows {
    double pad = 0.0;
    double y_bound = 0.0;
    double h0 = 0.0;  // x0 spacing (multiple of v.dx)
    double hy = 0.0;
    int ny = 0;
    double grid_tol = 0.0;
};

/// Momentum bound (||dv|| + |t-s| ||d_x H||) e^{|t-s| ||d_z H||}.
inline double momentum_bound(const HamiltonianSpec<1>& H, double gap, double lip) {
    return (lip + gap * H.norm_dxH) * std::exp(gap * H.norm_dzH);
}

/// Bound on |R v - v| over one step, used to size the seed margin.
inline double value_drift_bound(const HamiltonianSpec<1>& H, double gap, double vsup) {
    const double hb = std::isfinite(H.norm_H) ? H.norm_H : H.norm_H0 + H.norm_dzH * (vsup + 1.0);
    return gap * hb;
}

inline SelectorWindows selector_windows(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v,
                                        const MinimaxConfig& cfg, int level = 0) {
    const double gap = iv.t - iv.s;
    SelectorWindows w;
    const double L = v.lip;
    w.y_bound = cfg.y_bound > 0 ? cfg.y_bound : 1.2 * momentum_bound(H, gap, L) + 0.3;
    const int gx = cfg.grid_x0 << level, gy = cfg.grid_y << level;
    w.ny = gy;
    w.hy = 2.0 * w.y_bound / (gy - 1);
    // the seeds must sit below the pass by more than the table tolerance; the
    // tolerance depends on the pad (through the x0 spacing), hence the loop
    double depth = 0.25;
    for (int it = 0; it < 4; ++it) {
        if (cfg.x0_window_pad > 0) {
            w.pad = cfg.x0_window_pad;
        } else {
            const double dod = 1.2 * gap * H.norm_dyH;
            const double seed = (value_drift_bound(H, gap, v.sup_norm()) + depth) * std::exp(gap * H.norm_dzH) /
                                std::max(w.y_bound - L, 0.1);
            w.pad = std::max(dod, seed);
        }
        const int m = std::max(1, static_cast<int>(std::floor(2.0 * w.pad / (gx - 1) / v.dx())));
        w.h0 = m * v.dx();
        w.pad = std::max(w.pad, 4.0 * w.h0);
        const int nx_window = static_cast<int>(std::floor(2.0 * w.pad / w.h0)) + 1;
        w.grid_tol = std::max(2.0 * w.pad * 3.0 / nx_window, 2.0 * w.y_bound * 3.0 / gy);
        if (cfg.x0_window_pad > 0 || depth >= 2.0 * w.grid_tol) break;
        depth = 2.0 * w.grid_tol;
    }
    return w;
}

namespace detail {

/// Persistence pairing of the critical points of one fiber, listed in order
/// along the flowed jet curve and graded by `maslov`. Neighbours whose grades
/// differ by one, the higher grade at the higher value, are cancelled smallest
/// gap first; on a line this reproduces the sublevel persistence pairs.
/// Returns the index of the one point left, or -1 when the cancellation stalls
/// with more than one left. Only grade differences enter, so a cusp outside
/// the window, which shifts every grade alike, does not matter.
inline int persistence_select(const std::vector<CriticalPoint>& cps) {
    std::vector<int> alive(cps.size());
    std::iota(alive.begin(), alive.end(), 0);
    while (alive.size() > 1) {
        std::size_t best = alive.size();
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < alive.size(); ++k) {
            const CriticalPoint& a = cps[alive[k]];
            const CriticalPoint& b = cps[alive[k + 1]];
            if (std::abs(a.maslov - b.maslov) != 1) continue;
            const double g = a.maslov > b.maslov ? a.value() - b.value() : b.value() - a.value();
            if (g >= 0.0 && g < gap) {
                gap = g;
                best = k;
            }
        }
        if (best == alive.size()) return -1;
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best), alive.begin() + static_cast<std::ptrdiff_t>(best) + 2);
    }
    return alive.empty() ? -1 : alive[0];
}

/// Lowest level at which cells A and B of an nx-by-ny array (row-major in x)
/// become 4-connected through cells of smaller or equal value. Returns the
/// level and the cell that closed the connection.
inline double mountain_pass(const std::vector<double>& val, int nx, int ny, int A, int B, int& saddle) {
    const int n = nx * ny;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b] || (val[a] == val[b] && a < b); });
    std::vector<int> parent(n, -1);
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (int c : order) {
        parent[c] = c;
        const int i = c / ny, j = c % ny;
        const int nb[4] = {i > 0 ? c - ny : -1, i + 1 < nx ? c + ny : -1, j > 0 ? c - 1 : -1, j + 1 < ny ? c + 1 : -1};
        for (int d : nb) {
            if (d < 0 || parent[d] < 0) continue;
            const int ra = find(c), rb = find(d);
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
        if (parent[A] >= 0 && parent[B] >= 0 && find(A) == find(B)) {
            saddle = c;
            return val[c];
        }
    }
    saddle = -1;
    return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Tabulated one-step family over output points in [xa, xb]:
/// S(x; x0_i, y_j) = A_ij + x B_ij, plus the flowed staircase of v for exact
/// critical values.
class SelectorWorkspace {
public:
    SelectorWorkspace(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v, double xa, double xb,
                      const MinimaxConfig& cfg, int level = 0)
        : H_(H), iv_(iv), v_(v), cfg_(cfg), level_(level) {
        cfg.validate();
        iv.validate();
        win_ = selector_windows(H, iv, v, cfg, level);
        const double dx = v.dx();
        const int m = static_cast<int>(std::lround(win_.h0 / dx));
        // x0 nodes are v nodes (every m-th), indexed relative to v.lo
        k_lo_ = static_cast<int>(std::floor((xa - win_.pad - v.lo) / dx)) - 1;
        k_lo_ = static_cast<int>(std::floor(static_cast<double>(k_lo_) / m)) * m;
        const int k_hi = static_cast<int>(std::ceil((xb + win_.pad - v.lo) / dx)) + 1;
        m_ = m;
        nx_ = (k_hi - k_lo_) / m + 2;
        ny_ = win_.ny;
        A_.resize(static_cast<std::size_t>(nx_) * ny_);
        B_.resize(A_.size());
        if (cfg.route == FiberRoute::generating_function && !(iv.t - iv.s < delta_H(H)))
            throw Error(ErrorKind::domain, "generating-function route needs t - s < delta_H");
        parallel_for(nx_, cfg.threads, [&](int i) {
            const double x0 = x0_of(i);
            const double z0 = v(x0);
            for (int j = 0; j < ny_; ++j) {
                const double y = -win_.y_bound + j * win_.hy;
                double a, b;
                if (cfg_.route == FiberRoute::characteristic) {
                    const JetPoint<1> e = flow_map(H_, iv_, JetPoint<1>{{x0}, {y}, z0}, cfg_.table_steps);
                    a = e.z - e.x[0] * e.y[0];
                    b = e.y[0];
                } else {
                    PhiOptions po;
                    po.steps = cfg_.table_steps;
                    const double phi = phi_value<1>(H_, {x0}, {y}, z0, iv_, po);
                    a = z0 - x0 * y - phi;
                    b = y;
                }
                A_[static_cast<std::size_t>(i) * ny_ + j] = a;
                B_[static_cast<std::size_t>(i) * ny_ + j] = b;
            }
        });
        if (cfg.snap)
            jet_ = std::make_unique<FlowedJet>(H, iv, v, x0_of(0), x0_of(nx_ - 1), cfg.cell_sub, cfg.fan_dy,
                                               cfg.flow_steps);
    }

    const SelectorWindows& windows() const { return win_; }
    const FlowedJet* jet() const { return jet_.get(); }

    double x0_of(int i) const { return v_.lo + (k_lo_ + static_cast<long>(i) * m_) * v_.dx(); }

    /// Family value at table node (i, j).
    double table_value(double x, int i, int j) const {
        const std::size_t c = static_cast<std::size_t>(i) * ny_ + j;
        return A_[c] + x * B_[c];
    }

    /// Reduced-family value S(x; x0, y0) with a precise flow.
    double family_value(double x, double x0, double y0) const {
        const JetPoint<1> e = flow_map(H_, iv_, JetPoint<1>{{x0}, {y0}, v_(x0)}, cfg_.flow_steps);
        return e.z + (x - e.x[0]) * e.y[0];
    }

    MinimaxResult solve(double x) const {
        MinimaxResult r;
        r.level = level_;
        r.grid_tol = win_.grid_tol;
        const double dx = v_.dx();
        const int i_lo = static_cast<int>(std::ceil(((x - win_.pad - v_.lo) / dx - k_lo_) / m_ - 1e-9));
        const int i_hi = static_cast<int>(std::floor(((x + win_.pad - v_.lo) / dx - k_lo_) / m_ + 1e-9));
        if (i_lo < 0 || i_hi >= nx_ || i_hi - i_lo < 2)
            throw Error(ErrorKind::window, "output point " + std::to_string(x) + " outside the tabulated window");
        const int nx = i_hi - i_lo + 1;
        std::vector<double> val(static_cast<std::size_t>(nx) * ny_);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny_; ++j) val[static_cast<std::size_t>(i) * ny_ + j] = table_value(x, i_lo + i, j);
        // low ends of the index-1 quadratic form: (x0 > x, y > 0) and (x0 < x, y < 0)
        const int seedA = (nx - 1) * ny_ + (ny_ - 1);
        const int seedB = 0;
        int saddle = -1;
        const double c = detail::mountain_pass(val, nx, ny_, seedA, seedB, saddle);
        r.grid_value = c;
        const int si = saddle / ny_, sj = saddle % ny_;
        const double margin = win_.grid_tol;
        r.is_boundary_hit = si == 0 || si == nx - 1 || sj == 0 || sj == ny_ - 1 || val[seedA] > c - margin ||
                            val[seedB] > c - margin;
        r.value = c;
        r.arg_x0 = x0_of(i_lo + si);
        r.arg_y0 = -win_.y_bound + sj * win_.hy;
        r.arg_y = B_[static_cast<std::size_t>(i_lo + si) * ny_ + sj];
        if (jet_ && cfg_.selection == Selection::persistence) {
            const auto cps = jet_->critical_points(x);
            const int k = detail::persistence_select(cps);
            if (k >= 0) {
                const CriticalPoint& cp = cps[k];
                r.by_persistence = r.snapped = true;
                r.value = cp.value();
                r.pass_gap = r.snap_distance = std::abs(cp.value() - c);
                r.arg_x0 = cp.x0;
                r.arg_y0 = cp.y0;
                r.arg_y = cp.end.y[0];
                r.stationarity = stationarity(x, cp);
                for (const auto& q : cps)
                    if (std::abs(q.value() - r.value) <= win_.grid_tol) r.near_optimal_set.push_back(q);
                return r;
            }
        }
        if (jet_) {
            const auto cps = jet_->critical_points(x);
            // candidates: critical points within 3 table cells of the grid saddle
            // (all of them if none is that close); among those the nearest value
            const double sx0 = r.arg_x0, sY = r.arg_y;
            auto near_saddle = [&](const CriticalPoint& cp) {
                return std::abs(cp.x0 - sx0) <= 3.0 * win_.h0 && std::abs(cp.end.y[0] - sY) <= 3.0 * win_.hy;
            };
            const bool any_near = std::any_of(cps.begin(), cps.end(), near_saddle);
            // The (x0, y0) surface is the multi-step family restricted to forward
            // chains, not an elimination of the inner variables: where y0 -> Y
            // folds, dS/dy0 = (x - X) dY/dy0 vanishes off the characteristics and
            // the grid pass can sit there. Restriction can only raise the pass
            // level, so the selection is then taken among critical values below it.
            r.fold_pass = !any_near && momentum_fold_near(i_lo + si, sj);
            const CriticalPoint* best = nullptr;
            double bd = std::numeric_limits<double>::infinity();
            for (const auto& cp : cps) {
                if (any_near && !near_saddle(cp)) continue;
                if (r.fold_pass && cp.value() > c) continue;
                const double d = std::abs(cp.value() - c);
                const bool better = d < bd - 1e-12 ||
                                    (std::abs(d - bd) <= 1e-12 && best &&
                                     (cp.x0 < best->x0 || (cp.x0 == best->x0 && cp.end.y[0] < best->end.y[0])));
                if (better) {
                    bd = d;
                    best = &cp;
                }
            }
            if (best && bd <= win_.grid_tol) {
                r.snapped = true;
                r.snap_distance = bd;
                r.value = best->value();
                r.arg_x0 = best->x0;
                r.arg_y0 = best->y0;
                r.arg_y = best->end.y[0];
                r.stationarity = stationarity(x, *best);
                r.pass_gap = bd;
            }
            for (const auto& cp : cps)
                if (std::abs(cp.value() - r.value) <= win_.grid_tol) r.near_optimal_set.push_back(cp);
        }
        return r;
    }

private:
    /// Sign change of dY/dy0 along the table columns within two cells of (i, j).
    bool momentum_fold_near(int i, int j) const {
        for (int a = std::max(0, i - 2); a <= std::min(nx_ - 1, i + 2); ++a)
            for (int b = std::max(1, j - 2); b <= std::min(ny_ - 2, j + 2); ++b) {
                const std::size_t c = static_cast<std::size_t>(a) * ny_ + b;
                if ((B_[c + 1] - B_[c]) * (B_[c] - B_[c - 1]) <= 0.0) return true;
            }
        return false;
    }

    /// Distance of 0 from the one-sided x0 difference quotients and the central
    /// y0 difference quotient of the reduced family at a critical point.
    double stationarity(double x, const CriticalPoint& cp) const {
        const double hx = 1e-3 * v_.dx();
        const double hy = 1e-6 * (1.0 + std::abs(cp.y0));
        const double s0 = family_value(x, cp.x0, cp.y0);
        const double dl = (s0 - family_value(x, cp.x0 - hx, cp.y0)) / hx;
        const double dr = (family_value(x, cp.x0 + hx, cp.y0) - s0) / hx;
        const double dy = (family_value(x, cp.x0, cp.y0 + hy) - family_value(x, cp.x0, cp.y0 - hy)) / (2.0 * hy);
        const double lo = std::min(dl, dr), hi = std::max(dl, dr);
        const double gx = lo > 0 ? lo : (hi < 0 ? -hi : 0.0);
        return std::max(gx, std::abs(dy));
    }

    const HamiltonianSpec<1>& H_;
    TimeInterval iv_;
    const GridFunction& v_;
    MinimaxConfig cfg_;
    int level_;
    SelectorWindows win_;
    int k_lo_ = 0, m_ = 1, nx_ = 0, ny_ = 0;
    std::vector<double> A_, B_;
    std::unique_ptr<FlowedJet> jet_;
};

/// Minimax value R^{s,t} v(x) of the one-step family. The mountain-pass level
/// between the two low ends of the quadratic form is always computed; with
/// Selection::persistence the value is the persistence survivor among the exact
/// critical points, else the pass snapped to the nearest exact critical value
/// (refined up to cfg.refine_levels times when snapping fails).
/// Window-error if the saddle or a seed touches the window boundary.
inline MinimaxResult minimax_step(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v, double x,
                                  const MinimaxConfig& cfg) {
    MinimaxResult r;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int level = 0; level <= cfg.refine_levels; ++level) {
        SelectorWorkspace ws(H, iv, v, x, x, cfg, level);
        r = ws.solve(x);
        if (r.snapped) break;
        if (std::abs(r.value - prev) < 1e-6 * (1.0 + std::abs(r.value))) break;
        prev = r.value;
    }
    if (r.is_boundary_hit)
        throw Error(ErrorKind::window, "saddle or seed on the window boundary at x=" + std::to_string(x) +
                                           "; enlarge x0_window_pad / y_bound");
    return r;
}

struct OperatorReport {
    double lip_bound = 0.0;  // (||dv|| + |t-s| ||d_x H||) e^{|t-s| ||d_z H||}
    double lip_measured = 0.0;
    double grid_tol = 0.0;
    double max_snap_distance = 0.0;
    int unsnapped = 0;
    int fold_passes = 0;
    int by_persistence = 0;  // nodes whose value came from the persistence pairing
    int refined = 0;
    double max_stationarity = 0.0;
};

/// Applies the selector at every node of `out` (lo, hi, n taken from it).
inline GridFunction minimax_operator(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v,
                                     double out_lo, double out_hi, int out_n, const MinimaxConfig& cfg,
                                     OperatorReport* rep = nullptr) {
    SelectorWorkspace ws(H, iv, v, out_lo, out_hi, cfg, 0);
    std::vector<MinimaxResult> res(out_n);
    std::vector<int> needs(out_n, 0);
    parallel_for(out_n, cfg.threads, [&](int i) {
        const double x = out_lo + (out_hi - out_lo) * i / (out_n - 1);
        res[i] = ws.solve(x);
        needs[i] = !res[i].snapped || res[i].is_boundary_hit;
    });
    OperatorReport report;
    for (int i = 0; i < out_n; ++i) {
        if (!needs[i]) continue;
        const double x = out_lo + (out_hi - out_lo) * i / (out_n - 1);
        MinimaxConfig c1 = cfg;
        c1.threads = 1;
        try {
            res[i] = minimax_step(H, iv, v, x, c1);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string("node ") + std::to_string(i) + " (x=" + std::to_string(x) + "): " +
                                      e.what());
        }
        ++report.refined;
    }
    std::vector<double> vals(out_n), slopes;
    if (cfg.carry_slopes && cfg.snap) slopes.resize(out_n);
    for (int i = 0; i < out_n; ++i) {
        vals[i] = res[i].value;
        if (!slopes.empty()) slopes[i] = res[i].arg_y;
        if (!res[i].snapped) ++report.unsnapped;
        if (res[i].fold_pass) ++report.fold_passes;
        if (res[i].by_persistence) ++report.by_persistence;
        report.max_snap_distance = std::max(report.max_snap_distance, res[i].snap_distance);
        report.max_stationarity = std::max(report.max_stationarity, res[i].stationarity);
    }
    GridFunction out(out_lo, out_hi, std::move(vals), -1.0, v.extrapolation, std::move(slopes));
    report.lip_bound = momentum_bound(H, iv.t - iv.s, v.lip);
    report.lip_measured = out.lip;
    report.grid_tol = ws.windows().grid_tol;
    if (rep) *rep = report;
    return out;
}

inline GridFunction minimax_operator(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v,
                                     const MinimaxConfig& cfg, OperatorReport* rep = nullptr) {
    return minimax_operator(H, iv, v, v.lo, v.hi, v.n, cfg, rep);
}

namespace detail {

/// Newton step on the coordinates `idx` of F (central-difference gradient and
/// Hessian, step h) limited to `radius` per coordinate; damped by halving
/// until |grad| decreases.
inline bool newton_block(const std::function<double(const std::vector<double>&)>& F, std::vector<double>& xi,
                         const std::vector<int>& idx, double h, double radius = 0.25) {
    const int m = static_cast<int>(idx.size());
    if (m == 0) return false;
    auto grad = [&](const std::vector<double>& p) {
        Eigen::VectorXd g(m);
        for (int a = 0; a < m; ++a) {
            std::vector<double> pp = p, pm = p;
            pp[idx[a]] += h;
            pm[idx[a]] -= h;
            g(a) = (F(pp) - F(pm)) / (2.0 * h);
        }
        return g;
    };
    const double f0 = F(xi);
    Eigen::MatrixXd Hs(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            double v;
            if (a == b) {
                std::vector<double> pp = xi, pm = xi;
                pp[idx[a]] += h;
                pm[idx[a]] -= h;
                v = (F(pp) - 2.0 * f0 + F(pm)) / (h * h);
            } else {
                std::vector<double> pp = xi, pm = xi, mp = xi, mm = xi;
                pp[idx[a]] += h, pp[idx[b]] += h;
                pm[idx[a]] += h, pm[idx[b]] -= h;
                mp[idx[a]] -= h, mp[idx[b]] += h;
                mm[idx[a]] -= h, mm[idx[b]] -= h;
                v = (F(pp) - F(pm) - F(mp) + F(mm)) / (4.0 * h * h);
            }
            Hs(a, b) = Hs(b, a) = v;
        }
    const Eigen::VectorXd g = grad(xi);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Hs);
    if (lu.rank() < m) return false;
    Eigen::VectorXd d = lu.solve(g);
    // trust region: no coordinate moves by more than `radius`
    const double dmax = d.cwiseAbs().maxCoeff();
    if (dmax > radius) d *= radius / dmax;
    const double g0 = g.norm();
    double lambda = 1.0;
    for (int k = 0; k < 10; ++k, lambda *= 0.5) {
        std::vector<double> trial = xi;
        for (int a = 0; a < m; ++a) trial[idx[a]] -= lambda * d(a);
        try {
            if (grad(trial).norm() < g0) {
                xi = trial;
                return true;
            }
        } catch (const Error&) {
            // trial left the region where the family can be evaluated
        }
    }
    return false;
}

}  // namespace detail

struct PartitionIndependence {
    std::vector<int> steps;       // inner steps per family
    std::vector<double> values;   // minimax value of each family at x
    std::vector<double> gradient; // |D_xi S| at the polished point
    double spread = 0.0;
    double tolerance = 0.0;  // 5 grid_tol
    bool pass = false;
};

/// Minimax values at x of the families over 1-, 2-, ... inner steps of iv.
/// The m-step saddle is seeded by chaining single-step selections backward from
/// x (x_{m-1}, y_m from the last sub-step, and so on) and refined by alternating
/// Newton steps on the x-block and the y-block followed by a full Newton
/// polish. Piecewise-linear v: x_0 is held at its seed.
inline PartitionIndependence partition_independence_check(const HamiltonianSpec<1>& H, TimeInterval iv,
                                                          const GridFunction& v, double x,
                                                          const std::vector<int>& partitions,
                                                          const MinimaxConfig& cfg) {
    PartitionIndependence out;
    double gtol = 0.0;
    for (int m : partitions) {
        if (m < 1) throw Error(ErrorKind::config, "inner step count must be positive");
        FamilySpec fs = FamilySpec::make(H, iv, v, m);
        fs.phi.steps = cfg.flow_steps;
        // chained single steps on v's grid
        std::vector<GridFunction> u{v};
        for (int j = 0; j + 1 < m; ++j)
            u.push_back(minimax_operator(H, TimeInterval{fs.inner.times[j], fs.inner.times[j + 1]}, u.back(), cfg));
        FiberPoint xi;
        xi.x.assign(m, 0.0);
        xi.y.assign(m, 0.0);
        double xe = x;
        for (int j = m - 1; j >= 0; --j) {
            const MinimaxResult r =
                minimax_step(H, TimeInterval{fs.inner.times[j], fs.inner.times[j + 1]}, u[j], xe, cfg);
            gtol = std::max(gtol, r.grid_tol);
            xi.x[j] = r.arg_x0;
            xi.y[j] = r.arg_y;
            xe = r.arg_x0;
        }
        auto F = [&](const std::vector<double>& q) { return family_eval(fs, x, FiberPoint::from_flat(q)).S; };
        std::vector<double> f = xi.flat();
        std::vector<int> xs, ys, all;
        for (int j = v.hermite() ? 0 : 1; j < m; ++j) xs.push_back(j);
        for (int j = 0; j < m; ++j) ys.push_back(m + j);
        all = xs;
        all.insert(all.end(), ys.begin(), ys.end());
        const double h = 1e-4;
        for (int it = 0; it < 4; ++it) {
            detail::newton_block(F, f, ys, h);
            detail::newton_block(F, f, xs, h);
        }
        for (int it = 0; it < 6; ++it)
            if (!detail::newton_block(F, f, all, h)) break;
        double gn = 0.0;
        for (int i : all) {
            std::vector<double> a = f, b = f;
            a[i] += h;
            b[i] -= h;
            const double g = (F(a) - F(b)) / (2.0 * h);
            gn += g * g;
        }
        out.steps.push_back(m);
        out.values.push_back(F(f));
        out.gradient.push_back(std::sqrt(gn));
    }
    if (!out.values.empty()) {
        const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
        out.spread = *hi - *lo;
    }
    out.tolerance = 5.0 * gtol;
    out.pass = out.spread <= out.tolerance;
    return out;
}

struct GradientInclusion {
    double x = 0.0;
    bool stable = false;  // one-sided difference quotients agree
    double derivative = 0.0;
    double hull_lo = 0.0, hull_hi = 0.0;  // hull of y_N over critical points at the minimax value
    int critical_at_value = 0;
    double tolerance = 0.0;
    bool pass = true;  // vacuous when not stable
};

/// d(R v)(x) against the hull of y_N over the fiber critical points whose
/// value equals R v(x) (within 1e-7 (1 + |R v(x)|)).
inline GradientInclusion gradient_inclusion_check(const HamiltonianSpec<1>& H, TimeInterval iv,
                                                  const GridFunction& v, double x, const MinimaxConfig& cfg,
                                                  double h = 1e-5) {
    GradientInclusion g;
    g.x = x;
    SelectorWorkspace ws(H, iv, v, x - 2 * h, x + 2 * h, cfg, 0);
    const MinimaxResult r0 = ws.solve(x), rp = ws.solve(x + h), rm = ws.solve(x - h);
    const double fwd = (rp.value - r0.value) / h, bwd = (r0.value - rm.value) / h;
    g.derivative = 0.5 * (fwd + bwd);
    g.tolerance = 1e-4 * (1.0 + std::abs(g.derivative));
    g.stable = r0.snapped && rp.snapped && rm.snapped && std::abs(fwd - bwd) <= 1e-3 * (1.0 + std::abs(g.derivative));
    const double vt = 1e-7 * (1.0 + std::abs(r0.value));
    g.hull_lo = std::numeric_limits<double>::infinity();
    g.hull_hi = -std::numeric_limits<double>::infinity();
    if (!ws.jet()) throw Error(ErrorKind::config, "gradient inclusion needs snapping enabled");
    for (const auto& cp : ws.jet()->critical_points(x)) {
        if (std::abs(cp.value() - r0.value) > vt) continue;
        ++g.critical_at_value;
        g.hull_lo = std::min(g.hull_lo, cp.end.y[0]);
        g.hull_hi = std::max(g.hull_hi, cp.end.y[0]);
    }
    if (g.stable)
        g.pass = g.critical_at_value > 0 && g.derivative >= g.hull_lo - g.tolerance &&
                 g.derivative <= g.hull_hi + g.tolerance;
    return g;
}

}  // namespace cmhj
