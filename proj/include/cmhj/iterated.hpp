#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cmhj/errors.hpp"
#include "cmhj/minimax.hpp"
#include "cmhj/partition.hpp"
#include "cmhj/viscosity.hpp"

namespace cmhj {

struct StepCertificate {
    int step = 0;
    double t = 0.0;
    double lip_bound = 0.0;     // (||dv|| + t ||d_x H||) e^{t ||d_z H||}
    double lip_measured = 0.0;  // Lipschitz constant of the snapshot interpolant
    double grid_tol = 0.0;
    int unsnapped = 0;
    int fold_passes = 0;  // nodes whose grid pass sat on a momentum fold
    int by_persistence = 0;
    int refined = 0;
};

struct SolutionTrace {
    Partition partition;  // as executed (possibly subdivided)
    std::vector<double> times;
    std::vector<GridFunction> snapshots;
    std::vector<StepCertificate> certificates;  // one per step

    const GridFunction& at(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - t) <= 1e-12 * (1.0 + std::abs(t))) return snapshots[i];
        throw Error(ErrorKind::domain, "no snapshot at t=" + std::to_string(t));
    }
};

/// R_{H,zeta}^{0,T} v: minimax_operator composed over the partition gaps on
/// the grid of v. Gaps are subdivided below delta_H only for the
/// generating-function route; the reduced characteristic family is exact for
/// any gap.
inline SolutionTrace iterated_minimax(const HamiltonianSpec<1>& H, const GridFunction& v, const Partition& zeta,
                                      const MinimaxConfig& cfg) {
    zeta.validate();
    SolutionTrace tr;
    tr.partition = zeta;
    if (cfg.route == FiberRoute::generating_function) {
        const double d = delta_H(H);
        if (std::isfinite(d) && !(zeta.norm() < d)) tr.partition = zeta.subdivided(d);
    }
    const double L0 = v.lip;
    tr.times.push_back(tr.partition.start());
    tr.snapshots.push_back(v);
    for (int j = 0; j < tr.partition.steps(); ++j) {
        const TimeInterval iv{tr.partition.times[j], tr.partition.times[j + 1]};
        OperatorReport rep;
        GridFunction next;
        try {
            next = minimax_operator(H, iv, tr.snapshots.back(), cfg, &rep);
        } catch (const Error& e) {
            throw Error(e.kind(), "step " + std::to_string(j) + ": " + e.what());
        }
        StepCertificate c;
        c.step = j;
        c.t = iv.t;
        const double el = iv.t - tr.partition.start();
        c.lip_bound = (L0 + el * H.norm_dxH) * std::exp(el * H.norm_dzH);
        c.lip_measured = next.lip;
        c.grid_tol = rep.grid_tol;
        c.unsnapped = rep.unsnapped;
        c.fold_passes = rep.fold_passes;
        c.by_persistence = rep.by_persistence;
        c.refined = rep.refined;
        tr.certificates.push_back(c);
        tr.times.push_back(iv.t);
        tr.snapshots.push_back(std::move(next));
    }
    return tr;
}

/// R_{H,zeta}^{0,t} v = R^{zeta(t), t} applied to the snapshot at zeta(t).
inline GridFunction iterated_at(const HamiltonianSpec<1>& H, const SolutionTrace& tr, double t,
                                const MinimaxConfig& cfg) {
    const double z = tr.partition.step_fn(t);
    const GridFunction& base = tr.at(z);
    if (std::abs(t - z) <= 1e-12 * (1.0 + std::abs(t))) return base;
    return minimax_operator(H, TimeInterval{z, t}, base, cfg);
}

struct ConvergenceRow {
    double norm = 0.0;
    int steps = 0;
    double error = 0.0;  // sup over sample times x nodes in K
    double err_t = 0.0, err_x = 0.0;
    double final_error = 0.0;  // at the last sample time
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::vector<double> sample_times;
    double k_lo = 0.0, k_hi = 0.0;
    bool strictly_decreasing = false;
    double ratio_first_last = 0.0;  // rows.front().error / rows.back().error
    double threshold = 0.0;
    bool verdict = false;  // strictly decreasing and last error <= threshold
};

/// Sup-norm error of R_{H,zeta}^{0,t} v against `reference` over sample_times x K
/// for each partition (rows in the given order). Every partition is evaluated
/// at all sample times through iterated_at.
inline ConvergenceTable convergence_study(const HamiltonianSpec<1>& H, const GridFunction& v,
                                          const std::vector<Partition>& partitions,
                                          const std::function<double(double, double)>& reference, double k_lo,
                                          double k_hi, const std::vector<double>& sample_times,
                                          const MinimaxConfig& cfg, double threshold) {
    ConvergenceTable tab;
    tab.sample_times = sample_times;
    tab.k_lo = k_lo;
    tab.k_hi = k_hi;
    tab.threshold = threshold;
    for (const Partition& p : partitions) {
        const SolutionTrace tr = iterated_minimax(H, v, p, cfg);
        ConvergenceRow row;
        row.norm = p.norm();
        row.steps = p.steps();
        for (double t : sample_times) {
            const GridFunction u = iterated_at(H, tr, t, cfg);
            for (int i = 0; i < u.n; ++i) {
                const double x = u.node(i);
                if (x < k_lo - 1e-12 || x > k_hi + 1e-12) continue;
                const double e = std::abs(u.values[i] - reference(t, x));
                if (e > row.error) {
                    row.error = e;
                    row.err_t = t;
                    row.err_x = x;
                }
                if (t == sample_times.back()) row.final_error = std::max(row.final_error, e);
            }
        }
        tab.rows.push_back(row);
    }
    tab.strictly_decreasing = tab.rows.size() >= 2;
    for (std::size_t i = 1; i < tab.rows.size(); ++i)
        if (!(tab.rows[i].error < tab.rows[i - 1].error)) tab.strictly_decreasing = false;
    if (!tab.rows.empty() && tab.rows.back().error > 0) tab.ratio_first_last = tab.rows.front().error / tab.rows.back().error;
    tab.verdict = tab.strictly_decreasing && !tab.rows.empty() && tab.rows.back().error <= threshold;
    return tab;
}

/// Lax-Friedrichs reference on a grid refined `div` times, extrapolated with
/// the next refinement: 2 LF(dx/2) - LF(dx) (the scheme is first order).
struct ViscosityReference {
    TimeSeries coarse, fine;
    bool richardson = true;

    double operator()(double t, double x) const {
        return richardson ? 2.0 * fine.at(t)(x) - coarse.at(t)(x) : fine.at(t)(x);
    }
    /// sup |fine - coarse| over times x [a, b]: the size of the first-order correction.
    double spread(double a, double b) const {
        double m = 0.0;
        for (std::size_t k = 0; k < fine.times.size(); ++k)
            m = std::max(m, sup_diff(fine.frames[k], coarse.at(fine.times[k]), a, b));
        return m;
    }
};

inline ViscosityReference viscosity_reference(const HamiltonianSpec<1>& H, const GridFunction& v, double T,
                                              int div, double cfl, const std::vector<double>& times,
                                              bool richardson = true) {
    if (div < 1) throw Error(ErrorKind::config, "reference refinement must be >= 1");
    ViscosityReference r;
    r.richardson = richardson;
    const double dx = v.dx() / div;
    r.coarse = lax_friedrichs_solve(H, v, T, dx, cfl, times);
    r.fine = lax_friedrichs_solve(H, v, T, dx / 2.0, cfl, times);
    return r;
}

}  // namespace cmhj
