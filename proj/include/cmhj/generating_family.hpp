#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cmhj/contact_flow.hpp"
#include "cmhj/errors.hpp"
#include "cmhj/generating_function.hpp"
#include "cmhj/grid_function.hpp"
#include "cmhj/nonsmooth.hpp"
#include "cmhj/partition.hpp"
#include "cmhj/report.hpp"
#include "cmhj/wavefront.hpp"

namespace cmhj {

/// Discrete-composition family S^{s,t}(tau, x; xi) over an inner partition of
/// [s, t]; evaluation at tau uses the rescaled times
///   tau_j = s + (tau - s)(t_j - s)/(t - s).
struct FamilySpec {
    const HamiltonianSpec<1>* H = nullptr;
    TimeInterval iv;
    Partition inner;
    const GridFunction* v = nullptr;
    double tau = 0.0;
    PhiOptions phi;

    /// Default inner partition: N = ceil((t - s)/(delta_H/2)) uniform steps.
    static FamilySpec make(const HamiltonianSpec<1>& H, TimeInterval iv, const GridFunction& v, int N = 0) {
        iv.validate();
        if (N <= 0) {
            const double d = delta_H(H);
            N = std::isfinite(d) ? std::max(1, static_cast<int>(std::ceil((iv.t - iv.s) / (0.5 * d)))) : 1;
        }
        FamilySpec fs;
        fs.H = &H;
        fs.iv = iv;
        fs.inner = Partition::uniform(iv.s, iv.t, N);
        fs.v = &v;
        fs.tau = iv.t;
        fs.validate();
        return fs;
    }

    int N() const { return inner.steps(); }
    int fiber_dim() const { return 2 * N(); }

    double tau_j(int j) const {
        if (j == N()) return tau;
        return iv.s + (tau - iv.s) * (inner.times[j] - iv.s) / (iv.t - iv.s);
    }

    void validate() const {
        if (!H || !v) throw Error(ErrorKind::config, "family needs a Hamiltonian and an initial function");
        iv.validate();
        inner.validate();
        if (std::abs(inner.start() - iv.s) > 1e-12 || std::abs(inner.end() - iv.t) > 1e-12)
            throw Error(ErrorKind::config, "inner partition must span the family interval");
        if (!(tau >= iv.s && tau <= iv.t)) throw Error(ErrorKind::config, "tau outside [s, t]");
        if (!phi.allow_long && !(inner.norm() < delta_H(*H)))
            throw Error(ErrorKind::domain, "inner partition gaps must stay below delta_H");
    }
};

/// xi = (x_0, ..., x_{N-1}, y_1, ..., y_N).
struct FiberPoint {
    std::vector<double> x;
    std::vector<double> y;

    int N() const { return static_cast<int>(x.size()); }
    std::vector<double> flat() const {
        std::vector<double> r(x);
        r.insert(r.end(), y.begin(), y.end());
        return r;
    }
    static FiberPoint from_flat(const std::vector<double>& f) {
        const std::size_t n = f.size() / 2;
        return FiberPoint{std::vector<double>(f.begin(), f.begin() + n), std::vector<double>(f.begin() + n, f.end())};
    }
    double norm() const {
        double s = 0.0;
        for (double a : x) s += a * a;
        for (double a : y) s += a * a;
        return std::sqrt(s);
    }
};

struct FamilyValue {
    double S = 0.0;
    std::vector<double> z_chain;  // z_0 .. z_N
    std::vector<double> phis;     // Phi_0 .. Phi_{N-1}
    double dS_dx = 0.0;           // = y_N
};

/// z_0 = v(x_0), z_j = z_{j-1} + (x_j - x_{j-1}) y_j - Phi^{tau_{j-1},tau_j}(x_{j-1}, y_j, z_{j-1}),
/// with x_N = x; S = z_N.
inline FamilyValue family_eval(const FamilySpec& fs, double x, const FiberPoint& xi) {
    const int N = fs.N();
    if (xi.N() != N || static_cast<int>(xi.y.size()) != N)
        throw Error(ErrorKind::config, "fiber point dimension does not match the inner partition");
    FamilyValue out;
    out.z_chain.resize(N + 1);
    out.phis.resize(N);
    out.z_chain[0] = (*fs.v)(xi.x[0]);
    for (int j = 1; j <= N; ++j) {
        const double xs = xi.x[j - 1], xe = j < N ? xi.x[j] : x;
        const double a = fs.tau_j(j - 1), b = fs.tau_j(j);
        const double phi = b > a ? phi_value<1>(*fs.H, {xs}, {xi.y[j - 1]}, out.z_chain[j - 1], TimeInterval{a, b}, fs.phi)
                                 : 0.0;
        out.phis[j - 1] = phi;
        out.z_chain[j] = out.z_chain[j - 1] + (xe - xs) * xi.y[j - 1] - phi;
    }
    out.S = out.z_chain[N];
    out.dS_dx = xi.y[N - 1];
    return out;
}

/// Q(xi) = -y_N x_{N-1} + sum_{i<N} y_i (x_i - x_{i-1}).
inline double quadratic_part(const FiberPoint& xi) {
    const int N = xi.N();
    double q = -xi.y[N - 1] * xi.x[N - 1];
    for (int i = 1; i < N; ++i) q += xi.y[i - 1] * (xi.x[i] - xi.x[i - 1]);
    return q;
}

/// Symmetric B with Q(xi) = <B xi, xi>/2 in the flat ordering.
inline Eigen::MatrixXd quadratic_matrix(int N) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * N, 2 * N);
    auto add = [&](int a, int b, double c) {
        B(a, b) += c;
        B(b, a) += c;
    };
    add(N + N - 1, N - 1, -1.0);
    for (int i = 1; i < N; ++i) {
        add(N + i - 1, i, 1.0);
        add(N + i - 1, i - 1, -1.0);
    }
    return B;
}

struct QuadraticSplit {
    double Q = 0.0;
    double W = 0.0;  // v(x_0) + x y_N - sum Phi
};

inline QuadraticSplit quadratic_split(const FamilySpec& fs, double x, const FiberPoint& xi) {
    const FamilyValue fv = family_eval(fs, x, xi);
    QuadraticSplit r;
    r.Q = quadratic_part(xi);
    double w = (*fs.v)(xi.x[0]) + x * xi.y.back();
    for (double p : fv.phis) w -= p;
    r.W = w;
    return r;
}

/// C^1 radial cutoff: 1 on |xi| <= plateau, 1 - smoothstep((|xi| - plateau)/width)
/// beyond, 0 from plateau + width on. |D theta| <= 1.5/width.
struct Cutoff {
    double plateau = 1.0;
    double width = 5.0 / 3.0;

    double operator()(double r) const {
        const double u = (r - plateau) / width;
        if (u <= 0) return 1.0;
        if (u >= 1) return 0.0;
        return 1.0 - u * u * (3.0 - 2.0 * u);
    }
    double lip() const { return 1.5 / width; }
    double support() const { return plateau + width; }
};

/// theta(xi/a_K) W + Q for x in K = [k_lo, k_hi].
struct TruncatedFamily {
    FamilySpec fs;
    double k_lo = 0.0, k_hi = 0.0;
    Cutoff theta;
    double a_K = 1.0;
    double b_K = 0.0;
    double c_K = 0.0;
    double beta = 1.0;   // smallest singular value of B (= 1/||B^-1||)
    double rho_K = 0.0;  // S_K = S and no fiber critical points beyond this radius... see truncate_family
    double sample_radius = 0.0;  // box on which c_K was sampled

    double eval(double x, const FiberPoint& xi) const {
        const double r = xi.norm() / a_K;
        const double q = quadratic_part(xi);
        const double th = theta(r);
        if (th == 0.0) return q;
        return th * quadratic_split(fs, x, xi).W + q;
    }
};

namespace detail {

inline double family_W(const FamilySpec& fs, double x, const std::vector<double>& f) {
    return quadratic_split(fs, x, FiberPoint::from_flat(f)).W;
}

inline std::vector<double> fd_fiber_gradient(const std::function<double(const std::vector<double>&)>& F,
                                             const std::vector<double>& f, double h_rel = 1e-6) {
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double h = h_rel * (1.0 + std::abs(f[i]));
        std::vector<double> a = f, b = f;
        a[i] += h;
        b[i] -= h;
        g[i] = (F(a) - F(b)) / (2.0 * h);
    }
    return g;
}

inline double l2(const std::vector<double>& g) {
    double s = 0.0;
    for (double a : g) s += a * a;
    return std::sqrt(s);
}

}  // namespace detail

/// Constructive truncation. With beta = 1/||B^-1||:
///   b_K = max |W(tau, x, 0)|,  c_K = sampled fiber-Lipschitz bound of W (x 1.1),
///   rho_K = max(b_K, (0.45 beta + c_K)/(0.55 beta)),
///   a_K = smallest power of 2 exceeding max(2 ||B^-1|| (b_K + c_K + 1), rho_K / plateau).
/// Then theta(xi/a_K) = 1 on |xi| <= rho_K, and for |xi| >= rho_K
///   |D(theta W)| <= |D theta| (b_K + c_K |xi|)/a_K + c_K < beta |xi| <= |B xi|.
inline TruncatedFamily truncate_family(const FamilySpec& fs, double k_lo, double k_hi, Cutoff theta = {},
                                       int samples = 200, unsigned seed = 7) {
    if (!(k_hi >= k_lo)) throw Error(ErrorKind::config, "truncation compact needs k_lo <= k_hi");
    if (!(theta.lip() < 1.0) || !(theta.plateau > 0))
        throw Error(ErrorKind::config, "cutoff needs |D theta| < 1 and a positive plateau");
    TruncatedFamily tf;
    tf.fs = fs;
    tf.k_lo = k_lo;
    tf.k_hi = k_hi;
    tf.theta = theta;
    const int N = fs.N();
    const Eigen::MatrixXd B = quadratic_matrix(N);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
    tf.beta = svd.singularValues().minCoeff();
    const double xmax = std::max(std::abs(k_lo), std::abs(k_hi));
    std::vector<double> zero(2 * N, 0.0);
    try {
        const int nt = 9, nx = 33;
        for (int a = 0; a < nt; ++a) {
            FamilySpec f = fs;
            f.tau = fs.iv.s + (fs.iv.t - fs.iv.s) * a / (nt - 1);
            for (int b = 0; b < nx; ++b) {
                const double x = k_lo + (k_hi - k_lo) * b / (nx - 1);
                tf.b_K = std::max(tf.b_K, std::abs(detail::family_W(f, x, zero)));
            }
        }
        tf.sample_radius = 2.0 * (1.0 + xmax + fs.v->lip);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double c = 0.0;
        for (int k = 0; k < samples; ++k) {
            FamilySpec f = fs;
            f.tau = fs.iv.s + (fs.iv.t - fs.iv.s) * (0.5 + 0.5 * U(rng));
            const double x = k_lo + (k_hi - k_lo) * (0.5 + 0.5 * U(rng));
            std::vector<double> xi(2 * N);
            for (double& e : xi) e = tf.sample_radius * U(rng);
            const auto g = detail::fd_fiber_gradient([&](const std::vector<double>& q) { return detail::family_W(f, x, q); },
                                                     xi);
            c = std::max(c, detail::l2(g));
        }
        tf.c_K = 1.1 * c;
    } catch (const Error& e) {
        throw Error(ErrorKind::truncation, std::string("cannot certify the fiber Lipschitz bound: ") + e.what());
    }
    if (!std::isfinite(tf.b_K) || !std::isfinite(tf.c_K) || tf.c_K > 1e6)
        throw Error(ErrorKind::truncation, "fiber Lipschitz bound of W is not finite");
    const double rstar = (0.45 * tf.beta + tf.c_K) / (0.55 * tf.beta);
    tf.rho_K = std::max(tf.b_K, rstar);
    const double need = std::max(2.0 / tf.beta * (tf.b_K + tf.c_K + 1.0), tf.rho_K / theta.plateau);
    tf.a_K = 2.0;
    while (!(tf.a_K > need)) tf.a_K *= 2.0;
    return tf;
}

/// Samples rho_K <= |xi| <= a_K * support + 1 and checks |D_xi S_K| > 0
/// (no fiber critical points outside the plateau).
inline CheckReport truncation_check(const TruncatedFamily& tf, double x, int samples = 100, unsigned seed = 11) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int d = tf.fs.fiber_dim();
    double worst = std::numeric_limits<double>::infinity();
    int bad = 0;
    for (int k = 0; k < samples; ++k) {
        std::vector<double> dir(d);
        double n2 = 0.0;
        for (double& e : dir) {
            e = G(rng);
            n2 += e * e;
        }
        const double r = tf.rho_K + (tf.a_K * tf.theta.support() + 1.0 - tf.rho_K) * U(rng);
        for (double& e : dir) e *= r / std::sqrt(n2);
        const auto g = detail::fd_fiber_gradient(
            [&](const std::vector<double>& q) { return tf.eval(x, FiberPoint::from_flat(q)); }, dir);
        const double gn = detail::l2(g);
        worst = std::min(worst, gn);
        if (!(gn > 0.0)) ++bad;
    }
    CheckReport rep;
    rep.name = "truncation_no_far_critical_points";
    rep.value = worst;
    rep.threshold = 0.0;
    rep.pass = bad == 0;
    rep.samples = samples;
    rep.detail = "min |D_xi S_K| over the far shell";
    return rep;
}

struct FiberGrid {
    double x0_lo = -1.0, x0_hi = 1.0;
    double y_bound = 2.0;
    int n_x0 = 0;  // > 0: also bracket sign changes of the fiber gradient on an n_x0 x n_y grid (N = 1)
    int n_y = 0;
};

struct FiberCritical {
    FiberPoint xi;
    FamilyValue value;
    double x0 = 0.0, y0 = 0.0;  // source jet (y0 in the Clarke interval of v at x0)
    double jet_value = 0.0;     // z of the flowed jet (equals value.S up to shooting error)
    double residual = 0.0;      // |D_{y,x_{j>0}} S| and Clarke distance in x_0
    bool bracketed = false;     // a grid cell bracketing the fiber gradient lies within one cell
};

/// Grid cells (i, j) of an N = 1 fiber grid over which both finite-difference
/// fiber-gradient components change sign (lexicographic order).
inline std::vector<std::pair<int, int>> bracket_cells(const FamilySpec& fs, double x, const FiberGrid& g) {
    if (fs.N() != 1) throw Error(ErrorKind::config, "grid bracketing is implemented for one inner step");
    const int nx = g.n_x0, ny = g.n_y;
    if (nx < 2 || ny < 2) throw Error(ErrorKind::config, "fiber grid needs at least 2 points per axis");
    std::vector<double> gx(static_cast<std::size_t>(nx) * ny), gy(gx.size());
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double x0 = g.x0_lo + (g.x0_hi - g.x0_lo) * i / (nx - 1);
            const double y = -g.y_bound + 2.0 * g.y_bound * j / (ny - 1);
            const auto grad = detail::fd_fiber_gradient(
                [&](const std::vector<double>& q) { return family_eval(fs, x, FiberPoint::from_flat(q)).S; }, {x0, y});
            gx[static_cast<std::size_t>(i) * ny + j] = grad[0];
            gy[static_cast<std::size_t>(i) * ny + j] = grad[1];
        }
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i + 1 < nx; ++i)
        for (int j = 0; j + 1 < ny; ++j) {
            auto changes = [&](const std::vector<double>& a) {
                double lo = a[static_cast<std::size_t>(i) * ny + j], hi = lo;
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj) {
                        const double e = a[static_cast<std::size_t>(i + di) * ny + j + dj];
                        lo = std::min(lo, e);
                        hi = std::max(hi, e);
                    }
                return lo <= 0.0 && hi >= 0.0;
            };
            if (changes(gx) && changes(gy)) out.emplace_back(i, j);
        }
    return out;
}

/// Fiber critical points of S(tau, x; .) with x_0 in [grid.x0_lo, grid.x0_hi]:
/// by (c1)-(c3) they are the chains x_j = X(tau_j), y_j = Y(tau_j) of
/// characteristics from the Clarke 1-jet of v that reach x at time tau. The
/// chains are located on the flowed jet and then re-evaluated through
/// family_eval; with a fiber grid (N = 1) each is also matched to a grid
/// bracket of the finite-difference gradient.
inline std::vector<FiberCritical> fiber_critical_points(const FamilySpec& fs, double x, const FiberGrid& grid) {
    const int N = fs.N();
    const GridFunction& v = *fs.v;
    std::vector<CriticalPoint> cps;
    if (fs.tau == fs.iv.s) {
        const ClarkeInterval ci = clarke_subgradient(v, x);
        cps.push_back(CriticalPoint{x, ci.mid(), JetPoint<1>{{x}, {ci.mid()}, v(x)}});
    } else {
        FlowedJet jet(*fs.H, TimeInterval{fs.iv.s, fs.tau}, v, grid.x0_lo, grid.x0_hi, 8, 0.01, fs.phi.steps);
        cps = jet.critical_points(x);
    }
    std::vector<std::pair<int, int>> cells;
    if (grid.n_x0 > 0 && N == 1) cells = bracket_cells(fs, x, grid);
    std::vector<FiberCritical> out;
    for (const auto& cp : cps) {
        if (std::abs(cp.end.y[0]) > grid.y_bound) continue;
        FiberCritical fc;
        fc.x0 = cp.x0;
        fc.y0 = cp.y0;
        fc.jet_value = cp.value();
        fc.xi.x.resize(N);
        fc.xi.y.resize(N);
        JetPoint<1> p{{cp.x0}, {cp.y0}, v(cp.x0)};
        for (int j = 1; j <= N; ++j) {
            fc.xi.x[j - 1] = p.x[0];
            const double a = fs.tau_j(j - 1), b = fs.tau_j(j);
            if (b > a) p = flow_map(*fs.H, TimeInterval{a, b}, p, fs.phi.steps);
            fc.xi.y[j - 1] = p.y[0];
        }
        fc.value = family_eval(fs, x, fc.xi);
        // residual: smooth coordinates by central differences, x_0 by the Clarke condition
        const auto flat = fc.xi.flat();
        auto F = [&](const std::vector<double>& q) { return family_eval(fs, x, FiberPoint::from_flat(q)).S; };
        const auto g = detail::fd_fiber_gradient(F, flat);
        double res = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i) res = std::max(res, std::abs(g[i]));
        const ClarkeInterval ci = clarke_subgradient(v, cp.x0);
        const double d0 = ci.contains(cp.y0) ? 0.0 : std::min(std::abs(cp.y0 - ci.lo_slope), std::abs(cp.y0 - ci.hi_slope));
        fc.residual = std::max(res, d0);
        if (!cells.empty()) {
            const double hx = (grid.x0_hi - grid.x0_lo) / (grid.n_x0 - 1), hy = 2.0 * grid.y_bound / (grid.n_y - 1);
            for (const auto& [i, j] : cells) {
                const double cx = grid.x0_lo + (i + 0.5) * hx, cy = -grid.y_bound + (j + 0.5) * hy;
                if (std::abs(cx - fc.xi.x[0]) <= 1.5 * hx && std::abs(cy - fc.xi.y[0]) <= 1.5 * hy) {
                    fc.bracketed = true;
                    break;
                }
            }
        }
        out.push_back(std::move(fc));
    }
    return out;
}

}  // namespace cmhj
