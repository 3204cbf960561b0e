#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cmhj/errors.hpp"
#include "cmhj/jet.hpp"

namespace cmhj {

template <int K>
struct HamGrad {
    Vec<K> dx{};
    Vec<K> dy{};
    double dz = 0.0;
};

/// H(t, x, y, z) on J^1 R^K together with the bounds the estimates consume.
///
/// `support_radius_a` is the radius outside which H is independent of y.
/// When `y_compact` is set H actually vanishes there; the discounted
/// Hamiltonians z + h(y) keep the affine z term everywhere and clear it.
template <int K>
struct HamiltonianSpec {
    using EvalFn = std::function<double(double, const Vec<K>&, const Vec<K>&, double)>;
    using GradFn = std::function<HamGrad<K>(double, const Vec<K>&, const Vec<K>&, double)>;

    std::string name;
    EvalFn eval;
    GradFn grad;
    double support_radius_a = 0.0;
    bool y_compact = true;
    bool z_independent = false;
    double norm_H = 0.0;   // sup |H| (infinite when H has an affine z term)
    double norm_H0 = 0.0;  // sup |H(t, x, y, 0)|, so |H| <= norm_H0 + norm_dzH |z|
    double c_H = 0.0;
    double norm_dxH = 0.0;
    double norm_dyH = 0.0;
    double norm_dzH = 0.0;

    double operator()(double t, const JetPoint<K>& p) const { return eval(t, p.x, p.y, p.z); }
    HamGrad<K> gradient(double t, const JetPoint<K>& p) const { return grad(t, p.x, p.y, p.z); }
};

/// Central-difference gradient, step 1e-6 * (1 + |argument|).
template <int K>
typename HamiltonianSpec<K>::GradFn fd_gradient(typename HamiltonianSpec<K>::EvalFn f) {
    return [f](double t, const Vec<K>& x, const Vec<K>& y, double z) {
        HamGrad<K> g;
        for (int i = 0; i < K; ++i) {
            const double hx = 1e-6 * (1.0 + std::abs(x[i]));
            Vec<K> xp = x, xm = x;
            xp[i] += hx;
            xm[i] -= hx;
            g.dx[i] = (f(t, xp, y, z) - f(t, xm, y, z)) / (2.0 * hx);
            const double hy = 1e-6 * (1.0 + std::abs(y[i]));
            Vec<K> yp = y, ym = y;
            yp[i] += hy;
            ym[i] -= hy;
            g.dy[i] = (f(t, x, yp, z) - f(t, x, ym, z)) / (2.0 * hy);
        }
        const double hz = 1e-6 * (1.0 + std::abs(z));
        g.dz = (f(t, x, y, z + hz) - f(t, x, y, z - hz)) / (2.0 * hz);
        return g;
    };
}

// ---------------------------------------------------------------------------
// Smooth cutoffs

/// C^2 quintic bump: 1 on |r| <= r0, 0 on |r| >= r1.
struct Bump {
    double r0 = 1.0;
    double r1 = 2.0;

    // value, first and second derivative with respect to r >= 0
    void eval(double r, double& b, double& db, double& d2b) const {
        const double ar = std::abs(r);
        if (ar <= r0) { b = 1.0; db = 0.0; d2b = 0.0; return; }
        if (ar >= r1) { b = 0.0; db = 0.0; d2b = 0.0; return; }
        const double w = r1 - r0;
        const double u = (ar - r0) / w;
        const double u2 = u * u;
        b = 1.0 - u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
        double d = -30.0 * u2 * (1.0 - u) * (1.0 - u) / w;
        double dd = -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (w * w);
        const double sgn = r < 0 ? -1.0 : 1.0;
        db = sgn * d;
        d2b = dd;
    }
    double operator()(double r) const {
        double b, db, d2b;
        eval(r, b, db, d2b);
        return b;
    }
};

// ---------------------------------------------------------------------------
// Built-in family (K = 1):  H = (1 + mu sin(omega x + phase)) * p(y) * bump(y) + kappa z

struct SeparableParams {
    std::vector<double> poly;  // p(y) = sum poly[i] y^i
    Bump bump{2.0, 3.0};
    double mu = 0.0;
    double omega = 1.0;
    double phase = 0.0;
    double kappa = 0.0;
};

namespace detail {

inline void poly_eval(const std::vector<double>& c, double y, double& p, double& dp, double& d2p) {
    p = dp = d2p = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        d2p = d2p * y + 2.0 * dp;
        dp = dp * y + p;
        p = p * y + c[i];
    }
}

// h(y) = p(y) b(y) with derivatives
inline void profile(const SeparableParams& P, double y, double& h, double& dh, double& d2h) {
    double p, dp, d2p, b, db, d2b;
    poly_eval(P.poly, y, p, dp, d2p);
    P.bump.eval(y, b, db, d2b);
    h = p * b;
    dh = dp * b + p * db;
    d2h = d2p * b + 2.0 * dp * db + p * d2b;
}

}  // namespace detail

inline HamiltonianSpec<1> separable_hamiltonian(const std::string& name, const SeparableParams& P) {
    HamiltonianSpec<1> H;
    H.name = name;
    H.eval = [P](double, const Vec<1>& x, const Vec<1>& y, double z) {
        double h, dh, d2h;
        detail::profile(P, y[0], h, dh, d2h);
        const double m = 1.0 + P.mu * std::sin(P.omega * x[0] + P.phase);
        return m * h + P.kappa * z;
    };
    H.grad = [P](double, const Vec<1>& x, const Vec<1>& y, double) {
        double h, dh, d2h;
        detail::profile(P, y[0], h, dh, d2h);
        const double arg = P.omega * x[0] + P.phase;
        const double m = 1.0 + P.mu * std::sin(arg);
        const double dm = P.mu * P.omega * std::cos(arg);
        HamGrad<1> g;
        g.dx[0] = dm * h;
        g.dy[0] = m * dh;
        g.dz = P.kappa;
        return g;
    };
    H.support_radius_a = P.bump.r1;
    H.y_compact = (P.kappa == 0.0);
    H.z_independent = (P.kappa == 0.0);

    // Sup norms by dense sampling of the closed-form derivatives; the x factor
    // is periodic so one period suffices.
    const int ny = 4001;
    const int nx = P.mu != 0.0 ? 257 : 1;
    double sH = 0, sHx = 0, sHy = 0, sD = 0, sD2 = 0;
    for (int i = 0; i < nx; ++i) {
        const double arg = 2.0 * M_PI * i / nx;
        const double m = 1.0 + P.mu * std::sin(arg);
        const double dm = P.mu * P.omega * std::cos(arg);
        const double d2m = -P.mu * P.omega * P.omega * std::sin(arg);
        for (int j = 0; j < ny; ++j) {
            const double y = -P.bump.r1 + 2.0 * P.bump.r1 * j / (ny - 1);
            double h, dh, d2h;
            detail::profile(P, y, h, dh, d2h);
            sH = std::max(sH, std::abs(m * h));
            sHx = std::max(sHx, std::abs(dm * h));
            sHy = std::max(sHy, std::abs(m * dh));
            const double hx = dm * h, hy = m * dh;
            sD = std::max(sD, std::sqrt(hx * hx + hy * hy + P.kappa * P.kappa));
            const double hxx = d2m * h, hxy = dm * dh, hyy = m * d2h;
            sD2 = std::max(sD2, std::sqrt(hxx * hxx + 2.0 * hxy * hxy + hyy * hyy));
        }
    }
    const double safety = 1.001;
    H.norm_H = P.kappa != 0.0 ? std::numeric_limits<double>::infinity() : safety * sH;
    H.norm_H0 = safety * sH;
    H.norm_dxH = safety * sHx;
    H.norm_dyH = safety * sHy;
    H.norm_dzH = std::abs(P.kappa);
    H.c_H = safety * std::max(sD, sD2);
    return H;
}

inline HamiltonianSpec<1> zero_hamiltonian() {
    return separable_hamiltonian("zero", SeparableParams{{}, Bump{0.0, 0.0}});
}

// ---------------------------------------------------------------------------
// Generic-K members used by the dimension-free parts of the library.

/// H = b(|y|) |y|^2 / 2 + kappa z in any dimension.
template <int K>
HamiltonianSpec<K> radial_quadratic_hamiltonian(Bump bump, double kappa = 0.0) {
    HamiltonianSpec<K> H;
    H.name = "radial-quadratic";
    H.eval = [bump, kappa](double, const Vec<K>&, const Vec<K>& y, double z) {
        const double r = norm<K>(y);
        return bump(r) * 0.5 * r * r + kappa * z;
    };
    H.grad = [bump, kappa](double, const Vec<K>&, const Vec<K>& y, double) {
        const double r = norm<K>(y);
        double b, db, d2b;
        bump.eval(r, b, db, d2b);
        HamGrad<K> g;
        // d/dy [b(r) r^2/2] = (b + db r / 2) y
        const double f = b + 0.5 * db * r;
        for (int i = 0; i < K; ++i) g.dy[i] = f * y[i];
        g.dz = kappa;
        return g;
    };
    H.support_radius_a = bump.r1;
    H.y_compact = kappa == 0.0;
    H.z_independent = kappa == 0.0;
    double s = 0, sd = 0, sd2 = 0;
    for (int j = 0; j <= 4000; ++j) {
        const double r = bump.r1 * j / 4000.0;
        double b, db, d2b;
        bump.eval(r, b, db, d2b);
        s = std::max(s, b * 0.5 * r * r);
        const double g = (b + 0.5 * db * r) * r;
        sd = std::max(sd, std::abs(g));
        // radial second derivative and tangential curvature g/r
        const double grr = b + 2.0 * db * r + 0.5 * d2b * r * r;
        const double gtt = b + 0.5 * db * r;
        sd2 = std::max(sd2, std::sqrt(grr * grr + (K - 1) * gtt * gtt));
    }
    H.norm_H = kappa != 0.0 ? std::numeric_limits<double>::infinity() : 1.001 * s;
    H.norm_H0 = 1.001 * s;
    H.norm_dyH = 1.001 * sd;
    H.norm_dxH = 0.0;
    H.norm_dzH = std::abs(kappa);
    H.c_H = 1.001 * std::max(std::sqrt(sd * sd + kappa * kappa), sd2);
    return H;
}

/// Sampling box used to estimate the bounds of a user-supplied Hamiltonian.
struct SampleBox {
    double t_lo = 0.0, t_hi = 1.0;
    double x_lo = -3.0, x_hi = 3.0;
    double y_lo = -3.0, y_hi = 3.0;
    double z_lo = -3.0, z_hi = 3.0;
};

/// Fills norm_* and c_H by random sampling of `eval`/`grad`; second
/// derivatives by central differences of `grad`.
template <int K>
void estimate_bounds(HamiltonianSpec<K>& H, const SampleBox& box, int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto lerp = [&](double a, double b) { return a + (b - a) * U(rng); };
    double sH = 0, sH0 = 0, sx = 0, sy = 0, sz = 0, sD = 0, sD2 = 0;
    constexpr int D = 2 * K + 1;
    for (int n = 0; n < samples; ++n) {
        const double t = lerp(box.t_lo, box.t_hi);
        JetPoint<K> p;
        for (int i = 0; i < K; ++i) {
            p.x[i] = lerp(box.x_lo, box.x_hi);
            p.y[i] = lerp(box.y_lo, box.y_hi);
        }
        p.z = lerp(box.z_lo, box.z_hi);
        sH = std::max(sH, std::abs(H(t, p)));
        sH0 = std::max(sH0, std::abs(H.eval(t, p.x, p.y, 0.0)));
        const auto g = H.gradient(t, p);
        double d2 = g.dz * g.dz;
        for (int i = 0; i < K; ++i) {
            sx = std::max(sx, std::abs(g.dx[i]));
            sy = std::max(sy, std::abs(g.dy[i]));
            d2 += g.dx[i] * g.dx[i] + g.dy[i] * g.dy[i];
        }
        sz = std::max(sz, std::abs(g.dz));
        sD = std::max(sD, std::sqrt(d2));
        double fro = 0.0;
        for (int c = 0; c < D; ++c) {
            const double h = 1e-5 * (1.0 + std::abs(p[c]));
            JetPoint<K> pp = p, pm = p;
            pp[c] += h;
            pm[c] -= h;
            const auto gp = H.gradient(t, pp), gm = H.gradient(t, pm);
            for (int i = 0; i < K; ++i) {
                const double a = (gp.dx[i] - gm.dx[i]) / (2 * h);
                const double b = (gp.dy[i] - gm.dy[i]) / (2 * h);
                fro += a * a + b * b;
            }
            const double cz = (gp.dz - gm.dz) / (2 * h);
            fro += cz * cz;
        }
        sD2 = std::max(sD2, std::sqrt(fro));
    }
    const double safety = 1.05;
    H.norm_H = safety * sH;
    H.norm_H0 = safety * sH0;
    H.norm_dxH = safety * sx;
    H.norm_dyH = safety * sy;
    H.norm_dzH = safety * sz;
    H.c_H = safety * std::max(sD, sD2);
}

/// Random smooth Hamiltonian with genuine t, x, y and z dependence and compact
/// y-support, used by the property suites:
///   H = (1 + a t) (1 + mu sin(w x + ph)) p(y) b(y) (1 + g tanh(z)).
inline HamiltonianSpec<1> random_bump_hamiltonian(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double a = 0.3 * U(rng);
    const double mu = 0.3 * U(rng);
    const double w = 1.0 + 0.5 * U(rng);
    const double ph = 3.0 * U(rng);
    const double g = 0.3 * U(rng);
    std::vector<double> poly = {0.2 * U(rng), 0.5 * U(rng), 0.5 + 0.3 * U(rng), 0.2 * U(rng)};
    const Bump bump{1.5, 2.5};
    auto parts = [=](double t, double x, double y, double z, double out[8]) {
        double p, dp, d2p, b, db, d2b;
        detail::poly_eval(poly, y, p, dp, d2p);
        bump.eval(y, b, db, d2b);
        const double T = 1.0 + a * t;
        const double M = 1.0 + mu * std::sin(w * x + ph), dM = mu * w * std::cos(w * x + ph);
        const double th = std::tanh(z);
        const double Z = 1.0 + g * th, dZ = g * (1.0 - th * th);
        out[0] = T * M * p * b * Z;
        out[1] = T * dM * p * b * Z;
        out[2] = T * M * (dp * b + p * db) * Z;
        out[3] = T * M * p * b * dZ;
    };
    HamiltonianSpec<1> H;
    H.name = "random-bump-" + std::to_string(seed);
    H.eval = [parts](double t, const Vec<1>& x, const Vec<1>& y, double z) {
        double o[8];
        parts(t, x[0], y[0], z, o);
        return o[0];
    };
    H.grad = [parts](double t, const Vec<1>& x, const Vec<1>& y, double z) {
        double o[8];
        parts(t, x[0], y[0], z, o);
        HamGrad<1> gr;
        gr.dx[0] = o[1];
        gr.dy[0] = o[2];
        gr.dz = o[3];
        return gr;
    };
    H.support_radius_a = bump.r1;
    H.y_compact = true;
    H.z_independent = false;
    SampleBox box;
    box.y_lo = -bump.r1;
    box.y_hi = bump.r1;
    box.x_lo = 0.0;
    box.x_hi = 2.0 * M_PI / w;
    estimate_bounds(H, box, 20000, seed ^ 0x9e3779b9u);
    return H;
}

// ---------------------------------------------------------------------------
// Registry (K = 1). Parameters come from a flat name -> value map so the CLI
// can pass JSON objects straight through.

using ParamMap = std::map<std::string, double>;

inline double param(const ParamMap& m, const std::string& key, double dflt) {
    auto it = m.find(key);
    return it == m.end() ? dflt : it->second;
}

inline std::vector<std::string> hamiltonian_keys() {
    return {"zero", "discount", "discount-nonconvex", "transport-bump", "quadratic-bump",
            "modulated-nonconvex"};
}

/// Double-well profile eps (y^4/4 - y^2/2): concave on |y| < 1/sqrt(3).
inline std::vector<double> double_well(double eps) { return {0.0, 0.0, -0.5 * eps, 0.0, 0.25 * eps}; }

inline HamiltonianSpec<1> make_hamiltonian(const std::string& key, const ParamMap& p = {}) {
    SeparableParams P;
    const bool narrow = key == "modulated-nonconvex";
    P.bump = Bump{param(p, "r0", narrow ? 1.2 : 2.0), param(p, "r1", narrow ? 1.8 : 3.0)};
    if (!(P.bump.r0 >= 0.0 && P.bump.r1 > P.bump.r0))
        throw Error(ErrorKind::config, "hamiltonian bump radii need 0 <= r0 < r1");
    if (key == "zero") return zero_hamiltonian();
    if (key == "discount") {
        P.poly = {0.0, 0.0, 0.5 * param(p, "c", 1.0)};
        P.kappa = 1.0;
    } else if (key == "discount-nonconvex") {
        P.poly = double_well(param(p, "eps", 1.0));
        P.kappa = 1.0;
    } else if (key == "transport-bump") {
        P.poly = {0.0, param(p, "c", 1.0)};
    } else if (key == "quadratic-bump") {
        P.poly = {0.0, 0.0, 0.5 * param(p, "c", 1.0)};
    } else if (key == "modulated-nonconvex") {
        P.poly = double_well(param(p, "eps", 1.5));
        P.mu = param(p, "mu", 0.8);
        P.omega = param(p, "omega", 3.0);
        P.phase = param(p, "phase", 0.0);
    } else {
        throw Error(ErrorKind::config, "unknown hamiltonian key '" + key + "'");
    }
    return separable_hamiltonian(key, P);
}

}  // namespace cmhj
