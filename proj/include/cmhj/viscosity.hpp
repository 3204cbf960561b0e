#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmhj/errors.hpp"
#include "cmhj/grid_function.hpp"
#include "cmhj/hamiltonian.hpp"

namespace cmhj {

struct TimeSeries {
    std::vector<double> times;
    std::vector<GridFunction> frames;

    /// Frame at time t (exact match within 1e-12 required).
    const GridFunction& at(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - t) <= 1e-12 * (1.0 + std::abs(t))) return frames[i];
        throw Error(ErrorKind::domain, "no frame at t=" + std::to_string(t));
    }
};

struct LaxFriedrichsReport {
    double dt = 0.0;
    int steps = 0;
    double courant = 0.0;
};

/// Global Lax-Friedrichs scheme
///   u^{n+1}_j = u_j - dt H(t, x_j, (u_{j+1} - u_{j-1}) / 2dx, u_j) + (theta/2)(u_{j+1} - 2u_j + u_{j-1}),
///   theta = dt ||d_y H|| / dx,
/// on the nodes of spacing `dx` spanning [v.lo, v.hi]; ghost values by linear
/// extrapolation. `cfl` is the Courant number theta and must not exceed 0.45;
/// dt is further limited by dt ||d_z H|| <= 0.5 and shortened to land on every
/// requested output time.
inline TimeSeries lax_friedrichs_solve(const HamiltonianSpec<1>& H, const GridFunction& v, double T, double dx,
                                       double cfl, std::vector<double> out_times = {},
                                       LaxFriedrichsReport* rep = nullptr) {
    if (!(cfl > 0.0) || cfl > 0.45 + 1e-15)
        throw Error(ErrorKind::config, "Courant number must lie in (0, 0.45] (dt <= 0.9 dx / (2 ||d_y H||))");
    if (!(dx > 0.0) || !(T >= 0.0)) throw Error(ErrorKind::config, "need dx > 0 and T >= 0");
    const int n = static_cast<int>(std::lround((v.hi - v.lo) / dx)) + 1;
    if (n < 3 || std::abs((n - 1) * dx - (v.hi - v.lo)) > 1e-9 * (v.hi - v.lo))
        throw Error(ErrorKind::config, "dx must divide the domain length");
    double dt = std::numeric_limits<double>::infinity();
    if (H.norm_dyH > 0) dt = cfl * dx / H.norm_dyH;
    if (H.norm_dzH > 0) dt = std::min(dt, 0.5 / H.norm_dzH);
    if (!std::isfinite(dt)) dt = T > 0 ? T : 1.0;
    if (out_times.empty()) out_times = {T};
    std::sort(out_times.begin(), out_times.end());
    for (double t : out_times)
        if (t < 0 || t > T + 1e-12) throw Error(ErrorKind::config, "output time outside [0, T]");

    std::vector<double> u(n), next(n);
    for (int j = 0; j < n; ++j) u[j] = v(v.lo + j * dx);
    TimeSeries ts;
    double t = 0.0;
    int steps = 0;
    std::size_t k = 0;
    auto emit = [&] {
        while (k < out_times.size() && std::abs(out_times[k] - t) <= 1e-12 * (1.0 + T)) {
            ts.times.push_back(out_times[k]);
            ts.frames.emplace_back(v.lo, v.hi, u, -1.0, v.extrapolation);
            ++k;
        }
    };
    emit();
    while (k < out_times.size()) {
        double h = std::min(dt, out_times[k] - t);
        if (h <= 0) h = dt;
        const double theta = H.norm_dyH * h / dx;
        for (int j = 0; j < n; ++j) {
            const double um = j > 0 ? u[j - 1] : 2.0 * u[0] - u[1];
            const double up = j + 1 < n ? u[j + 1] : 2.0 * u[n - 1] - u[n - 2];
            const double p = (up - um) / (2.0 * dx);
            const double hv = H.eval(t, {v.lo + j * dx}, {p}, u[j]);
            if (!std::isfinite(hv)) throw Error(ErrorKind::evaluation, "non-finite H in Lax-Friedrichs step");
            next[j] = u[j] - h * hv + 0.5 * theta * (up - 2.0 * u[j] + um);
        }
        std::swap(u, next);
        t = (std::abs(t + h - out_times[k]) <= 1e-12 * (1.0 + T)) ? out_times[k] : t + h;
        ++steps;
        emit();
    }
    if (rep) *rep = LaxFriedrichsReport{dt, steps, H.norm_dyH * dt / dx};
    return ts;
}

/// Convex profile h on [-R, R] for the discounted Hopf-Lax formula.
struct ConvexProfile {
    std::function<double(double)> h;
    std::function<double(double)> dh;
    double R = 1.0;
};

/// Legendre transform l(q) = max_{|p| <= R} (p q - h(p)) tabulated on the
/// range of h' and interpolated by cubic Hermite with l'(q) = argmax.
class LegendreTable {
public:
    explicit LegendreTable(const ConvexProfile& P, int n = 2001) : P_(P) {
        // convexity: second differences of h on [-R, R]
        const int m = 4001;
        const double hp = 2.0 * P.R / (m - 1);
        for (int i = 1; i + 1 < m; ++i) {
            const double p = -P.R + i * hp;
            const double d2 = P.h(p + hp) - 2.0 * P.h(p) + P.h(p - hp);
            if (d2 < -1e-12 * (1.0 + std::abs(P.h(p))))
                throw Error(ErrorKind::domain, "Hopf-Lax profile is not convex near p=" + std::to_string(p));
        }
        qlo_ = P.dh(-P.R);
        qhi_ = P.dh(P.R);
        n_ = n;
        q_.resize(n);
        l_.resize(n);
        dl_.resize(n);
        for (int i = 0; i < n; ++i) {
            q_[i] = qlo_ + (qhi_ - qlo_) * i / (n - 1);
            double pstar;
            l_[i] = maximize(q_[i], pstar);
            dl_[i] = pstar;
        }
    }

    /// Direct numerical maximization (golden section, unimodal by convexity).
    double maximize(double q, double& pstar) const {
        double a = -P_.R, b = P_.R;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        auto f = [&](double p) { return p * q - P_.h(p); };
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = f(c), fd = f(d);
        while (b - a > 1e-12 * (1.0 + P_.R)) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        pstar = 0.5 * (a + b);
        return f(pstar);
    }

    double operator()(double q) const {
        if (qhi_ <= qlo_) {
            double p;
            return maximize(q, p);
        }
        if (q < qlo_ || q > qhi_) {
            double p;
            return maximize(q, p);
        }
        const double hq = (qhi_ - qlo_) / (n_ - 1);
        int i = std::min(static_cast<int>((q - qlo_) / hq), n_ - 2);
        const double s = (q - q_[i]) / hq;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        return h00 * l_[i] + h10 * hq * dl_[i] + h01 * l_[i + 1] + h11 * hq * dl_[i + 1];
    }

private:
    ConvexProfile P_;
    double qlo_ = 0, qhi_ = 0;
    int n_ = 0;
    std::vector<double> q_, l_, dl_;
};

/// Viscosity solution of u_t + u + h(u_x) = 0 for convex h:
///   u(t, x) = min_y  int_0^t e^{-s} l(h'(e^s y)) ds + e^{-t} v(x - int_0^t h'(e^s y) ds),
/// minimized over a y grid on |y| <= R e^{-t} with golden-section refinement
/// around the best node.
class HopfLaxDiscount {
public:
    HopfLaxDiscount(const ConvexProfile& P, int quad_nodes = 128, int y_grid = 801)
        : P_(P), L_(P), nq_(quad_nodes + quad_nodes % 2), ny_(y_grid) {}

    double operator()(const std::function<double(double)>& v, double t, double x) const {
        if (t <= 0.0) return v(x);
        const double Y = P_.R * std::exp(-t);
        auto F = [&](double y) {
            double I = 0.0, D = 0.0;
            const double hs = t / nq_;
            for (int i = 0; i <= nq_; ++i) {
                const double s = i * hs;
                const double w = (i == 0 || i == nq_) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                const double q = P_.dh(std::exp(s) * y);
                I += w * std::exp(-s) * L_(q);
                D += w * q;
            }
            I *= hs / 3.0;
            D *= hs / 3.0;
            return I + std::exp(-t) * v(x - D);
        };
        int best = 0;
        double fb = std::numeric_limits<double>::infinity();
        const double hy = 2.0 * Y / (ny_ - 1);
        for (int j = 0; j < ny_; ++j) {
            const double f = F(-Y + j * hy);
            if (f < fb) {
                fb = f;
                best = j;
            }
        }
        double a = -Y + std::max(0, best - 1) * hy, b = -Y + std::min(ny_ - 1, best + 1) * hy;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = F(c), fd = F(d);
        for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = F(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = F(d);
            }
        }
        return std::min(fb, std::min(fc, fd));
    }

    const LegendreTable& legendre() const { return L_; }

private:
    ConvexProfile P_;
    LegendreTable L_;
    int nq_, ny_;
};

inline double hopf_lax_discount(const ConvexProfile& P, const std::function<double(double)>& v, double t, double x) {
    return HopfLaxDiscount(P)(v, t, x);
}

/// The convex profile h of the registry Hamiltonian "discount" (H = z + h(y)
/// on the bump plateau |y| <= r0); none for other keys.
inline std::optional<ConvexProfile> discount_profile(const std::string& key, const ParamMap& p = {}) {
    if (key != "discount") return std::nullopt;
    const double c = param(p, "c", 1.0);
    return ConvexProfile{[c](double y) { return 0.5 * c * y * y; }, [c](double y) { return c * y; },
                         param(p, "r0", 2.0)};
}

}  // namespace cmhj
