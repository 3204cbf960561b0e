#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "cmhj/errors.hpp"
#include "cmhj/hamiltonian.hpp"
#include "cmhj/jet.hpp"
#include "cmhj/report.hpp"

namespace cmhj {

inline constexpr double kMagnitudeCap = 1e8;
inline constexpr int kDefaultFlowSteps = 64;

/// Characteristic vector field
///   x' = H_y,  y' = -H_x - y H_z,  z' = y . H_y - H.
template <int K>
JetPoint<K> contact_vector_field(const HamiltonianSpec<K>& H, double t, const JetPoint<K>& p) {
    const double h = H(t, p);
    const HamGrad<K> g = H.gradient(t, p);
    JetPoint<K> d;
    d.x = g.dy;
    for (int i = 0; i < K; ++i) d.y[i] = -g.dx[i] - p.y[i] * g.dz;
    d.z = dot<K>(p.y, g.dy) - h;
    if (!std::isfinite(h) || !d.finite())
        throw Error(ErrorKind::evaluation, "non-finite Hamiltonian data at t=" + std::to_string(t) + " " + p.str());
    return d;
}

namespace detail {

template <int K>
inline JetPoint<K> axpy(const JetPoint<K>& p, double a, const JetPoint<K>& d) {
    JetPoint<K> r;
    for (int i = 0; i < JetPoint<K>::dim; ++i) r[i] = p[i] + a * d[i];
    return r;
}

template <int K>
inline JetPoint<K> rk4_step(const HamiltonianSpec<K>& H, double t, double h, const JetPoint<K>& p) {
    const JetPoint<K> k1 = contact_vector_field(H, t, p);
    const JetPoint<K> k2 = contact_vector_field(H, t + 0.5 * h, axpy(p, 0.5 * h, k1));
    const JetPoint<K> k3 = contact_vector_field(H, t + 0.5 * h, axpy(p, 0.5 * h, k2));
    const JetPoint<K> k4 = contact_vector_field(H, t + h, axpy(p, h, k3));
    JetPoint<K> r;
    for (int i = 0; i < JetPoint<K>::dim; ++i)
        r[i] = p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

}  // namespace detail

/// phi^{s,t}(p) by fixed-step RK4. Works for t < s as well (backward flow).
/// `steps` <= 0 selects the default of 64 steps.
template <int K>
JetPoint<K> flow_map(const HamiltonianSpec<K>& H, TimeInterval iv, const JetPoint<K>& p, int steps = 0) {
    if (steps <= 0) steps = kDefaultFlowSteps;
    if (iv.t == iv.s) return p;
    const double h = (iv.t - iv.s) / steps;
    JetPoint<K> q = p;
    for (int n = 0; n < steps; ++n) {
        q = detail::rk4_step(H, iv.s + n * h, h, q);
        if (!(q.max_abs() <= kMagnitudeCap))
            throw Error(ErrorKind::integration, "characteristic from " + p.str() + " exceeded magnitude cap at t=" +
                                                    std::to_string(iv.s + (n + 1) * h));
    }
    return q;
}

/// Same integration, returning every RK4 node (steps + 1 states).
template <int K>
std::vector<JetPoint<K>> flow_trajectory(const HamiltonianSpec<K>& H, TimeInterval iv, const JetPoint<K>& p,
                                         int steps = 0) {
    if (steps <= 0) steps = kDefaultFlowSteps;
    std::vector<JetPoint<K>> out;
    out.reserve(steps + 1);
    out.push_back(p);
    const double h = (iv.t - iv.s) / steps;
    for (int n = 0; n < steps; ++n) {
        out.push_back(detail::rk4_step(H, iv.s + n * h, h, out.back()));
        if (!(out.back().max_abs() <= kMagnitudeCap))
            throw Error(ErrorKind::integration, "characteristic from " + p.str() + " exceeded magnitude cap");
    }
    return out;
}

/// Maximal step length log 2 / ((2 + a) c_H); +infinity when c_H = 0.
template <int K>
double delta_H(const HamiltonianSpec<K>& H) {
    if (H.c_H <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log(2.0) / ((2.0 + H.support_radius_a) * H.c_H);
}

/// Central-difference Jacobian of phi^{s,t} at p, step 1e-5 (1 + |p_i|).
template <int K>
Eigen::MatrixXd flow_jacobian(const HamiltonianSpec<K>& H, TimeInterval iv, const JetPoint<K>& p, int steps = 0) {
    constexpr int D = JetPoint<K>::dim;
    Eigen::MatrixXd J(D, D);
    for (int c = 0; c < D; ++c) {
        const double h = 1e-5 * (1.0 + std::abs(p[c]));
        JetPoint<K> pp = p, pm = p;
        pp[c] += h;
        pm[c] -= h;
        const JetPoint<K> fp = flow_map(H, iv, pp, steps), fm = flow_map(H, iv, pm, steps);
        for (int r = 0; r < D; ++r) J(r, c) = (fp[r] - fm[r]) / (2.0 * h);
    }
    return J;
}

/// Estimates max ||1 - d phi^{s,t}|| (spectral norm) over random points with
/// |x|, |z| <= 2 and |y| <= a + 1/2.
template <int K>
CheckReport flow_contraction_check(const HamiltonianSpec<K>& H, TimeInterval iv, int samples, unsigned seed = 1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double yr = H.support_radius_a + 0.5;
    double worst = 0.0;
    constexpr int D = JetPoint<K>::dim;
    for (int n = 0; n < samples; ++n) {
        JetPoint<K> p;
        for (int i = 0; i < K; ++i) {
            p.x[i] = 2.0 * U(rng);
            p.y[i] = yr * U(rng);
        }
        p.z = 2.0 * U(rng);
        const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(D, D) - flow_jacobian(H, iv, p);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        worst = std::max(worst, svd.singularValues()(0));
    }
    CheckReport r;
    r.name = "flow_contraction";
    r.value = worst;
    r.threshold = 1.0;
    r.pass = worst < 1.0;
    r.samples = static_cast<std::size_t>(samples);
    return r;
}

}  // namespace cmhj
