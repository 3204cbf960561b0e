#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "cmhj/contact_flow.hpp"
#include "cmhj/errors.hpp"
#include "cmhj/hamiltonian.hpp"
#include "cmhj/jet.hpp"
#include "cmhj/report.hpp"

namespace cmhj {

template <int K>
struct GenFuncQuery {
    Vec<K> x{};  // source position
    Vec<K> Y{};  // target momentum
    double z = 0.0;  // source value
    TimeInterval iv;
};

template <int K>
struct GenFuncValue {
    double phi = 0.0;
    Vec<K> y_source{};
    JetPoint<K> endpoint;
    int iterations = 0;
};

struct PhiOptions {
    int steps = 0;          // RK4 steps, 0 = default
    int max_iter = 50;
    bool allow_long = false;  // skip the t - s < delta_H precondition
};

/// Phi^{s,t}(x, Y, z) by shooting: Newton on y -> momentum(phi^{s,t}(x,y,z)) - Y
/// from y = Y with a central-difference Jacobian, then
///   Phi = (X - x).Y - (Z - z).
template <int K>
GenFuncValue<K> phi_eval(const HamiltonianSpec<K>& H, const GenFuncQuery<K>& q, const PhiOptions& opt = {}) {
    const double gap = q.iv.t - q.iv.s;
    if (!opt.allow_long && !(std::abs(gap) < delta_H(H)))
        throw Error(ErrorKind::domain, "generating function needs |t - s| < delta_H (gap " + std::to_string(gap) +
                                           ", delta_H " + std::to_string(delta_H(H)) + ")");
    GenFuncValue<K> out;
    if (gap == 0.0) {
        out.y_source = q.Y;
        out.endpoint = JetPoint<K>{q.x, q.Y, q.z};
        return out;
    }
    const double tol = 1e-9 * (1.0 + norm<K>(q.Y));
    JetPoint<K> src{q.x, q.Y, q.z};
    JetPoint<K> end = flow_map(H, q.iv, src, opt.steps);
    auto residual = [&](const JetPoint<K>& e) { return norm<K>(e.y - q.Y); };
    double res = residual(end);
    int it = 0;
    while (res > tol) {
        if (it >= opt.max_iter)
            throw Error(ErrorKind::shooting, "no convergence after " + std::to_string(opt.max_iter) +
                                                 " Newton iterations (residual " + std::to_string(res) + ") for " +
                                                 src.str());
        Eigen::Matrix<double, K, K> J;
        for (int c = 0; c < K; ++c) {
            const double h = 1e-5 * (1.0 + std::abs(src.y[c]));
            JetPoint<K> pp = src, pm = src;
            pp.y[c] += h;
            pm.y[c] -= h;
            const JetPoint<K> ep = flow_map(H, q.iv, pp, opt.steps), em = flow_map(H, q.iv, pm, opt.steps);
            for (int r = 0; r < K; ++r) J(r, c) = (ep.y[r] - em.y[r]) / (2.0 * h);
        }
        Eigen::FullPivLU<Eigen::Matrix<double, K, K>> lu(J);
        if (lu.rank() < K || std::abs(lu.determinant()) < 1e-14)
            throw Error(ErrorKind::conditioning, "singular shooting Jacobian at " + src.str());
        Eigen::Matrix<double, K, 1> g;
        for (int r = 0; r < K; ++r) g(r) = end.y[r] - q.Y[r];
        const Eigen::Matrix<double, K, 1> d = lu.solve(g);
        // damped step: halve until the residual decreases
        double lambda = 1.0;
        for (int b = 0; b < 12; ++b) {
            JetPoint<K> trial = src;
            for (int r = 0; r < K; ++r) trial.y[r] -= lambda * d(r);
            const JetPoint<K> e = flow_map(H, q.iv, trial, opt.steps);
            const double rr = residual(e);
            if (rr < res || b == 11) {
                src = trial;
                end = e;
                res = rr;
                break;
            }
            lambda *= 0.5;
        }
        ++it;
    }
    out.y_source = src.y;
    out.endpoint = end;
    out.iterations = it;
    out.phi = dot<K>(end.x - q.x, q.Y) - (end.z - q.z);
    return out;
}

template <int K>
double phi_value(const HamiltonianSpec<K>& H, const Vec<K>& x, const Vec<K>& Y, double z, TimeInterval iv,
                 const PhiOptions& opt = {}) {
    return phi_eval(H, GenFuncQuery<K>{x, Y, z, iv}, opt).phi;
}

namespace detail {
inline double fd_step(double arg) { return 1e-5 * (1.0 + std::abs(arg)); }
}  // namespace detail

/// d/dt Phi^{s,t}(x, Y, z) at fixed (x, Y, z) against H(t, phi^{s,t}(q)).
template <int K>
CheckReport phi_time_derivative_check(const HamiltonianSpec<K>& H, const GenFuncQuery<K>& q,
                                      const PhiOptions& opt = {}) {
    const auto base = phi_eval(H, q, opt);
    const double h = detail::fd_step(q.iv.t);
    GenFuncQuery<K> qp = q, qm = q;
    qp.iv.t += h;
    qm.iv.t -= h;
    const double dphi = (phi_eval(H, qp, opt).phi - phi_eval(H, qm, opt).phi) / (2.0 * h);
    const double rhs = H(q.iv.t, base.endpoint);
    CheckReport r;
    r.name = "phi_time_derivative";
    r.value = std::abs(dphi - rhs);
    r.threshold = 1e-4;
    r.pass = r.value <= r.threshold;
    r.samples = 1;
    return r;
}

/// d/ds Phi^{s,t}(x, Y, z) at fixed (x, Y, z) against
/// H(s, phi^{t,s}(r)) (d_z Phi - 1), where phi^{t,s}(r) is the shot source jet.
template <int K>
CheckReport phi_s_derivative_check(const HamiltonianSpec<K>& H, const GenFuncQuery<K>& q,
                                   const PhiOptions& opt = {}) {
    const auto base = phi_eval(H, q, opt);
    const double h = detail::fd_step(q.iv.s);
    GenFuncQuery<K> qp = q, qm = q;
    qp.iv.s += h;
    qm.iv.s -= h;
    const double dphi_ds = (phi_eval(H, qp, opt).phi - phi_eval(H, qm, opt).phi) / (2.0 * h);
    const double hz = detail::fd_step(q.z);
    GenFuncQuery<K> zp = q, zm = q;
    zp.z += hz;
    zm.z -= hz;
    const double dphi_dz = (phi_eval(H, zp, opt).phi - phi_eval(H, zm, opt).phi) / (2.0 * hz);
    const JetPoint<K> src{q.x, base.y_source, q.z};
    const double rhs = H(q.iv.s, src) * (dphi_dz - 1.0);
    CheckReport r;
    r.name = "phi_s_derivative";
    r.value = std::abs(dphi_ds - rhs);
    r.threshold = 1e-4;
    r.pass = r.value <= r.threshold;
    r.samples = 1;
    return r;
}

/// Residuals of the implicit relations X - x = d_Y Phi and
/// Y - y = -d_x Phi - y d_z Phi, by central differences of phi_eval.
template <int K>
CheckReport phi_gradient_check(const HamiltonianSpec<K>& H, const GenFuncQuery<K>& q, const PhiOptions& opt = {}) {
    const auto base = phi_eval(H, q, opt);
    const double hz = detail::fd_step(q.z);
    GenFuncQuery<K> zp = q, zm = q;
    zp.z += hz;
    zm.z -= hz;
    const double dz = (phi_eval(H, zp, opt).phi - phi_eval(H, zm, opt).phi) / (2.0 * hz);
    double worst = 0.0;
    for (int i = 0; i < K; ++i) {
        const double hY = detail::fd_step(q.Y[i]);
        GenFuncQuery<K> a = q, b = q;
        a.Y[i] += hY;
        b.Y[i] -= hY;
        const double dY = (phi_eval(H, a, opt).phi - phi_eval(H, b, opt).phi) / (2.0 * hY);
        worst = std::max(worst, std::abs(dY - (base.endpoint.x[i] - q.x[i])));
        const double hx = detail::fd_step(q.x[i]);
        a = q;
        b = q;
        a.x[i] += hx;
        b.x[i] -= hx;
        const double dx = (phi_eval(H, a, opt).phi - phi_eval(H, b, opt).phi) / (2.0 * hx);
        const double expect = -(q.Y[i] - base.y_source[i]) - base.y_source[i] * dz;
        worst = std::max(worst, std::abs(dx - expect));
    }
    CheckReport r;
    r.name = "phi_gradient";
    r.value = worst;
    r.threshold = 1e-4;
    r.pass = worst <= r.threshold;
    r.samples = 1;
    return r;
}

/// Composite Simpson quadrature of  x'(tau) . (Y - y(tau)) + H(tau, phi(tau))
/// along the characteristic from `src` (the shot source jet) over iv.
/// `n` must be even. Reproduces Phi^{s,t} independently of the endpoint formula.
template <int K>
double phi_by_action_quadrature(const HamiltonianSpec<K>& H, TimeInterval iv, const JetPoint<K>& src, int n = 2048) {
    if (n % 2) ++n;
    const auto traj = flow_trajectory(H, iv, src, n);
    const Vec<K> Y = traj.back().y;
    const double h = (iv.t - iv.s) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double tau = iv.s + i * h;
        const auto g = H.gradient(tau, traj[i]);
        const double f = dot<K>(g.dy, Y - traj[i].y) + H(tau, traj[i]);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * f;
    }
    return sum * h / 3.0;
}

/// Composite Simpson quadrature of  x' . y - H  along the characteristic from p.
template <int K>
double action_integral(const HamiltonianSpec<K>& H, TimeInterval iv, const JetPoint<K>& p, int n = 2048) {
    if (n % 2) ++n;
    const auto traj = flow_trajectory(H, iv, p, n);
    const double h = (iv.t - iv.s) / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double tau = iv.s + i * h;
        const auto g = H.gradient(tau, traj[i]);
        const double f = dot<K>(g.dy, traj[i].y) - H(tau, traj[i]);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * f;
    }
    return sum * h / 3.0;
}

}  // namespace cmhj
