#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmhj/generating_function.hpp"
#include "cmhj/hamiltonian.hpp"

using namespace cmhj;

namespace {

// Simpson on [0, t] of e^{-s} h(e^s Y) with h(y) = c y^2 / 2 (plateau), plus z (1 - e^{-t}).
double discount_closed_form(double c, double Y, double z, double t) {
    // integral of e^{-s} c e^{2s} Y^2 / 2 = c Y^2 (e^t - 1) / 2
    return 0.5 * c * Y * Y * (std::exp(t) - 1.0) + z * (1.0 - std::exp(-t));
}

}  // namespace

TEST(GeneratingFunction, DiscountExampleClosedForm) {
    const double c = 0.8;
    const auto H = make_hamiltonian("discount", {{"c", c}, {"r0", 3.0}, {"r1", 4.0}});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 25; ++k) {
        const double t = 0.5 * delta_H(H) * std::abs(U(rng));
        const double Y = 1.5 * U(rng), z = U(rng), x = U(rng);
        const double phi = phi_value<1>(H, {x}, {Y}, z, TimeInterval{0.0, t});
        EXPECT_NEAR(phi, discount_closed_form(c, Y, z, t), 1e-8) << "t=" << t << " Y=" << Y;
    }
}

TEST(GeneratingFunction, ZeroGapIsZero) {
    const auto H = random_bump_hamiltonian(1);
    const auto v = phi_eval<1>(H, GenFuncQuery<1>{{0.3}, {0.2}, 1.0, TimeInterval{0.4, 0.4}});
    EXPECT_EQ(v.phi, 0.0);
    EXPECT_EQ(v.y_source[0], 0.2);
}

TEST(GeneratingFunction, LongStepRejected) {
    const auto H = random_bump_hamiltonian(1);
    try {
        phi_value<1>(H, {0.0}, {0.0}, 0.0, TimeInterval{0.0, 2.0 * delta_H(H)});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
}

TEST(GeneratingFunction, EndpointAgreesWithActionQuadrature) {
    const auto H = random_bump_hamiltonian(7);
    const TimeInterval iv{0.1, 0.1 + 0.8 * delta_H(H)};
    for (double Y : {-1.0, 0.3, 1.2}) {
        const auto g = phi_eval<1>(H, GenFuncQuery<1>{{0.5}, {Y}, -0.3, iv});
        const double q = phi_by_action_quadrature(H, iv, JetPoint<1>{{0.5}, g.y_source, -0.3});
        EXPECT_NEAR(g.phi, q, 1e-7);
        EXPECT_NEAR(g.endpoint.y[0], Y, 1e-8);
    }
}

TEST(GeneratingFunction, DerivativeIdentitiesOnRandomBumps) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (unsigned seed = 1; seed <= 4; ++seed) {
        const auto H = random_bump_hamiltonian(seed);
        const double d = delta_H(H);
        const double s = 0.2 * std::abs(U(rng));
        const GenFuncQuery<1> q{{U(rng)}, {1.5 * U(rng)}, U(rng), TimeInterval{s, s + d * (0.3 + 0.5 * std::abs(U(rng)))}};
        EXPECT_TRUE(phi_time_derivative_check(H, q).pass);
        EXPECT_TRUE(phi_s_derivative_check(H, q).pass);
        EXPECT_TRUE(phi_gradient_check(H, q).pass);
    }
}

// For H = c y (transport) Phi = c (t - s) Y: X - x = c (t - s), Z = z.
TEST(GeneratingFunction, TransportLinear) {
    const auto H = make_hamiltonian("transport-bump", {{"c", 2.0}});
    const double phi = phi_value<1>(H, {0.0}, {0.5}, 3.0, TimeInterval{0.0, 0.5 * delta_H(H)});
    EXPECT_NEAR(phi, 2.0 * 0.5 * delta_H(H) * 0.5, 1e-12);
}
