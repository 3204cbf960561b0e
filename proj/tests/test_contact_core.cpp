#include <gtest/gtest.h>

#include <cmath>

#include "cmhj/contact_flow.hpp"
#include "cmhj/hamiltonian.hpp"

using namespace cmhj;

// H = z + c y^2 / 2 on the bump plateau:
//   y = y0 e^{-t},  x = x0 + c y0 (1 - e^{-t}),
//   z = e^{-t} z0 + (c/2) y0^2 e^{-t} (1 - e^{-t}).
TEST(ContactFlow, DiscountQuadraticClosedForm) {
    const double c = 1.3;
    const auto H = make_hamiltonian("discount", {{"c", c}});
    for (double y0 : {-1.2, -0.3, 0.0, 0.7, 1.4}) {
        const double x0 = 0.4, z0 = -0.9, t = 0.8;
        const auto p = flow_map(H, TimeInterval{0.0, t}, JetPoint<1>{{x0}, {y0}, z0});
        const double e = std::exp(-t);
        EXPECT_NEAR(p.y[0], y0 * e, 1e-9);
        EXPECT_NEAR(p.x[0], x0 + c * y0 * (1 - e), 1e-9);
        EXPECT_NEAR(p.z, e * z0 + 0.5 * c * y0 * y0 * e * (1 - e), 1e-9);
    }
}

TEST(ContactFlow, ZeroHamiltonianIsIdentity) {
    const auto H = zero_hamiltonian();
    const JetPoint<1> p{{0.3}, {-2.0}, 5.0};
    const auto q = flow_map(H, TimeInterval{0.0, 3.0}, p);
    EXPECT_EQ(q.x[0], p.x[0]);
    EXPECT_EQ(q.y[0], p.y[0]);
    EXPECT_EQ(q.z, p.z);
    EXPECT_TRUE(std::isinf(delta_H(H)));
}

// Transport: H = c y b(y) with b = 1 near y: straight lines, z unchanged
// (y H_y - H = 0 on the plateau).
TEST(ContactFlow, TransportMovesAtConstantSpeed) {
    const auto H = make_hamiltonian("transport-bump", {{"c", 0.5}});
    const auto q = flow_map(H, TimeInterval{0.0, 2.0}, JetPoint<1>{{1.0}, {0.8}, 0.25});
    EXPECT_NEAR(q.x[0], 2.0, 1e-12);
    EXPECT_NEAR(q.y[0], 0.8, 1e-12);
    EXPECT_NEAR(q.z, 0.25, 1e-12);
}

TEST(ContactFlow, BackwardFlowInvertsForward) {
    const auto H = random_bump_hamiltonian(3);
    const JetPoint<1> p{{0.2}, {0.5}, -0.1};
    const auto q = flow_map(H, TimeInterval{0.1, 0.6}, p);
    const auto r = flow_map(H, TimeInterval{0.6, 0.1}, q);
    EXPECT_NEAR(r.x[0], p.x[0], 1e-8);
    EXPECT_NEAR(r.y[0], p.y[0], 1e-8);
    EXPECT_NEAR(r.z, p.z, 1e-8);
}

TEST(ContactFlow, TrajectoryEndsAtFlowMap) {
    const auto H = random_bump_hamiltonian(5);
    const JetPoint<1> p{{-0.4}, {1.1}, 0.3};
    const auto tr = flow_trajectory(H, TimeInterval{0.0, 0.5}, p, 32);
    ASSERT_EQ(tr.size(), 33u);
    const auto q = flow_map(H, TimeInterval{0.0, 0.5}, p, 32);
    EXPECT_EQ(tr.back().x[0], q.x[0]);
    EXPECT_EQ(tr.back().z, q.z);
}

TEST(ContactFlow, MagnitudeCapRaisesIntegrationError) {
    HamiltonianSpec<1> H;
    H.name = "blowup";
    H.eval = [](double, const Vec<1>&, const Vec<1>& y, double) { return -y[0] * y[0] * y[0]; };
    H.grad = [](double, const Vec<1>&, const Vec<1>& y, double) {
        HamGrad<1> g;
        g.dy[0] = -3 * y[0] * y[0];
        return g;
    };
    // dx/dt = -3 y^2 with y constant: fine; use z: dz/dt = y H_y - H = -2 y^3 -> large y blows the cap
    try {
        flow_map(H, TimeInterval{0.0, 1.0}, JetPoint<1>{{0.0}, {1e3}, 0.0});
        FAIL() << "expected integration error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::integration);
    }
}

TEST(Hamiltonian, BoundsDominateSampledDerivatives) {
    const auto H = make_hamiltonian("modulated-nonconvex");
    double gy = 0, gx = 0;
    for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
            const double x = -3 + 6.0 * i / 200, y = -2 + 4.0 * j / 200;
            const auto g = H.grad(0.0, {x}, {y}, 0.0);
            gx = std::max(gx, std::abs(g.dx[0]));
            gy = std::max(gy, std::abs(g.dy[0]));
        }
    EXPECT_LE(gx, H.norm_dxH);
    EXPECT_LE(gy, H.norm_dyH);
    EXPECT_GT(delta_H(H), 0.0);
    EXPECT_NEAR(delta_H(H), std::log(2.0) / ((2.0 + H.support_radius_a) * H.c_H), 1e-15);
}

TEST(Hamiltonian, GradientMatchesFiniteDifferences) {
    const auto H = random_bump_hamiltonian(11);
    for (double y : {-1.9, -0.6, 0.4, 1.7}) {
        const double t = 0.3, x = 0.7, z = -0.2, h = 1e-6;
        const auto g = H.grad(t, {x}, {y}, z);
        EXPECT_NEAR(g.dx[0], (H.eval(t, {x + h}, {y}, z) - H.eval(t, {x - h}, {y}, z)) / (2 * h), 1e-6);
        EXPECT_NEAR(g.dy[0], (H.eval(t, {x}, {y + h}, z) - H.eval(t, {x}, {y - h}, z)) / (2 * h), 1e-6);
        EXPECT_NEAR(g.dz, (H.eval(t, {x}, {y}, z + h) - H.eval(t, {x}, {y}, z - h)) / (2 * h), 1e-6);
    }
}

TEST(Hamiltonian, UnknownKeyIsConfigError) {
    try {
        make_hamiltonian("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
}

TEST(ContactFlow, ContractionNearIdentityForShortSteps) {
    const auto H = random_bump_hamiltonian(2);
    const auto rep = flow_contraction_check(H, TimeInterval{0.0, 0.5 * delta_H(H)}, 20, 1);
    EXPECT_TRUE(rep.pass) << rep.summary();
}
