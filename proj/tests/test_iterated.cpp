#include <gtest/gtest.h>

#include <cmath>

#include "cmhj/hamiltonian.hpp"
#include "cmhj/iterated.hpp"

using namespace cmhj;

namespace {
GridFunction smoothed_neg_abs(int n = 121) {
    return GridFunction::sample([](double x) { return -std::sqrt(x * x + 0.04); }, -3.0, 3.0, n, -1.0,
                                [](double x) { return -x / std::sqrt(x * x + 0.04); });
}
}  // namespace

TEST(Partition, UniformAndNorm) {
    const auto p = Partition::with_norm(1.0, 0.3);
    EXPECT_EQ(p.steps(), 4);
    EXPECT_DOUBLE_EQ(p.norm(), 0.25);
    EXPECT_EQ(p.step_fn(0.6), 0.5);
    EXPECT_EQ(p.step_fn(1.0), 1.0);
    const auto q = p.subdivided(0.1);
    EXPECT_LT(q.norm(), 0.1);
    EXPECT_THROW(Partition({0.0, 0.5, 0.5}), Error);
}

TEST(Iterated, ZeroHamiltonianKeepsEverySnapshot) {
    const auto v = smoothed_neg_abs(61);
    const auto tr = iterated_minimax(zero_hamiltonian(), v, Partition::with_norm(1.0, 0.25), MinimaxConfig{});
    ASSERT_EQ(tr.snapshots.size(), 5u);
    for (const auto& s : tr.snapshots)
        for (int i = 0; i < v.n; ++i) EXPECT_NEAR(s.values[i], v.values[i], 1e-12);
}

// Transport composes exactly: any partition gives v(x - c t), up to the cubic
// Hermite re-interpolation at every step (dx = 0.05, fourth derivative of v of order 1/delta^3 near 0).
TEST(Iterated, TransportComposes) {
    const auto H = make_hamiltonian("transport-bump", {{"c", 0.5}});
    const auto v = smoothed_neg_abs();
    const auto tr = iterated_minimax(H, v, Partition::with_norm(1.0, 1.0 / 3.0), MinimaxConfig{});
    const auto& u = tr.snapshots.back();
    for (int i = 20; i < u.n - 20; ++i) EXPECT_NEAR(u.values[i], v(u.node(i) - 0.5), 1e-4);
}

TEST(Iterated, CertificatesHold) {
    const auto H = make_hamiltonian("modulated-nonconvex");
    const auto v = smoothed_neg_abs();
    const auto tr = iterated_minimax(H, v, Partition::with_norm(0.5, 0.25), MinimaxConfig{});
    ASSERT_EQ(tr.certificates.size(), 2u);
    for (const auto& c : tr.certificates) EXPECT_LE(c.lip_measured, 1.05 * c.lip_bound);
}

TEST(Iterated, AtPartitionTimesReturnsSnapshots) {
    const auto H = make_hamiltonian("quadratic-bump");
    const auto v = smoothed_neg_abs(61);
    const auto tr = iterated_minimax(H, v, Partition::with_norm(0.5, 0.25), MinimaxConfig{});
    const auto u = iterated_at(H, tr, 0.25, MinimaxConfig{});
    EXPECT_EQ(u.values, tr.snapshots[1].values);
    const auto w = iterated_at(H, tr, 0.375, MinimaxConfig{});
    EXPECT_EQ(w.n, v.n);
    EXPECT_THROW(tr.at(0.3), Error);
}

// Convex: semigroup property, so one step and four steps coincide.
TEST(Iterated, ConvexPartitionInsensitive) {
    const auto H = make_hamiltonian("quadratic-bump");
    const auto v = smoothed_neg_abs();
    const auto a = iterated_minimax(H, v, Partition::with_norm(0.5, 0.5), MinimaxConfig{});
    const auto b = iterated_minimax(H, v, Partition::with_norm(0.5, 0.125), MinimaxConfig{});
    EXPECT_LT(sup_diff(a.snapshots.back(), b.snapshots.back(), -2.0, 2.0), 5e-3);
}

TEST(Iterated, ConvergenceStudyTable) {
    const auto H = make_hamiltonian("transport-bump", {{"c", 0.5}});
    const auto v = smoothed_neg_abs(61);
    auto exact = [&](double t, double x) { return -std::sqrt((x - 0.5 * t) * (x - 0.5 * t) + 0.04); };
    const auto tab = convergence_study(H, v, {Partition::with_norm(0.5, 0.5), Partition::with_norm(0.5, 0.25)}, exact,
                                       -1.0, 1.0, {0.0, 0.25, 0.5}, MinimaxConfig{}, 1e-3);
    ASSERT_EQ(tab.rows.size(), 2u);
    for (const auto& r : tab.rows) EXPECT_LT(r.error, 1e-3);
}

TEST(Iterated, RichardsonReferenceBeatsCoarse) {
    const auto H = make_hamiltonian("discount", {{"c", 1.0}});
    auto vf = [](double x) { return 0.3 * x; };
    const auto v = GridFunction::sample(vf, -3.0, 3.0, 61);
    // u = p e^{-t} x - (c p^2 / 2) e^{-t} (1 - e^{-t})
    auto exact = [](double t, double x) { return 0.3 * std::exp(-t) * x - 0.045 * std::exp(-t) * (1 - std::exp(-t)); };
    const auto ref = viscosity_reference(H, v, 0.5, 2, 0.45, {0.5});
    double e_rich = 0, e_coarse = 0;
    for (double x = -1.0; x <= 1.0; x += 0.1) {
        e_rich = std::max(e_rich, std::abs(ref(0.5, x) - exact(0.5, x)));
        e_coarse = std::max(e_coarse, std::abs(ref.coarse.at(0.5)(x) - exact(0.5, x)));
    }
    EXPECT_LT(e_rich, 1e-4);
    EXPECT_LE(e_rich, e_coarse);
}
