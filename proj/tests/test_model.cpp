#include <gtest/gtest.h>

#include <cmath>

#include <beckmann/model.hpp>

#include "oracles.hpp"

using namespace beckmann;
using Eigen::Matrix2d;
using Eigen::Vector2d;

namespace {

const RegParams kRef(0.5, 0.1, 2.0); // the worked reference parameter set

struct Sample {
    double w;
    RegParams prm;
    Vector2d p;
    double kink_distance; // |p| - w (negative inside the dead zone)
};

/// Random parameter/point samples that stay away from the kink |p| = w:
/// either well inside the dead zone or at |p| = w + epsilon * s with s >= 1.
Sample draw_sample(bool active_zone) {
    const double w = oracle::uniform(0.1, 10.0);
    const double eps = std::pow(10.0, oracle::uniform(-4.0, 0.0));
    const double delta = std::pow(10.0, oracle::uniform(-5.0, 1.0));
    const double alpha = oracle::uniform(0.0, 1.0) < 0.5 ? 1.5 : 2.0;
    const double angle = oracle::uniform(0.0, 2.0 * M_PI);
    const Vector2d dir(std::cos(angle), std::sin(angle));
    double n;
    if (active_zone) n = w + eps * oracle::uniform(1.0, 5.0);
    else n = w * oracle::uniform(0.3, 0.7);
    return {w, RegParams(eps, delta, alpha), n * dir, n - w};
}

} // namespace

TEST(RegParams, ConjugateExponent) {
    EXPECT_NEAR(1.0 / RegParams(0.5, 0.1, 2.0).alpha + 1.0 / RegParams(0.5, 0.1, 2.0).alpha_conj,
                1.0, 1e-14);
    EXPECT_NEAR(RegParams(1.0, 0.0, 1.5).alpha_conj, 3.0, 1e-14);
    EXPECT_THROW(RegParams(0.0, 0.1, 2.0), std::invalid_argument);
    EXPECT_THROW(RegParams(0.5, -0.1, 2.0), std::invalid_argument);
    EXPECT_THROW(RegParams(0.5, 0.1, 1.0), std::invalid_argument);
}

TEST(FluxAlpha, HandValues) {
    EXPECT_NEAR((flux_alpha(1.0, {2.0, 0.0}, kRef) - Vector2d(2.0, 0.0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((flux_alpha(1.0, {0.0, -3.0}, kRef) - Vector2d(0.0, -4.0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(flux_alpha(1.0, {0.5, 0.0}, kRef), Vector2d::Zero());
    EXPECT_EQ(flux_alpha(1.0, {0.0, 0.0}, kRef), Vector2d::Zero());
}

TEST(FluxHuber, HandValues) {
    EXPECT_NEAR((flux_huber(1.0, {2.0, 0.0}, 0.1) - Vector2d(0.1, 0.0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((flux_huber(1.0, {0.5, 0.0}, 0.1) - Vector2d(0.05, 0.0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(flux_huber(1.0, {0.0, 0.0}, 0.1), Vector2d::Zero());
    EXPECT_EQ(flux_huber(1.0, {0.3, -0.4}, 0.0), Vector2d::Zero());
}

TEST(Flux, SumOfParts) {
    const Vector2d p(2.0, 0.0);
    EXPECT_NEAR((flux(1.0, p, kRef) - Vector2d(2.1, 0.0)).norm(), 0.0, 1e-12);
    // Saturation: |huber part| = delta outside the dead zone, continuous at
    // the kink.
    const Vector2d just_out = flux(1.0, {1.0 + 1e-13, 0.0}, kRef);
    const Vector2d just_in = flux(1.0, {1.0 - 1e-13, 0.0}, kRef);
    EXPECT_NEAR((just_out - just_in).norm(), 0.0, 1e-9);
    EXPECT_NEAR(just_in.x(), 0.1, 1e-9);
}

TEST(FluxJacobian, HandValueAndKinkConvention) {
    const Matrix2d J = flux_jacobian(1.0, {2.0, 0.0}, kRef);
    EXPECT_NEAR(J(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(J(1, 1), 1.05, 1e-12);
    EXPECT_NEAR(J(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(J(1, 0), 0.0, 1e-12);
    // Dead zone, the kink itself, and p = 0 all use the inside limit.
    const Matrix2d inside = (0.1 / 1.0) * Matrix2d::Identity();
    EXPECT_NEAR((flux_jacobian(1.0, {0.3, 0.2}, kRef) - inside).norm(), 0.0, 1e-15);
    EXPECT_NEAR((flux_jacobian(1.0, {1.0, 0.0}, kRef) - inside).norm(), 0.0, 1e-15);
    EXPECT_NEAR((flux_jacobian(1.0, {0.0, 0.0}, kRef) - inside).norm(), 0.0, 1e-15);
}

TEST(FluxJacobian, SymmetricPositiveSemidefinite) {
    oracle::rng(101);
    for (int k = 0; k < 1000; ++k) {
        const Sample s = draw_sample(k % 2 == 0);
        const Matrix2d J = flux_jacobian(s.w, s.p, s.prm);
        EXPECT_NEAR((J - J.transpose()).norm(), 0.0, 1e-12 * std::max(1.0, J.norm()));
        Eigen::SelfAdjointEigenSolver<Matrix2d> es(J);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * J.norm());
    }
}

TEST(EnergyDensities, HandValues) {
    EXPECT_NEAR(energy_alpha(1.0, {2.0, 0.0}, kRef), 1.0, 1e-12);
    EXPECT_NEAR(energy_alpha(1.0, {0.5, 0.0}, kRef), 0.0, 1e-12);
    EXPECT_NEAR(energy_huber(1.0, {2.0, 0.0}, 0.1), 0.25, 1e-12);
    EXPECT_NEAR(energy_huber(1.0, {0.5, 0.0}, 0.1), 0.1125, 1e-12);
    EXPECT_NEAR(energy_density(1.0, {2.0, 0.0}, kRef), 1.25, 1e-12);
}

TEST(EnergyConjugate, HandValuesAndContinuity) {
    EXPECT_NEAR(energy_conjugate(1.0, {0.05, 0.0}, kRef), -0.0875, 1e-12);
    EXPECT_NEAR(energy_conjugate(1.0, {0.5, 0.0}, kRef), 0.39, 1e-12);
    // Branch continuity at |q| = delta: both sides give -delta*w/2.
    const double below = energy_conjugate(1.0, {0.1 - 1e-12, 0.0}, kRef);
    const double above = energy_conjugate(1.0, {0.1 + 1e-12, 0.0}, kRef);
    EXPECT_NEAR(below, -0.05, 1e-10);
    EXPECT_NEAR(above, below, 1e-10);
    EXPECT_NEAR(energy_conjugate(1.0, {0.0, 0.0}, kRef), -0.1, 1e-15);
}

TEST(EnergyConjugate, MatchesGridLegendreOracle) {
    // Same two points, checked against a brute-force Legendre transform.
    const oracle::Params prm{0.5, 0.1, 2.0};
    EXPECT_NEAR(oracle::legendre_conjugate(1.0, {0.05, 0.0}, prm, 1601, 6.0), -0.0875, 1e-4);
    EXPECT_NEAR(oracle::legendre_conjugate(1.0, {0.5, 0.0}, prm, 1601, 6.0), 0.39, 1e-4);
}

TEST(FluxInverse, HandValuesAndRoundTrips) {
    EXPECT_EQ(flux_inverse(1.0, {0.0, 0.0}, kRef), Vector2d::Zero());
    EXPECT_NEAR((flux_inverse(1.0, {0.05, 0.0}, kRef) - Vector2d(0.5, 0.0)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((flux(1.0, {0.5, 0.0}, kRef) - Vector2d(0.05, 0.0)).norm(), 0.0, 1e-12);

    oracle::rng(202);
    for (int k = 0; k < 1000; ++k) {
        const Sample s = draw_sample(k % 2 == 0);
        const Vector2d q = flux(s.w, s.p, s.prm);
        const Vector2d back = flux_inverse(s.w, q, s.prm);
        EXPECT_NEAR((back - s.p).norm(), 0.0, 1e-10 * std::max(1.0, s.p.norm()));
        // Other direction, from a flux-space point.
        const double nq = oracle::uniform(0.0, 3.0) * s.prm.delta;
        const Vector2d z = nq * Vector2d(std::cos(k), std::sin(k));
        const Vector2d rt = flux(s.w, flux_inverse(s.w, z, s.prm), s.prm);
        EXPECT_NEAR((rt - z).norm(), 0.0, 1e-10 * std::max(1.0, z.norm()));
    }
}

TEST(Flux, MonotoneMap) {
    oracle::rng(303);
    for (int k = 0; k < 1000; ++k) {
        const Sample s = draw_sample(k % 2 == 0);
        const double angle = oracle::uniform(0.0, 2.0 * M_PI);
        const Vector2d p2 = oracle::uniform(0.0, 2.0 * s.w) * Vector2d(std::cos(angle), std::sin(angle));
        const Vector2d dq = flux(s.w, s.p, s.prm) - flux(s.w, p2, s.prm);
        EXPECT_GE(dq.dot(s.p - p2), -1e-12 * std::max(1.0, dq.norm() * (s.p - p2).norm()));
    }
}

TEST(Flux, RotationEquivariant) {
    // Rotating p perturbs its computed norm by a few ulps, which the map
    // amplifies by its local Lipschitz constant, so the tolerance carries a
    // Jacobian-norm term.
    oracle::rng(404);
    for (int k = 0; k < 500; ++k) {
        const Sample s = draw_sample(k % 2 == 0);
        const double a = oracle::uniform(0.0, 2.0 * M_PI);
        Matrix2d Q;
        Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        const Vector2d lhs = flux(s.w, Q * s.p, s.prm);
        const Vector2d rhs = Q * flux(s.w, s.p, s.prm);
        const double amplified =
            flux_jacobian(s.w, s.p, s.prm).norm() * s.p.norm() * 1e-14;
        EXPECT_NEAR((lhs - rhs).norm(), 0.0,
                    amplified + 1e-13 * std::max(1.0, rhs.norm()));
    }
}

TEST(Flux, OptimalityRelationOutsideDeadZone) {
    // |flux_alpha| = ((|p|-w)/eps)^(alpha_conj-1) inverts to
    // eps*|q|^(alpha-1) = |p| - w.
    oracle::rng(505);
    for (int k = 0; k < 500; ++k) {
        const Sample s = draw_sample(true);
        const double nq = flux_alpha(s.w, s.p, s.prm).norm();
        EXPECT_NEAR(s.prm.epsilon * std::pow(nq, s.prm.alpha - 1.0), s.p.norm() - s.w,
                    1e-9 * std::max(1.0, s.p.norm()));
    }
}

TEST(Flux, GradientOfEnergyDensity) {
    // grad_p energy_density = flux, checked by central differences away from
    // the kink bands.
    oracle::rng(606);
    for (int k = 0; k < 500; ++k) {
        const bool active = k % 2 == 0;
        const Sample s = draw_sample(active);
        const double h = 1e-3 * (active ? s.prm.epsilon : s.w);
        const Vector2d fd = oracle::fd_gradient(
            [&](const Vector2d& p) { return energy_density(s.w, p, s.prm); }, s.p, h);
        const Vector2d g = flux(s.w, s.p, s.prm);
        EXPECT_NEAR((fd - g).norm(), 0.0, 1e-6 * std::max(g.norm(), 1e-12))
            << "w=" << s.w << " eps=" << s.prm.epsilon << " delta=" << s.prm.delta
            << " alpha=" << s.prm.alpha << " |p|=" << s.p.norm();
    }
}

TEST(Flux, JacobianMatchesFiniteDifferences) {
    oracle::rng(707);
    for (int k = 0; k < 500; ++k) {
        const bool active = k % 2 == 0;
        const Sample s = draw_sample(active);
        const double h = 1e-3 * (active ? s.prm.epsilon : s.w);
        const Matrix2d fd = oracle::fd_jacobian(
            [&](const Vector2d& p) { return flux(s.w, p, s.prm); }, s.p, h);
        const Matrix2d J = flux_jacobian(s.w, s.p, s.prm);
        EXPECT_NEAR((fd - J).norm(), 0.0, 1e-6 * std::max(J.norm(), 1e-12))
            << "w=" << s.w << " eps=" << s.prm.epsilon << " delta=" << s.prm.delta
            << " alpha=" << s.prm.alpha << " |p|=" << s.p.norm();
    }
}

TEST(FenchelYoung, InequalityAndEqualityCase) {
    oracle::rng(808);
    for (int k = 0; k < 1000; ++k) {
        const Sample s = draw_sample(k % 2 == 0);
        // Inequality for an arbitrary q.
        const double angle = oracle::uniform(0.0, 2.0 * M_PI);
        const Vector2d q_any =
            oracle::uniform(0.0, 3.0 * s.prm.delta + 2.0) * Vector2d(std::cos(angle), std::sin(angle));
        const double lhs_any = energy_density(s.w, s.p, s.prm) + energy_conjugate(s.w, q_any, s.prm);
        const double scale_any = std::max({1.0, std::abs(lhs_any), s.p.norm() * q_any.norm()});
        EXPECT_GE(lhs_any - s.p.dot(q_any), -1e-9 * scale_any);

        // Equality at q = flux(p).
        const Vector2d q = flux(s.w, s.p, s.prm);
        const double lhs = energy_density(s.w, s.p, s.prm) + energy_conjugate(s.w, q, s.prm);
        const double scale = std::max({1.0, std::abs(lhs), s.p.norm() * q.norm()});
        EXPECT_NEAR(lhs, s.p.dot(q), 1e-9 * scale);
    }
}

TEST(FenchelYoung, WorkedExample) {
    const Vector2d p(2.0, 0.0);
    const Vector2d q = flux(1.0, p, kRef);
    EXPECT_NEAR(energy_density(1.0, p, kRef) + energy_conjugate(1.0, q, kRef), p.dot(q), 1e-12);
    EXPECT_NEAR(p.dot(q), 4.2, 1e-12);
}

TEST(Model, DeltaZeroDegeneracies) {
    const RegParams prm(0.5, 0.0, 2.0);
    EXPECT_EQ(energy_conjugate(1.0, {0.0, 0.0}, prm), 0.0);
    EXPECT_NEAR(energy_conjugate(1.0, {0.5, 0.0}, prm), 0.25 * 0.25 + 0.5, 1e-12);
    EXPECT_EQ(flux_inverse(1.0, {0.0, 0.0}, prm), Vector2d::Zero());
    EXPECT_NEAR(energy_huber(1.0, {2.0, 0.0}, 0.0), 0.0, 0.0);
}
