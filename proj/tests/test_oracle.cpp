#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cauchyflow/oracle.hpp"

using namespace cauchyflow;

TEST(AnalyticFlows, SteadyEulerResidualVanishesAnalytically) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> coord(0.0, two_pi);
    const AnalyticFlow flows[] = {AnalyticFlow::rest(3), AnalyticFlow::uniform(3, {1.0, -2.0, 0.5}),
                                  AnalyticFlow::solid_rotation(0.7), AnalyticFlow::taylor_green(),
                                  AnalyticFlow::abc(1.0, 1.0, 1.0)};
    for (const auto& flow : flows) {
        for (int s = 0; s < 50; ++s) {
            const Point x{coord(rng), coord(rng), coord(rng)};
            const Point r = flow.steady_euler_residual(x);
            for (int c = 0; c < 3; ++c) EXPECT_LE(std::abs(r[c]), 1e-12) << flow.name();
        }
    }
}

TEST(AnalyticFlows, DivergenceAndVorticityClosedForms) {
    const Grid g3 = Grid::cube(16);
    const VectorField abc = AnalyticFlow::abc().sample_velocity(g3);
    EXPECT_LE(linf(divergence(abc)), 1e-12);
    const Grid g2 = Grid::square(16);
    const VectorField tg = AnalyticFlow::taylor_green().sample_velocity(g2);
    EXPECT_LE(linf(divergence(tg)), 1e-12);
    // negative control really is non-solenoidal
    const VectorField bad = AnalyticFlow::non_solenoidal(2).sample_velocity(g2);
    EXPECT_GT(linf(divergence(bad)), 0.25);
    // sampled vorticity matches the spectral curl for band-limited entries
    const VorticityField w = AnalyticFlow::taylor_green().sample_vorticity(g2);
    const VorticityField wc = curl(tg);
    EXPECT_LE(linf(w - wc), 1e-12);
}

TEST(Track, RestFlowIsIdentity) {
    const Grid g = Grid::square(8);
    const TrackedBundle b = track_grid_single(AnalyticFlow::rest(2), g, 1.0);
    EXPECT_LE(linf(b.displacement), 1e-15);
    EXPECT_LE(linf(b.velocity), 1e-15);
    EXPECT_LE(determinant_drift(b), 1e-15);
    EXPECT_LE(linf(b.vorticity), 1e-15);
}

TEST(Track, UniformFlowTranslates) {
    const Grid g = Grid::cube(8);
    const Point u{0.3, -0.2, 0.1};
    const TrackedBundle b = track_grid_single(AnalyticFlow::uniform(3, u), g, 2.0);
    double err = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < g.size(); ++i)
            err = std::max(err, std::abs(b.displacement.comp(c)[i] - u[c] * 2.0));
    EXPECT_LE(err, 1e-12);
    EXPECT_LE(determinant_drift(b), 1e-12);
}

TEST(Track, SolidRotationMatchesClosedForm) {
    const double omega = 0.8, t = 1.7;
    const std::vector<Point> pts{{1.0, 0.0, 0.0}, {0.3, -0.4, 0.0}, {2.0, 1.0, 0.0}};
    TrackOptions opt;
    opt.tol = 1e-10;
    const auto traj = track_points(AnalyticFlow::solid_rotation(omega), pts,
                                   std::array<double, 1>{t}, opt);
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_NEAR(traj[0][i][0], c * pts[i][0] - s * pts[i][1], 2e-9);
        EXPECT_NEAR(traj[0][i][1], s * pts[i][0] + c * pts[i][1], 2e-9);
    }
}

TEST(Track, ToleranceControlsError) {
    const double omega = 1.0, t = 3.0;
    const std::vector<Point> pts{{1.5, 0.0, 0.0}};
    auto error_at = [&](double tol) {
        TrackOptions opt;
        opt.tol = tol;
        const auto traj =
            track_points(AnalyticFlow::solid_rotation(omega), pts, std::array<double, 1>{t}, opt);
        const double c = std::cos(omega * t), s = std::sin(omega * t);
        return std::hypot(traj[0][0][0] - 1.5 * c, traj[0][0][1] - 1.5 * s);
    };
    const double coarse = error_at(1e-5);
    const double fine = error_at(1e-9);
    EXPECT_LT(fine, coarse);
    EXPECT_LT(fine, 1e-7);
    EXPECT_GT(coarse / std::max(fine, 1e-16), 10.0);
}

TEST(Track, TaylorGreenVolumePreservation) {
    TrackOptions opt;
    opt.tol = 1e-10;
    const TrackedBundle b = track_grid_single(AnalyticFlow::taylor_green(), Grid::square(32), 1.0, opt);
    EXPECT_LE(determinant_drift(b), 1e-7);
    // 2D transported vorticity stays at its initial value exactly (zero RHS)
    const VorticityField w0 = AnalyticFlow::taylor_green().sample_vorticity(b.grid());
    EXPECT_LE(linf(b.vorticity - w0), 1e-12);
}

TEST(Track, AbcTransportedVorticityIsBeltrami) {
    TrackOptions opt;
    opt.tol = 1e-10;
    const AnalyticFlow flow = AnalyticFlow::abc();
    const TrackedBundle b = track_grid_single(flow, Grid::cube(12), 0.5, opt);
    EXPECT_LE(determinant_drift(b), 1e-7);
    // omega(t) must equal v evaluated at the current position
    double err = 0.0;
    for (std::int64_t i = 0; i < b.grid().size(); ++i) {
        const Point a = b.grid().point(i);
        const Point x{a[0] + b.displacement.comp(0)[i], a[1] + b.displacement.comp(1)[i],
                      a[2] + b.displacement.comp(2)[i]};
        const Point v = flow.velocity(x);
        for (int c = 0; c < 3; ++c)
            err = std::max(err, std::abs(b.vorticity.comp(c)[i] - v[c]));
    }
    EXPECT_LE(err, 1e-7);
}

TEST(Track, NonSolenoidalControlBreaksVolume) {
    TrackOptions opt;
    opt.tol = 1e-10;
    const TrackedBundle b =
        track_grid_single(AnalyticFlow::non_solenoidal(3, 0.3), Grid::cube(8), 0.5, opt);
    EXPECT_GT(determinant_drift(b), 1e-3);
}

TEST(Track, StepBudgetExhaustionThrows) {
    TrackOptions opt;
    opt.tol = 1e-13;
    opt.max_steps = 3;
    EXPECT_THROW(track_grid_single(AnalyticFlow::taylor_green(), Grid::square(4), 1.0, opt),
                 IntegrationError);
}

TEST(Track, FixedStepRk4HasFourthOrderDrift) {
    const Grid g = Grid::square(8);
    auto drift = [&](double dt) {
        TrackOptions opt;
        opt.fixed_step = true;
        opt.fixed_dt = dt;
        const TrackedBundle b = track_grid_single(AnalyticFlow::taylor_green(), g, 1.0, opt);
        return determinant_drift(b);
    };
    const double e1 = drift(0.05), e2 = drift(0.025);
    const double order = std::log2(e1 / e2);
    EXPECT_GT(order, 3.5);
    EXPECT_LT(order, 4.6);
}

TEST(Track, WeberOdeMatchesGaussQuadratureSamples) {
    const Grid g = Grid::square(16);
    const AnalyticFlow flow = AnalyticFlow::taylor_green();
    TrackOptions opt;
    opt.tol = 1e-11;
    opt.weber_nodes = 24;
    GridTrackResult r = track_grid(flow, g, std::array<double, 1>{0.5}, opt);
    ASSERT_TRUE(r.weber.has_value());
    // two independent routes to int_0^t (p - |v|^2/2) dtau
    ScalarField quad(g);
    for (std::size_t q = 0; q < r.weber->nodes.size(); ++q)
        for (std::int64_t i = 0; i < g.size(); ++i)
            quad[i] += r.weber->weights[q] * r.weber->integrand[q][i];
    EXPECT_LE(linf(quad - r.bundles[0].weber_ode), 1e-9);
}

TEST(Track, ThreadedRunIsBitIdentical)
{
    const Grid g = Grid::square(16);
    TrackOptions opt1;
    opt1.tol = 1e-9;
    TrackOptions opt4 = opt1;
    opt4.threads = 4;
    const TrackedBundle a = track_grid_single(AnalyticFlow::taylor_green(), g, 0.7, opt1);
    const TrackedBundle b = track_grid_single(AnalyticFlow::taylor_green(), g, 0.7, opt4);
    for (int c = 0; c < 2; ++c)
        for (std::int64_t i = 0; i < g.size(); ++i)
            EXPECT_EQ(a.displacement.comp(c)[i], b.displacement.comp(c)[i]);
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
    std::vector<double> x, w;
    gauss_legendre(6, x, w);
    // degree-11 exactness: int_{-1}^{1} t^10 dt = 2/11
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::pow(x[i], 10);
    EXPECT_NEAR(acc, 2.0 / 11.0, 1e-14);
    double total = 0.0;
    for (double wi : w) total += wi;
    EXPECT_NEAR(total, 2.0, 1e-14);
}
