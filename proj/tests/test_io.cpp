#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "cauchyflow/interpolate.hpp"
#include "cauchyflow/io.hpp"
#include "cauchyflow/lagrangian.hpp"
#include "cauchyflow/oracle.hpp"

using namespace cauchyflow;

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(-2.5e-7), "-2.5e-07");
    const double x = 0.1 + 0.2;  // 0.30000000000000004
    EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(FieldIo, BinaryRoundTrip3d) {
    std::mt19937_64 rng(5);
    const Grid g = Grid::cube(8, 3.0);
    VectorField u(g);
    for (int c = 0; c < 3; ++c) u.comp(c) = random_band_limited_scalar(g, 3, rng);
    std::stringstream ss;
    write_field(ss, u);
    const VectorField v = read_vector_field(ss);
    ASSERT_EQ(v.grid(), g);
    for (int c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < g.size(); ++i)
            EXPECT_EQ(v.comp(c)[i], u.comp(c)[i]);  // bit-exact
}

TEST(FieldIo, BinaryRoundTrip2d) {
    std::mt19937_64 rng(6);
    const Grid g = Grid::square(12);
    const ScalarField f = random_band_limited_scalar(g, 4, rng);
    std::stringstream ss;
    write_field(ss, f);
    const ScalarField h = read_scalar_field(ss);
    ASSERT_EQ(h.grid(), g);
    for (std::int64_t i = 0; i < g.size(); ++i) EXPECT_EQ(h[i], f[i]);
}

TEST(FieldIo, TruncatedFileThrows) {
    const Grid g = Grid::square(8);
    std::stringstream ss;
    write_field(ss, ScalarField(g, 1.0));
    std::string s = ss.str();
    s.resize(s.size() / 2);
    std::stringstream half(s);
    EXPECT_THROW(read_scalar_field(half), IoError);
}

TEST(FieldIo, CsvHasIndexTripletAndComponents) {
    const Grid g = Grid::cube(4);
    VectorField u(g);
    std::stringstream ss;
    write_field_csv(ss, u);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "i0,i1,i2,c0,c1,c2");
    std::getline(ss, line);
    EXPECT_EQ(line, "0,0,0,0,0,0");
}

TEST(Snapshot, RoundTripWithWeberHistory) {
    const Grid g = Grid::square(16);
    const AnalyticFlow flow = AnalyticFlow::taylor_green();
    TrackOptions opt;
    opt.tol = 1e-9;
    opt.weber_nodes = 4;
    GridTrackResult r = track_grid(flow, g, std::array<double, 1>{0.25}, opt);
    FlowState state = to_flow_state(r.bundles[0], flow, std::move(r.weber));
    ASSERT_TRUE(state.weber.has_value());

    std::stringstream ss;
    write_snapshot(ss, state);
    const FlowState back = read_snapshot(ss);
    EXPECT_EQ(back.time(), state.time());
    EXPECT_EQ(back.grid(), g);
    ASSERT_TRUE(back.weber.has_value());
    EXPECT_EQ(back.weber->nodes.size(), 4u);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(back.map.displacement.comp(0)[i], state.map.displacement.comp(0)[i]);
        EXPECT_EQ(back.velocity.comp(1)[i], state.velocity.comp(1)[i]);
        EXPECT_EQ(back.weber->integrand[2][i], state.weber->integrand[2][i]);
    }
}

TEST(Interpolate, ReproducesGridValuesAndClosedForm) {
    const Grid g = Grid::cube(16);
    ScalarField f(g);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        f[i] = std::sin(2 * p[0]) * std::cos(p[1]) + 0.5 * std::sin(p[2]);
    }
    const TrigInterpolator interp(f);
    // on-grid
    for (std::int64_t i : {std::int64_t{0}, std::int64_t{777}, g.size() - 1})
        EXPECT_NEAR(interp.eval_scalar(g.point(i)), f[i], 1e-12);
    // off-grid
    const Point y{0.37, 1.91, 4.02};
    EXPECT_NEAR(interp.eval_scalar(y),
                std::sin(2 * y[0]) * std::cos(y[1]) + 0.5 * std::sin(y[2]), 1e-12);
    // periodic image
    const Point y2{0.37 + two_pi, 1.91 - two_pi, 4.02};
    EXPECT_NEAR(interp.eval_scalar(y2), interp.eval_scalar(y), 1e-11);
}

TEST(Interpolate, VectorComponentsShareEvaluation) {
    const Grid g = Grid::square(16);
    const VectorField u = AnalyticFlow::taylor_green().sample_velocity(g);
    const TrigInterpolator interp(u);
    const Point y{2.13, 0.58, 0.0};
    const auto v = interp.eval(y);
    EXPECT_NEAR(v[0], std::sin(y[0]) * std::cos(y[1]), 1e-12);
    EXPECT_NEAR(v[1], -std::cos(y[0]) * std::sin(y[1]), 1e-12);
}
