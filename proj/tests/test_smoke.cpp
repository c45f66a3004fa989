#include <gtest/gtest.h>

#include "cauchyflow/interpolate.hpp"
#include "cauchyflow/io.hpp"
#include "cauchyflow/lagrangian.hpp"
#include "cauchyflow/oracle.hpp"

using namespace cauchyflow;

TEST(Smoke, Compiles) {
    Grid g = Grid::square(8);
    ScalarField f(g, 1.0);
    EXPECT_EQ(f.size(), 64);
}
