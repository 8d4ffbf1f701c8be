#include "germgrain/fast_marching.hpp"
#include "germgrain/growth.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

using namespace germgrain;

namespace {

Vector vec2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

// G(tau) = max(1/2, tau): equals tau on [1/2, 3], so ramp-speed arithmetic on
// ranges above 1/2 is exact while the positive-lower-bound contract holds.
GrowthField ramp_growth() {
    return GrowthField::time_only(
        TemporalFunction::piecewise_linear({0.0, 0.5, 3.0}, {0.5, 0.5, 3.0}), 3.0);
}

MarkedPoint nucleus_at(double birth, double x, double y) {
    MarkedPoint p;
    p.birth = birth;
    p.site = vec2(x, y);
    return p;
}

}  // namespace

TEST_SUITE("growth") {
    TEST_CASE("cumulative growth and radii") {
        GrowthField unit = GrowthField::time_only(TemporalFunction::constant(1.0), 4.0);
        CHECK(unit.cumulative(2.0) == 2.0);
        CHECK(radius(unit, 0.0, 2.0) == 2.0);
        CHECK(radius(unit, 1.25, 1.25) == 0.0);
        CHECK_THROWS_AS(radius(unit, 2.0, 1.0), std::domain_error);

        GrowthField ramp = ramp_growth();
        // With G(tau) = tau on [1, 2]: R(1, 2) = (2^2 - 1^2)/2 = 1.5 exactly.
        CHECK(radius(ramp, 1.0, 2.0) == 1.5);
    }

    TEST_CASE("speed bounds and validation") {
        GrowthField f = GrowthField::time_only(TemporalFunction::constant(2.0), 1.0);
        CHECK(f.min_speed() == 2.0);
        CHECK(f.max_speed() == 2.0);
        CHECK(f.speed_at(0.5, vec2(0.0, 0.0)) == 2.0);
        // Zero or negative speeds are rejected.
        CHECK_THROWS_AS(GrowthField::time_only(TemporalFunction::constant(0.0), 1.0), ConfigError);
        CHECK_THROWS_AS(GrowthField::time_only(
                            TemporalFunction::piecewise_linear({0.0, 1.0}, {0.0, 1.0}), 1.0),
                        ConfigError);
        // Piecewise profiles must cover the horizon.
        CHECK_THROWS_AS(GrowthField::time_only(
                            TemporalFunction::piecewise_linear({0.0, 1.0}, {1.0, 1.0}), 2.0),
                        ConfigError);
    }

    TEST_CASE("grain capture times, constant speed") {
        GrowthField unit = GrowthField::time_only(TemporalFunction::constant(1.0), 4.0);
        MarkedPoint nucleus = nucleus_at(0.2, 0.0, 0.0);
        CHECK(grain_capture_time(unit, nucleus, vec2(0.5, 0.0)) ==
              doctest::Approx(0.7).epsilon(1e-14));
        // The point at the nucleus is captured exactly at birth.
        MarkedPoint late = nucleus_at(2.0, 1.0, 1.0);
        CHECK(grain_capture_time(unit, late, vec2(1.0, 1.0)) == 2.0);
    }

    TEST_CASE("grain capture inverts the cumulative exactly for ramp speed") {
        GrowthField ramp = ramp_growth();
        // Born at 1, target at distance 1.5: C(t) - C(1) = (t^2 - 1)/2 = 1.5 at t = 2.
        MarkedPoint nucleus = nucleus_at(1.0, 0.0, 0.0);
        CHECK(grain_capture_time(ramp, nucleus, vec2(1.5, 0.0)) ==
              doctest::Approx(2.0).epsilon(1e-12));
    }

    TEST_CASE("grain indicator volume and monotonicity") {
        GrowthField unit = GrowthField::time_only(TemporalFunction::constant(1.0), 4.0);
        Grid grid = Grid::over(Box::cube(2, -1.5, 1.5), 0.02);
        MarkedPoint nucleus = nucleus_at(0.0, 0.0, 0.0);
        // Before birth the grain is empty.
        MarkedPoint future = nucleus_at(1.0, 0.0, 0.0);
        CHECK(grain_indicator(unit, future, 0.5, grid).values.sum() == 0.0);
        // Unit ball at t = 1: node-count volume within a perimeter*h band of pi.
        ScalarField ind = grain_indicator(unit, nucleus, 1.0, grid);
        double vol = ind.values.sum() * grid.cell_volume();
        CHECK(std::abs(vol - std::numbers::pi) <= 2.0 * std::numbers::pi * grid.spacing);
        // Monotone in t.
        ScalarField later = grain_indicator(unit, nucleus, 1.3, grid);
        CHECK(((later.values - ind.values) >= 0.0).all());
    }

    TEST_CASE("dilate reproduces, grows, and respects emptiness") {
        GrowthField unit = GrowthField::time_only(TemporalFunction::constant(1.0), 4.0);
        Grid grid = Grid::over(Box::cube(2, -2.0, 2.0), 0.02);
        ScalarField ball = grain_indicator(unit, nucleus_at(0.0, 0.0, 0.0), 1.0, grid);

        ScalarField same = dilate(ball, 0.0);
        CHECK((same.values == ball.values).all());

        ScalarField grown = dilate(ball, 0.5);
        double vol = grown.values.sum() * grid.cell_volume();
        // Ball of radius 1 dilated by 0.5 is the radius-1.5 ball.
        CHECK(std::abs(vol - std::numbers::pi * 2.25) <=
              2.0 * std::numbers::pi * 1.5 * grid.spacing);

        ScalarField empty = ScalarField::zeros(grid);
        CHECK(dilate(empty, 0.5).values.sum() == 0.0);
        CHECK_THROWS_AS(dilate(ball, -0.1), std::domain_error);
    }
}

TEST_SUITE("fmm") {
    TEST_CASE("constant speed reproduces euclidean distance") {
        Grid grid = Grid::over(Box::cube(2, 0.0, 2.0), 0.02);
        Eigen::ArrayXd speed = Eigen::ArrayXd::Constant(grid.size(), 1.0);
        Vector center = vec2(1.0, 1.0);
        long src = grid.nearest(center);
        Eigen::ArrayXd tau = solve_eikonal(grid, speed, src);
        CHECK(tau[src] == 0.0);
        double axis_err = 0.0, global_err = 0.0;
        for (long i = 0; i < grid.size(); ++i) {
            Vector p = grid.node(i);
            double err = std::abs(tau[i] - (p - center).norm());
            global_err = std::max(global_err, err);
            if (p[0] == center[0] || p[1] == center[1]) axis_err = std::max(axis_err, err);
        }
        // First-order upwind: exact along grid axes, bounded off-axis.
        CHECK(axis_err <= 2.0 * grid.spacing);
        CHECK(global_err <= 5.0 * grid.spacing * grid.dim());
    }

    TEST_CASE("doubling the speed halves arrival times exactly") {
        Grid grid = Grid::over(Box::cube(2, 0.0, 2.0), 0.04);
        Eigen::ArrayXd s1 = Eigen::ArrayXd::Constant(grid.size(), 1.0);
        Eigen::ArrayXd s2 = Eigen::ArrayXd::Constant(grid.size(), 2.0);
        long src = grid.nearest(vec2(1.0, 1.0));
        Eigen::ArrayXd t1 = solve_eikonal(grid, s1, src);
        Eigen::ArrayXd t2 = solve_eikonal(grid, s2, src);
        // Scaling by a power of two commutes with every rounding step.
        CHECK((t2 == 0.5 * t1).all());
    }

    TEST_CASE("two-halfspace field obeys fermat's principle") {
        double h = 0.02;
        Grid grid = Grid::over(Box::cube(2, 0.0, 2.0), h);
        Eigen::ArrayXd speed(grid.size());
        for (long i = 0; i < grid.size(); ++i) speed[i] = grid.node(i)[0] < 1.0 ? 1.0 : 2.0;
        Vector source = vec2(0.5, 1.0);
        Eigen::ArrayXd tau = solve_eikonal(grid, speed, grid.nearest(source));

        // Perpendicular crossing: straight ray, time 0.5/1 + 0.5/2.
        CHECK(std::abs(tau[grid.nearest(vec2(1.5, 1.0))] - 0.75) <= 2.0 * h);

        // Oblique target: oracle minimizes travel time over the crossing point.
        Vector target = vec2(1.5, 1.6);
        double best = std::numeric_limits<double>::infinity();
        for (long k = 0; k <= 200000; ++k) {
            double y = 2.0 * double(k) / 200000.0;
            double t = std::sqrt(0.25 + (y - 1.0) * (y - 1.0)) +
                       0.5 * std::sqrt(0.25 + (1.6 - y) * (1.6 - y));
            best = std::min(best, t);
        }
        CHECK(std::abs(tau[grid.nearest(target)] - best) <= 2.0 * h);
    }

    TEST_CASE("solver output satisfies the discrete equation") {
        Grid grid = Grid::over(Box::cube(2, 0.0, 1.0), 0.05);
        Eigen::ArrayXd speed(grid.size());
        for (long i = 0; i < grid.size(); ++i) {
            Vector p = grid.node(i);
            speed[i] = 0.5 + 0.4 * std::sin(3.0 * p[0]) * std::cos(2.0 * p[1]) + 0.5;
        }
        long src = grid.nearest(vec2(0.5, 0.5));
        Eigen::ArrayXd tau = solve_eikonal(grid, speed, src);
        CHECK(eikonal_residual(grid, speed, tau, src) <= 1e-9);
    }

    TEST_CASE("space-only growth uses the eikonal arrivals") {
        Grid grid = Grid::over(Box::cube(2, 0.0, 2.0), 0.02);
        ScalarField speed = ScalarField::constant(grid, 1.0);
        GrowthField growth = GrowthField::space_only(speed);
        CHECK(growth.kind() == GrowthKind::space_only);
        CHECK(growth.min_speed() == 1.0);

        ScalarField tau = arrival_field(growth, vec2(1.0, 1.0));
        CHECK(tau.values[grid.nearest(vec2(1.0, 1.0))] == 0.0);

        MarkedPoint nucleus = nucleus_at(0.3, 1.0, 1.0);
        double cap = grain_capture_time(growth, nucleus, tau, vec2(1.5, 1.0));
        CHECK(cap == doctest::Approx(0.8).epsilon(2e-2 / 0.8));

        // Non-positive speed samples are rejected.
        ScalarField bad = ScalarField::constant(grid, 1.0);
        bad.values[3] = 0.0;
        CHECK_THROWS_AS(GrowthField::space_only(bad), ConfigError);
    }
}
