#include "germgrain/causal_cone.hpp"

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

// Poisson nucleation with per-volume rate alpha and uniform marks on `dom`.
NucleationModel kjma_model(double alpha, const Box& dom) {
    NucleationModel m;
    m.kind = NucleationKind::poisson;
    m.temporal = TemporalFunction::constant(alpha).scaled(dom.volume());
    m.spatial = SpatialDensity::uniform(dom);
    return m;
}

NucleationModel staircase_model(const Box& dom, const Box& mark_box) {
    NucleationModel m;
    m.kind = NucleationKind::staircase;
    m.temporal = TemporalFunction::exponential(1.0);
    m.spatial = SpatialDensity::uniform(dom, mark_box);
    return m;
}

double kjma_measure(double alpha, double g, double t) {
    return alpha * std::numbers::pi * g * g * t * t * t / 3.0;
}

}  // namespace

TEST_SUITE("cone") {
    const Box support = Box::cube(2, -1.5, 5.5);
    const GrowthField unit = GrowthField::time_only(TemporalFunction::constant(1.0), 3.0);

    TEST_CASE("membership") {
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.0, unit);
        // Births after t are never in the cone.
        CHECK(!cone_contains(cone, 1.1, vec2(2.0, 2.0)));
        // Born at 0.5 the grain has radius 0.5 by t = 1.
        CHECK(cone_contains(cone, 0.5, vec2(2.4, 2.0)));
        CHECK(!cone_contains(cone, 0.5, vec2(2.6, 2.0)));
        CHECK(cone_contains(cone, 1.0, vec2(2.0, 2.0)));
        CHECK_THROWS_AS(make_cone(vec2(0.0, 0.0), -0.5, unit), std::domain_error);
    }

    TEST_CASE("section masses") {
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.5, unit);
        SpatialDensity q = SpatialDensity::uniform(support);
        // The section at s = t is a single point.
        CHECK(section_mass(cone, 1.5, q) == 0.0);
        // At s = 0 the section is the radius-1.5 ball, fully inside the support.
        CHECK(section_mass(cone, 0.0, q) ==
              doctest::Approx(std::numbers::pi * 2.25 / 49.0).epsilon(1e-8));
        // Marks restricted away from the ball contribute nothing.
        SpatialDensity far = SpatialDensity::uniform(support, Box::cube(2, 4.5, 5.5));
        CHECK(section_mass(cone, 0.0, far) == 0.0);
        CHECK_THROWS_AS(section_mass(cone, 2.0, q), std::domain_error);
    }

    TEST_CASE("sections shrink as the birth time grows") {
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.5, unit);
        SpatialDensity q = SpatialDensity::uniform(support);
        double prev = std::numeric_limits<double>::infinity();
        for (double s : {0.0, 0.4, 0.8, 1.2, 1.5}) {
            double mass = section_mass(cone, s, q);
            CHECK(mass <= prev);
            prev = mass;
        }
    }

    TEST_CASE("cone measure matches the closed form for poisson growth") {
        NucleationModel model = kjma_model(0.5, support);
        CausalCone zero = make_cone(vec2(2.0, 2.0), 0.0, unit);
        CHECK(cone_measure(zero, model) == 0.0);
        double prev = 0.0;
        for (double t : {0.5, 1.0, 1.5}) {
            CausalCone cone = make_cone(vec2(2.0, 2.0), t, unit);
            double measure = cone_measure(cone, model);
            CHECK(std::abs(measure - kjma_measure(0.5, 1.0, t)) <= 1e-5);
            CHECK(measure >= prev);
            prev = measure;
        }
    }

    TEST_CASE("staircase cone measures (frozen regression values)") {
        // Cross-checked against a 10^7-sample Monte Carlo integration of the
        // cone in the acceptance gate.
        NucleationModel model = staircase_model(support, Box::cube(2, 0.0, 4.0));
        struct Row {
            double t;
            Vector x;
            double measure;
        };
        std::vector<Row> rows = {{0.5, vec2(2.0, 2.0), 0.007252892970},
                                 {1.5, vec2(2.0, 2.0), 0.165066810043},
                                 {2.5, vec2(2.0, 2.0), 0.727318655602},
                                 {1.5, vec2(1.3, 2.6), 0.1639487552},
                                 {2.5, vec2(1.3, 2.6), 0.6345417421}};
        GrowthField g = GrowthField::time_only(TemporalFunction::constant(1.0), 2.5);
        for (const Row& row : rows) {
            CausalCone cone = make_cone(row.x, row.t, g);
            CHECK(cone_measure(cone, model, 1e-8) ==
                  doctest::Approx(row.measure).epsilon(1e-6));
        }
    }

    TEST_CASE("measure rate: closed form and finite differences") {
        NucleationModel model = kjma_model(0.5, support);
        CausalCone zero = make_cone(vec2(2.0, 2.0), 0.0, unit);
        CHECK(cone_measure_rate(zero, model) == 0.0);
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.0, unit);
        // d/dt [alpha pi t^3 / 3] = alpha pi t^2 = pi/2 at t = 1.
        CHECK(cone_measure_rate(cone, model) ==
              doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-5));

        NucleationModel stair = staircase_model(support, Box::cube(2, 0.0, 4.0));
        GrowthField g25 = GrowthField::time_only(TemporalFunction::constant(1.0), 2.5);
        auto fd_check = [&](const NucleationModel& m, const GrowthField& gf, double t,
                            const Vector& x, double delta) {
            double rate = cone_measure_rate(make_cone(x, t, gf), m, 1e-9);
            double hi = cone_measure(make_cone(x, t + delta, gf), m, 1e-9);
            double lo = cone_measure(make_cone(x, t - delta, gf), m, 1e-9);
            double fd = (hi - lo) / (2.0 * delta);
            CHECK(std::abs(rate - fd) <= 1e-3 * std::max(std::abs(rate), 1e-12));
        };
        fd_check(model, unit, 0.7, vec2(2.0, 2.0), 1e-3);
        fd_check(model, unit, 1.2, vec2(1.1, 1.1), 1e-3);
        fd_check(stair, g25, 1.2, vec2(2.0, 2.0), 1e-3);
        fd_check(stair, g25, 2.2, vec2(1.3, 2.6), 1e-3);
        NucleationModel single = stair;
        single.kind = NucleationKind::single_nucleus;
        fd_check(single, g25, 0.8, vec2(2.0, 2.0), 1e-3);
    }

    TEST_CASE("extended surface density and speed scaling") {
        NucleationModel model = kjma_model(0.5, support);
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.0, unit);
        CHECK(extended_surface_density(cone, model) ==
              doctest::Approx(1.5707963267948966).epsilon(1e-5));

        // Doubling G multiplies the rate by 4 and S_ex by 2 (d = 2).
        GrowthField twice = GrowthField::time_only(TemporalFunction::constant(2.0), 3.0);
        CausalCone cone2 = make_cone(vec2(2.0, 2.0), 1.0, twice);
        CHECK(cone_measure_rate(cone2, model) ==
              doctest::Approx(4.0 * cone_measure_rate(cone, model)).epsilon(1e-4));
        CHECK(extended_surface_density(cone2, model) ==
              doctest::Approx(2.0 * extended_surface_density(cone, model)).epsilon(1e-4));
    }

    TEST_CASE("space-only cones agree with the uniform-speed closed form") {
        Box window = Box::cube(2, 0.0, 4.0);
        Grid grid = Grid::over(window.padded(1.0), 0.05);
        GrowthField growth = GrowthField::space_only(ScalarField::constant(grid, 1.0));
        NucleationModel model = kjma_model(0.5, window.padded(1.0));
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.0, growth);
        double measure = cone_measure(cone, model);
        CHECK(measure == doctest::Approx(kjma_measure(0.5, 1.0, 1.0)).epsilon(0.05));
        // The nodal rate integrates the same lattice, so S_ex = rate / G holds
        // exactly.
        CHECK(extended_surface_density(cone, model) ==
              doctest::Approx(cone_measure_rate(cone, model)).epsilon(1e-12));

        // With a constant marginal intensity the nodal measure is piecewise
        // linear in t, with breakpoints at the arrival times; inside a
        // breakpoint-free window the central difference recovers the exact
        // nodal rate. (Straddling a breakpoint legitimately shifts the
        // difference quotient by whole node masses.)
        ScalarField tau = arrival_field(growth, vec2(2.0, 2.0));
        std::vector<double> near = {0.9, 1.1};
        for (long i = 0; i < tau.grid.size(); ++i)
            if (std::abs(tau.values[i] - 1.0) < 0.1) near.push_back(tau.values[i]);
        std::sort(near.begin(), near.end());
        double fd_delta = 1e-4, t_star = 1.0, best = 0.0;
        for (std::size_t i = 0; i + 1 < near.size(); ++i) {
            if (near[i + 1] - near[i] > best) {
                best = near[i + 1] - near[i];
                t_star = 0.5 * (near[i] + near[i + 1]);
            }
        }
        REQUIRE(best > 6.0 * fd_delta);
        double rate_star = cone_measure_rate(make_cone(vec2(2.0, 2.0), t_star, growth), model);
        double up = cone_measure(make_cone(vec2(2.0, 2.0), t_star + fd_delta, growth), model);
        double dn = cone_measure(make_cone(vec2(2.0, 2.0), t_star - fd_delta, growth), model);
        CHECK(std::abs(rate_star - (up - dn) / (2.0 * fd_delta)) <= 1e-3 * rate_star);
    }

    TEST_CASE("batch table equals single evaluations and is thread-stable") {
        NucleationModel model = kjma_model(0.5, support);
        std::vector<std::pair<double, Vector>> pairs = {
            {0.5, vec2(2.0, 2.0)}, {1.0, vec2(2.0, 2.0)}, {1.0, vec2(1.1, 3.2)}};
        auto serial = evaluate_cone_table(unit, model, pairs, 1e-6, 1);
        auto parallel = evaluate_cone_table(unit, model, pairs, 1e-6, 2);
        REQUIRE(serial.size() == pairs.size());
        REQUIRE(parallel.size() == pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            CausalCone cone = make_cone(pairs[i].second, pairs[i].first, unit);
            CHECK(serial[i].measure == cone_measure(cone, model));
            CHECK(serial[i].rate == cone_measure_rate(cone, model));
            CHECK(serial[i].s_ex == extended_surface_density(cone, model));
            CHECK(serial[i].measure == parallel[i].measure);
            CHECK(serial[i].rate == parallel[i].rate);
            CHECK(serial[i].s_ex == parallel[i].s_ex);
        }
    }

    TEST_CASE("dependent models are refused") {
        NucleationModel thinned;
        thinned.kind = NucleationKind::thinned;
        thinned.base = std::make_shared<NucleationModel>(kjma_model(0.5, support));
        CausalCone cone = make_cone(vec2(2.0, 2.0), 1.0, unit);
        CHECK_THROWS_AS(cone_measure(cone, thinned), UnsupportedModelError);
        CHECK_THROWS_AS(cone_measure_rate(cone, thinned), UnsupportedModelError);
    }
}
