#pragma once

// Normal-growth model for the two supported speed families. time_only fields
// G(t) give analytic ball radii R(s,t) = C(t) - C(s) with exact cumulative
// inversion for capture times; space_only fields G(x) give eikonal travel
// times solved once per source by fast marching.

#include <memory>

#include "germgrain/fast_marching.hpp"
#include "germgrain/grid.hpp"
#include "germgrain/nucleation.hpp"
#include "germgrain/temporal.hpp"

namespace germgrain {

enum class GrowthKind { time_only, space_only };

class GrowthField {
public:
    // Speed profile G(t); must stay within positive bounds on [0, horizon]
    // (piecewise-linear profiles must cover [0, horizon]).
    static GrowthField time_only(TemporalFunction speed, double horizon);
    // Speed samples G(x) on the padded grid; all values positive, finite.
    static GrowthField space_only(ScalarField speed);

    GrowthKind kind() const { return kind_; }
    double min_speed() const { return g0_; }
    double max_speed() const { return G0_; }
    double horizon() const { return horizon_; }
    const ScalarField& speed_field() const;
    const TemporalFunction& speed_profile() const;

    // Speed at (t, x): G(t) for time_only, G at the node nearest x otherwise.
    double speed_at(double t, const Vector& x) const;
    // Cumulative growth C(t) = int_0^t G (time_only).
    double cumulative(double t) const;

private:
    GrowthKind kind_ = GrowthKind::time_only;
    TemporalFunction speed_t_ = TemporalFunction::constant(1.0);
    ScalarField speed_x_;
    double g0_ = 1.0, G0_ = 1.0, horizon_ = 0.0;
};

// Ball radius R(s,t) of a grain born at s, observed at t (time_only only).
// Throws std::domain_error unless 0 <= s <= t.
double radius(const GrowthField& field, double s, double t);

// Travel times from `source` (snapped to the nearest node of the speed grid)
// to every node, by fast marching (space_only only).
ScalarField arrival_field(const GrowthField& field, const Vector& source);

// First time t >= birth with x inside the grain; +inf if never reached.
// space_only: solves one eikonal problem per call — pass a cached arrival
// field via the overload on hot paths.
double grain_capture_time(const GrowthField& field, const MarkedPoint& nucleus, const Vector& x);
double grain_capture_time(const GrowthField& field, const MarkedPoint& nucleus,
                          const ScalarField& arrivals_from_site, const Vector& x);

// 0/1 field over `grid`: node covered by the grain at time t. Empty whenever
// t < birth.
ScalarField grain_indicator(const GrowthField& field, const MarkedPoint& nucleus, double t,
                            const Grid& grid);

// Closed r-neighborhood of the indicator's node support: node is 1 iff its
// Euclidean distance to the support is <= r (ties at exact cell multiples
// included). r >= 0; dilate(., 0) reproduces the support.
ScalarField dilate(const ScalarField& indicator, double r);

}  // namespace germgrain
