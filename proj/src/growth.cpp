#include "germgrain/growth.hpp"

#include <cmath>

#include "germgrain/distance_transform.hpp"

namespace germgrain {

GrowthField GrowthField::time_only(TemporalFunction speed, double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("growth.horizon: must be > 0");
    GrowthField f;
    f.kind_ = GrowthKind::time_only;
    f.horizon_ = horizon;
    // Establish the bounds 0 < g0 <= G <= G0 on [0, horizon].
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    switch (speed.kind()) {
        case TemporalFunction::Kind::constant:
            lo = hi = speed.value(0.0);
            break;
        case TemporalFunction::Kind::exponential:
            hi = speed.value(0.0);
            lo = speed.value(horizon);
            break;
        case TemporalFunction::Kind::piecewise_linear: {
            if (speed.support_end() < horizon || speed.value(0.0) <= 0.0)
                throw ConfigError(
                    "growth.speed: piecewise profile must cover [0, horizon] with positive "
                    "values");
            // Piecewise-linear extrema occur at knots; probe densely enough to
            // catch every knot inside [0, horizon].
            for (int i = 0; i <= 4096; ++i) {
                double v = speed.value(horizon * i / 4096.0);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            break;
        }
    }
    if (!(lo > 0.0))
        throw ConfigError("growth.speed: must be bounded below by a positive g0 on [0, horizon]");
    f.speed_t_ = std::move(speed);
    f.g0_ = lo;
    f.G0_ = hi;
    return f;
}

GrowthField GrowthField::space_only(ScalarField speed) {
    if (speed.values.size() == 0) throw ConfigError("growth.speed: empty speed field");
    double lo = speed.values.minCoeff(), hi = speed.values.maxCoeff();
    if (!(lo > 0.0) || !std::isfinite(hi))
        throw ConfigError("growth.speed: all speed samples must be positive and finite");
    GrowthField f;
    f.kind_ = GrowthKind::space_only;
    f.speed_x_ = std::move(speed);
    f.g0_ = lo;
    f.G0_ = hi;
    return f;
}

const ScalarField& GrowthField::speed_field() const {
    if (kind_ != GrowthKind::space_only)
        throw std::logic_error("GrowthField::speed_field: time_only field");
    return speed_x_;
}

const TemporalFunction& GrowthField::speed_profile() const {
    if (kind_ != GrowthKind::time_only)
        throw std::logic_error("GrowthField::speed_profile: space_only field");
    return speed_t_;
}

double GrowthField::speed_at(double t, const Vector& x) const {
    if (kind_ == GrowthKind::time_only) return speed_t_.value(t);
    return speed_x_.values[speed_x_.grid.nearest(x)];
}

double GrowthField::cumulative(double t) const {
    if (kind_ != GrowthKind::time_only)
        throw std::logic_error("GrowthField::cumulative: space_only field");
    return speed_t_.integral0(t);
}

double radius(const GrowthField& field, double s, double t) {
    if (field.kind() != GrowthKind::time_only)
        throw std::logic_error("radius: only defined for time_only growth");
    if (!(0.0 <= s) || s > t) throw std::domain_error("radius: need 0 <= s <= t");
    return field.cumulative(t) - field.cumulative(s);
}

ScalarField arrival_field(const GrowthField& field, const Vector& source) {
    const ScalarField& speed = field.speed_field();
    long src = speed.grid.nearest(source);  // throws domain_error outside window
    ScalarField tau;
    tau.grid = speed.grid;
    tau.values = solve_eikonal(speed.grid, speed.values, src);
    return tau;
}

double grain_capture_time(const GrowthField& field, const MarkedPoint& nucleus, const Vector& x) {
    if (field.kind() == GrowthKind::time_only) {
        double dist = (x - nucleus.site).norm();
        if (dist == 0.0) return nucleus.birth;
        double target = field.cumulative(nucleus.birth) + dist;
        return field.speed_profile().inverse_integral0(target);
    }
    ScalarField tau = arrival_field(field, nucleus.site);
    return grain_capture_time(field, nucleus, tau, x);
}

double grain_capture_time(const GrowthField& field, const MarkedPoint& nucleus,
                          const ScalarField& arrivals_from_site, const Vector& x) {
    if (field.kind() == GrowthKind::time_only)
        return grain_capture_time(field, nucleus, x);
    return nucleus.birth + arrivals_from_site.values[arrivals_from_site.grid.nearest(x)];
}

ScalarField grain_indicator(const GrowthField& field, const MarkedPoint& nucleus, double t,
                            const Grid& grid) {
    if (t < 0.0) throw std::domain_error("grain_indicator: t must be >= 0");
    ScalarField out = ScalarField::zeros(grid);
    if (t < nucleus.birth) return out;  // unborn grain is empty
    if (field.kind() == GrowthKind::time_only) {
        // Scan only the bounding sub-box of the ball; membership uses the
        // capture-time predicate itself so per-grain indicators agree exactly
        // with union_capture_time-based fields.
        double R = radius(field, nucleus.birth, t);
        double base = field.cumulative(nucleus.birth);
        const TemporalFunction& g = field.speed_profile();
        int d = grid.dim();
        std::vector<long> lo(d), hi(d);
        for (int a = 0; a < d; ++a) {
            double flo =
                std::ceil((nucleus.site[a] - R - grid.window.lo[a]) / grid.spacing - 1e-9);
            double fhi =
                std::floor((nucleus.site[a] + R - grid.window.lo[a]) / grid.spacing + 1e-9);
            lo[a] = std::max(0L, static_cast<long>(flo));
            hi[a] = std::min(grid.extents[a] - 1, static_cast<long>(fhi));
            if (lo[a] > hi[a]) return out;
        }
        std::vector<long> mi = lo;
        for (;;) {
            double dist2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double delta = grid.window.lo[a] + mi[a] * grid.spacing - nucleus.site[a];
                dist2 += delta * delta;
            }
            double cap = dist2 == 0.0 ? nucleus.birth
                                      : g.inverse_integral0(base + std::sqrt(dist2));
            if (cap <= t) out.values[grid.linear_index(mi)] = 1.0;
            int a = d - 1;
            while (a >= 0 && ++mi[a] > hi[a]) mi[a] = lo[a], --a;
            if (a < 0) break;
        }
        return out;
    }
    ScalarField tau = arrival_field(field, nucleus.site);
    bool same_grid = tau.grid.window.lo == grid.window.lo && tau.grid.window.hi == grid.window.hi &&
                     tau.grid.spacing == grid.spacing;
    for (long i = 0; i < grid.size(); ++i) {
        long j = same_grid ? i : tau.grid.nearest(grid.node(i));
        if (nucleus.birth + tau.values[j] <= t) out.values[i] = 1.0;
    }
    return out;
}

ScalarField dilate(const ScalarField& indicator, double r) {
    if (r < 0.0) throw std::domain_error("dilate: r must be >= 0");
    std::vector<double> d2 = edt_squared_cells(indicator);
    double thr_cells = (r / indicator.grid.spacing) * (r / indicator.grid.spacing);
    thr_cells *= 1.0 + 1e-9;  // keep exact-multiple ties inside
    ScalarField out = ScalarField::zeros(indicator.grid);
    for (long i = 0; i < indicator.grid.size(); ++i)
        if (d2[static_cast<std::size_t>(i)] <= thr_cells) out.values[i] = 1.0;
    return out;
}

}  // namespace germgrain
