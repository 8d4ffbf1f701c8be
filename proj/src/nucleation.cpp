#include "germgrain/nucleation.hpp"

#include <algorithm>
#include <cmath>

namespace germgrain {

void NucleationModel::validate() const {
    switch (kind) {
        case NucleationKind::poisson:
            break;
        case NucleationKind::single_nucleus:
        case NucleationKind::staircase:
            if (!temporal.is_probability_density(1e-6))
                throw ConfigError(
                    "model.temporal: birth-time profile must integrate to 1 (got mass " +
                    format_double(temporal.total_mass()) + ")");
            break;
        case NucleationKind::thinned:
        case NucleationKind::free_space:
            if (!base) throw ConfigError("model.base: dependent nucleation kinds need a base model");
            if (!base->is_base_kind())
                throw ConfigError("model.base.kind: dependent kinds cannot be nested");
            base->validate();
            if (kind == NucleationKind::free_space) {
                if (!free_region)
                    throw ConfigError("model.free_region: required for the free_space kind");
                if (free_region->dim() != base->spatial.dim())
                    throw ConfigError("model.free_region: dimension does not match the model");
            }
            break;
    }
}

TemporalFunction::InverseTable birth_time_table(const TemporalFunction& f, double horizon) {
    double t_end = horizon;
    if (f.kind() == TemporalFunction::Kind::exponential) {
        // Cover all but 1e-12 of the mass so the clamp at the far end is
        // unobservable in practice.
        double rate = f.value(0.0);
        t_end = std::max(horizon, -std::log(1e-12) / rate);
    } else if (std::isfinite(f.support_end())) {
        t_end = std::max(horizon, f.support_end());
    }
    return f.inverse_table(t_end, 1000);
}

namespace {

std::vector<MarkedPoint> sample_poisson(const NucleationModel& model, double horizon,
                                        Philox4x32& g) {
    double mean = model.temporal.integral0(horizon);
    long count = poisson_count(g, mean);
    std::vector<MarkedPoint> pts;
    pts.reserve(static_cast<std::size_t>(count));
    if (count == 0) return pts;
    auto table = model.temporal.inverse_table(horizon, 1000);
    for (long i = 0; i < count; ++i) {
        MarkedPoint p;
        p.birth = table.sample(uniform01(g));
        p.site = model.spatial.sample(g);
        pts.push_back(std::move(p));
    }
    std::sort(pts.begin(), pts.end(),
              [](const MarkedPoint& a, const MarkedPoint& b) { return a.birth < b.birth; });
    return pts;
}

std::vector<MarkedPoint> sample_single(const NucleationModel& model, Philox4x32& g,
                                       double horizon) {
    auto table = birth_time_table(model.temporal, horizon);
    MarkedPoint p;
    p.birth = table.sample(uniform01(g));
    p.site = model.spatial.sample(g);
    return {std::move(p)};
}

std::vector<MarkedPoint> sample_staircase(const NucleationModel& model, double horizon,
                                          Philox4x32& g) {
    auto table = birth_time_table(model.temporal, horizon);
    double t0 = table.sample(uniform01(g));
    std::vector<MarkedPoint> pts;
    for (double t = t0; t <= horizon; t += 1.0) {
        MarkedPoint p;
        p.birth = t;
        p.site = model.spatial.sample(g);
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace

std::vector<MarkedPoint> sample_arrivals(const NucleationModel& model, double horizon,
                                         Philox4x32& g) {
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_arrivals: horizon must be > 0");
    switch (model.kind) {
        case NucleationKind::poisson:
            return sample_poisson(model, horizon, g);
        case NucleationKind::single_nucleus:
            return sample_single(model, g, horizon);
        case NucleationKind::staircase:
            return sample_staircase(model, horizon, g);
        default:
            throw UnsupportedModelError(
                "sample_arrivals: dependent nucleation kinds are resolved by realize()");
    }
}

std::vector<MarkedPoint> sample_arrivals(const NucleationModel& model, double horizon,
                                         std::uint64_t seed) {
    Philox4x32 g(seed, 0);
    return sample_arrivals(model, horizon, g);
}

double marginal_temporal_density(const NucleationModel& model, double t) {
    if (t < 0.0) return 0.0;
    switch (model.kind) {
        case NucleationKind::poisson:
        case NucleationKind::single_nucleus:
            return model.temporal.value(t);
        case NucleationKind::staircase:
            return staircase_density(model.temporal, t);
        default:
            throw UnsupportedModelError(
                "marginal_temporal_density: no closed form for dependent nucleation kinds");
    }
}

double intensity_density(const NucleationModel& model, double t, const Vector& x) {
    return marginal_temporal_density(model, t) * model.spatial.density(x);
}

double marginal_cumulative_intensity(const NucleationModel& model, double t) {
    switch (model.kind) {
        case NucleationKind::poisson:
        case NucleationKind::single_nucleus:
            return model.temporal.integral0(t);
        case NucleationKind::staircase:
            return staircase_cumulative(model.temporal, t);
        default:
            throw UnsupportedModelError(
                "marginal_cumulative_intensity: no closed form for dependent nucleation kinds");
    }
}

}  // namespace germgrain
