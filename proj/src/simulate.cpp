#include "germgrain/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "germgrain/rng.hpp"

namespace germgrain {

namespace {

constexpr long kFreeSpaceAttemptCap = 1000000;

// Capture of x by the earliest of the accepted grains born before `cutoff`.
// Used by the history-dependent acceptance loops; exact (analytic radii or a
// fresh eikonal solve per grain).
double capture_by_accepted(const std::vector<MarkedPoint>& accepted, const GrowthField& growth,
                           const Vector& x) {
    double best = kNoCapture;
    for (const MarkedPoint& g : accepted)
        best = std::min(best, grain_capture_time(growth, g, x));
    return best;
}

}  // namespace

Realization realize(const NucleationModel& model, const GrowthField& growth, double horizon,
                    std::uint64_t seed, std::uint64_t index) {
    if (horizon <= 0.0) throw ConfigError("realize: horizon must be > 0");
    model.validate();
    Realization real;
    real.growth = &growth;
    real.horizon = horizon;
    real.seed = seed;
    real.index = index;
    Philox4x32 rng = realization_rng(seed, index);

    if (model.is_base_kind()) {
        real.accepted = sample_arrivals(model, horizon, rng);
        return real;
    }

    std::vector<MarkedPoint> base = sample_arrivals(*model.base, horizon, rng);
    std::stable_sort(base.begin(), base.end(),
                     [](const MarkedPoint& a, const MarkedPoint& b) { return a.birth < b.birth; });

    if (model.kind == NucleationKind::thinned) {
        for (const MarkedPoint& cand : base) {
            // Covered at T_j-: strictly earlier capture rejects.
            if (capture_by_accepted(real.accepted, growth, cand.site) < cand.birth)
                real.rejected.push_back(cand);
            else
                real.accepted.push_back(cand);
        }
        return real;
    }

    // free_space: keep base birth times, redraw marks uniformly on the free
    // region until uncovered at T_j-.
    const Box& region = *model.free_region;
    for (const MarkedPoint& cand : base) {
        bool placed = false;
        for (long attempt = 0; attempt < kFreeSpaceAttemptCap; ++attempt) {
            Vector site = point_in_box(rng, region);
            if (!(capture_by_accepted(real.accepted, growth, site) < cand.birth)) {
                real.accepted.push_back({cand.birth, site});
                placed = true;
                break;
            }
        }
        if (!placed) real.saturated = true;
    }
    return real;
}

double union_capture_time(const Realization& real, const Vector& x) {
    return capture_by_accepted(real.accepted, *real.growth, x);
}

ScalarField capture_field(const Realization& real, const Grid& grid) {
    ScalarField out = ScalarField::constant(grid, kNoCapture);
    const GrowthField& growth = *real.growth;
    int d = grid.window.dim();
    if (growth.kind() == GrowthKind::time_only) {
        double Ch = growth.cumulative(real.horizon);
        const TemporalFunction& g = growth.speed_profile();
        std::vector<long> lo_idx(d), hi_idx(d), mi(d);
        for (const MarkedPoint& nucleus : real.accepted) {
            double base = growth.cumulative(nucleus.birth);
            double R = Ch - base;  // reach by the horizon
            if (R < 0.0) continue;
            bool empty = false;
            for (int a = 0; a < d; ++a) {
                double lo = std::max(grid.window.lo[a], nucleus.site[a] - R);
                double hi = std::min(grid.window.hi[a], nucleus.site[a] + R);
                lo_idx[a] = static_cast<long>(std::ceil((lo - grid.window.lo[a]) / grid.spacing - 1e-9));
                hi_idx[a] = static_cast<long>(std::floor((hi - grid.window.lo[a]) / grid.spacing + 1e-9));
                lo_idx[a] = std::max(lo_idx[a], 0L);
                hi_idx[a] = std::min(hi_idx[a], grid.extents[a] - 1);
                if (lo_idx[a] > hi_idx[a]) empty = true;
            }
            if (empty) continue;
            mi = lo_idx;
            while (true) {
                double dist2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    double dx = grid.window.lo[a] + mi[a] * grid.spacing - nucleus.site[a];
                    dist2 += dx * dx;
                }
                if (dist2 <= R * R * (1.0 + 1e-12)) {
                    double cap = dist2 == 0.0 ? nucleus.birth
                                              : g.inverse_integral0(base + std::sqrt(dist2));
                    long li = grid.linear_index(mi);
                    out.values[li] = std::min(out.values[li], cap);
                }
                int a = d - 1;
                while (a >= 0 && ++mi[a] > hi_idx[a]) mi[a] = lo_idx[a], --a;
                if (a < 0) break;
            }
        }
    } else {
        for (const MarkedPoint& nucleus : real.accepted) {
            ScalarField tau = arrival_field(growth, nucleus.site);
            // Same padded grid fast path; otherwise resample at nearest nodes.
            bool same_grid = tau.grid.extents == grid.extents &&
                             (tau.grid.window.lo - grid.window.lo).cwiseAbs().maxCoeff() == 0.0;
            if (same_grid) {
                for (long i = 0; i < grid.size(); ++i)
                    out.values[i] = std::min(out.values[i], nucleus.birth + tau.values[i]);
            } else {
                for (long i = 0; i < grid.size(); ++i)
                    out.values[i] = std::min(
                        out.values[i], nucleus.birth + tau.values[tau.grid.nearest(grid.node(i))]);
            }
        }
    }
    for (long i = 0; i < grid.size(); ++i)
        if (out.values[i] > real.horizon) out.values[i] = kNoCapture;
    return out;
}

ScalarField union_indicator(const Realization& real, double t, const Grid& grid) {
    if (t < 0.0 || t > real.horizon)
        throw std::domain_error("union_indicator: need 0 <= t <= horizon");
    ScalarField out = ScalarField::zeros(grid);
    for (const MarkedPoint& nucleus : real.accepted) {
        ScalarField one = grain_indicator(*real.growth, nucleus, t, grid);
        out.values = out.values.max(one.values);
    }
    return out;
}

double minkowski_surface_mass(const ScalarField& indicator, double r, const Box& A) {
    double h = indicator.grid.spacing;
    if (r < 2.0 * h * (1.0 - 1e-12))
        throw ConfigError("minkowski_surface_mass: r must be >= 2h (r = " + format_double(r) +
                          ", h = " + format_double(h) + "); increase r or refine the grid");
    ScalarField dil = dilate(indicator, r);
    const Grid& grid = indicator.grid;
    long count = 0;
    for (long i = 0; i < grid.size(); ++i) {
        if (dil.values[i] <= 0.5 || indicator.values[i] > 0.5) continue;
        if (A.contains(grid.node(i), 1e-9 * h)) ++count;
    }
    return grid.cell_volume() * static_cast<double>(count) / r;
}

Ensemble make_ensemble(const NucleationModel& model, const GrowthField& growth, double horizon,
                       long n, std::uint64_t seed, const Grid& grid, int threads) {
    if (n <= 0) throw ConfigError("make_ensemble: n must be > 0");
    Ensemble ens;
    ens.seed = seed;
    ens.horizon = horizon;
    ens.grid = grid;
    ens.realizations.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        ens.realizations[i] = realize(model, growth, horizon, seed, i);
    });
    return ens;
}

}  // namespace germgrain
