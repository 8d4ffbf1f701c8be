#pragma once

// Nucleation (birth) processes: marked arrivals (T_j, X_j) in time and space.
// Base kinds can be sampled directly; the dependent kinds (thinning against
// the running union, free-space relocation) only fix their candidate arrivals
// here and are resolved during realization, where the grown union is known.

#include <memory>
#include <vector>

#include "germgrain/rng.hpp"
#include "germgrain/spatial.hpp"
#include "germgrain/temporal.hpp"

namespace germgrain {

struct MarkedPoint {
    double birth;  // arrival time T_j
    Vector site;   // nucleation site X_j
};

enum class NucleationKind {
    poisson,         // inhomogeneous Poisson: total rate lambda(t), marks iid q
    single_nucleus,  // one arrival, birth time ~ f, mark ~ q
    staircase,       // one draw T ~ f, arrivals at T, T+1, T+2, ..., marks iid q
    thinned,         // base arrivals kept only if the site is uncovered at birth
    free_space       // base arrival times; marks resampled uniformly on the
                     // uncovered part of a region A at each birth
};

struct NucleationModel {
    NucleationKind kind = NucleationKind::poisson;
    // poisson: total birth rate lambda(t) (arrivals per unit time, whole
    // domain). single_nucleus / staircase: birth-time density f.
    TemporalFunction temporal = TemporalFunction::constant(0.0);
    SpatialDensity spatial = SpatialDensity::uniform(Box::cube(1, 0.0, 1.0));
    // Underlying process for thinned / free_space.
    std::shared_ptr<const NucleationModel> base;
    // Relocation region A for free_space.
    std::optional<Box> free_region;

    // Semantic validation (density normalization, base well-formedness);
    // throws ConfigError naming the field.
    void validate() const;
    bool is_base_kind() const {
        return kind == NucleationKind::poisson || kind == NucleationKind::single_nucleus ||
               kind == NucleationKind::staircase;
    }
};

// Arrivals of a base-kind model sorted by birth time. Poisson and staircase
// arrivals live on [0, horizon]; single_nucleus draws its one birth from the
// full law, so the point may land past the horizon (callers see an empty
// structure then, matching an exact-simulation view of the window).
// Dependent kinds throw UnsupportedModelError (realize them instead).
std::vector<MarkedPoint> sample_arrivals(const NucleationModel& model, double horizon,
                                         Philox4x32& g);
// Same, seeding a fresh stream (key = seed, stream = 0).
std::vector<MarkedPoint> sample_arrivals(const NucleationModel& model, double horizon,
                                         std::uint64_t seed);

// Marginal temporal intensity density at t: lambda(t) for poisson, f(t) for
// single_nucleus, the shifted-density sum for staircase.
double marginal_temporal_density(const NucleationModel& model, double t);

// First-order intensity density at (t, x): expected arrivals per unit time and
// volume. Closed-form for base kinds; UnsupportedModelError otherwise.
double intensity_density(const NucleationModel& model, double t, const Vector& x);

// Expected number of arrivals in [0, t] (the marginal cumulative intensity).
// Closed-form for base kinds; UnsupportedModelError otherwise.
double marginal_cumulative_intensity(const NucleationModel& model, double t);

// Birth-time inverse-CDF table for the model's temporal part, covering [0,
// t_end]; shared by the samplers so draws are reproducible and atom-free.
TemporalFunction::InverseTable birth_time_table(const TemporalFunction& f, double horizon);

}  // namespace germgrain
