#pragma once

// Full realizations of the birth-and-growth process: free nucleation plus the
// history-dependent thinned and free-space variants, with exact capture times,
// union indicators, and the Minkowski surface-mass functional.

#include <cstdint>
#include <vector>

#include "germgrain/grid.hpp"
#include "germgrain/growth.hpp"
#include "germgrain/nucleation.hpp"

namespace germgrain {

struct Realization {
    std::vector<MarkedPoint> accepted;
    std::vector<MarkedPoint> rejected;  // thinned kind only
    const GrowthField* growth = nullptr;
    double horizon = 0.0;
    std::uint64_t seed = 0;   // experiment master seed
    std::uint64_t index = 0;  // realization stream index
    bool saturated = false;   // free_space attempt cap hit; exclude downstream
};

// One realization from stream (seed, index). Thinned models process base
// points in birth order and reject a candidate iff some earlier accepted grain
// captures its site strictly before its birth (the left limit: capture exactly
// at the birth time does not cover). Free-space models redraw the mark
// uniformly on the free region until uncovered, up to 10^6 attempts per birth;
// on overflow the realization is flagged saturated.
Realization realize(const NucleationModel& model, const GrowthField& growth, double horizon,
                    std::uint64_t seed, std::uint64_t index = 0);

// Exact capture time of x by the union process: min over accepted grains;
// kNoCapture when empty. No horizon censoring (callers censor as needed).
double union_capture_time(const Realization& real, const Vector& x);

// Nodewise union capture times on a grid, censored to kNoCapture beyond the
// horizon. Built once per realization and reused across all t by estimators.
ScalarField capture_field(const Realization& real, const Grid& grid);

// 0/1 indicator of the union at time t; node value 1 iff capture time <= t.
// Equals the nodewise maximum of the per-grain indicators exactly (both
// routes evaluate the same capture predicate).
ScalarField union_indicator(const Realization& real, double t, const Grid& grid);

// Minkowski surface mass over A: cell_volume * #{nodes in A in the closed
// r-dilation but not the indicator} / r. Requires r >= 2h.
double minkowski_surface_mass(const ScalarField& indicator, double r, const Box& A);

struct Ensemble {
    std::uint64_t fingerprint = 0;  // config hash, stamped by the harness
    std::uint64_t seed = 0;
    double horizon = 0.0;
    Grid grid;  // template for field-valued estimates
    std::vector<Realization> realizations;
};

// n independent realizations generated in parallel by stream index;
// bit-identical for any thread count.
Ensemble make_ensemble(const NucleationModel& model, const GrowthField& growth, double horizon,
                       long n, std::uint64_t seed, const Grid& grid, int threads = 1);

}  // namespace germgrain
