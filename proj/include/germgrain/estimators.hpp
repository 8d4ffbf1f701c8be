#pragma once

// Ensemble -> estimates of the four mean densities (V_V, V_ex, S_V, S_ex)
// and the capture-time law. Two access paths: nodewise DensityEstimate fields
// on the ensemble's template grid, and a streaming box sweep that reduces each
// realization to scalar functionals over a test box (one capture field per
// realization, reused across all requested times and radii).

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "germgrain/simulate.hpp"

namespace germgrain {

struct DensityEstimate {
    std::string quantity;  // "V_V", "V_ex", "S_V", "S_ex"
    double t = 0.0;
    double r = 0.0;  // Minkowski radius; 0 for volume quantities
    ScalarField estimate;
    ScalarField stderr_field;
    long n = 0;         // realizations used
    long excluded = 0;  // saturated realizations skipped
};

struct CaptureTimeSample {
    Vector x;
    std::vector<double> times;  // finite capture times, sorted
    long censored = 0;          // no capture by the horizon
    long n = 0;                 // realizations used (finite + censored)
    long excluded = 0;
};

// Nodewise fraction of realizations covering each node by t; binomial SE.
DensityEstimate estimate_VV(const Ensemble& ens, double t, int threads = 1);
// Nodewise mean of per-realization grain cover counts; SE from their sample
// variance.
DensityEstimate estimate_Vex(const Ensemble& ens, double t, int threads = 1);
// Nodewise mean of 1{node in the r-dilation minus the union}/r. r >= 2h.
DensityEstimate estimate_SV(const Ensemble& ens, double t, double r, int threads = 1);
// Like estimate_SV but per-grain bands summed before averaging. r >= 2h.
DensityEstimate estimate_Sex(const Ensemble& ens, double t, double r, int threads = 1);

// One streaming pass over the ensemble: V_V and V_ex estimates at every
// requested time (first and second of the returned pair), sharing each
// realization's capture field. Equal to the per-time estimators.
std::pair<std::vector<DensityEstimate>, std::vector<DensityEstimate>> estimate_volume_tables(
    const Ensemble& ens, const std::vector<double>& times, int threads = 1);
// Same idea for S_V at one radius across every requested time.
std::vector<DensityEstimate> estimate_SV_tables(const Ensemble& ens,
                                                const std::vector<double>& times, double r,
                                                int threads = 1);

// Exact capture times at x (analytic radii / eikonal fields; no time grid),
// censored at the horizon.
CaptureTimeSample sample_capture_time(const Ensemble& ens, const Vector& x, int threads = 1);

struct AtomReport {
    double max_repeat_fraction = 0.0;  // largest tie multiplicity / finite count
    double max_cdf_jump = 0.0;         // largest tie multiplicity / n
    bool pass = false;
    bool inconclusive = false;  // fewer than 100 finite samples
};
// Empirical absolute-continuity proxy: pass iff the largest exact-tie
// fraction is <= max(2/n, 1e-3).
AtomReport atom_test(const CaptureTimeSample& sample);

// Two-sided Kolmogorov-Smirnov distance between the sample's empirical CDF
// (censored mass sits above the horizon) and a reference CDF.
double ks_statistic(const CaptureTimeSample& sample, const std::function<double(double)>& cdf);

// Per-realization exact capture times at x (kNoCapture if never; saturated
// realizations yield NaN). Index-aligned across calls for paired statistics.
std::vector<double> point_capture_times(const Ensemble& ens, const Vector& x, int threads = 1);
// Per-realization count of grains covering x by each time; NaN-free integer
// matrix with -1 rows for saturated realizations.
Eigen::ArrayXXi point_cover_counts(const Ensemble& ens, const Vector& x,
                                   const std::vector<double>& times, int threads = 1);

// Scalar functionals over a test box A, one value per realization (NaN for
// saturated). Volume rows are integrals over A of the union indicator /
// cover count; surface rows are Minkowski masses over A at the given radius,
// union-based (sv) or summed per grain (sex). Grid: A padded by
// max(radii) + 2h, spacing h; the padding makes every dilation decision
// inside A exact.
struct SurfaceItem {
    double t = 0.0;
    double r = 0.0;
};
// Band construction for the surface rows. The default reproduces the plain
// one-sided Minkowski band. `symmetric` averages the outer band with the
// inner band (distance to the complement), cancelling the O(r) curvature and
// junction-wedge biases; `shift_cells` widens the threshold to (r/h + shift)^2
// cells^2 to compensate the half-cell offset between the digitized support
// and the true interface.
struct BandOptions {
    bool symmetric = false;
    double shift_cells = 0.0;
};
struct BoxSweep {
    Box A;
    double spacing = 0.0;
    std::vector<double> vol_times;
    std::vector<SurfaceItem> sv_items, sex_items;
    std::vector<std::vector<double>> vv, vex;  // [time index][realization]
    std::vector<std::vector<double>> sv, sex;  // [item index][realization]
    long excluded = 0;
};
BoxSweep box_sweep(const Ensemble& ens, const Box& A, double h, std::vector<double> vol_times,
                   std::vector<SurfaceItem> sv_items, std::vector<SurfaceItem> sex_items,
                   int threads = 1, const BandOptions& band = {});

// Mean and standard error of a per-realization vector, skipping NaNs.
struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
    long n = 0;
};
MeanSE mean_se(const std::vector<double>& values);

// CSV with columns (axis coordinates..., estimate, stderr, n, t, quantity, r);
// a fingerprint comment line leads every file.
void write_density_csv(std::ostream& os, const DensityEstimate& est, std::uint64_t fingerprint);
// Sorted finite capture times, one per line; censoring metadata goes to the
// JSON sidecar.
void write_capture_csv(std::ostream& os, const CaptureTimeSample& sample,
                       std::uint64_t fingerprint);
void write_capture_json(std::ostream& os, const CaptureTimeSample& sample,
                        std::uint64_t fingerprint);

}  // namespace germgrain
