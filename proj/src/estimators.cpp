#include "germgrain/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

#include "germgrain/distance_transform.hpp"
#include "json.hpp"

namespace germgrain {

namespace {

// Visit every node of `grid` captured by the grain no later than t_lim:
// fn(linear index, capture time). Same capture predicate as the indicator and
// capture-field routes, so all three agree node-for-node.
template <class F>
void visit_grain(const GrowthField& growth, const MarkedPoint& nucleus, const Grid& grid,
                 double t_lim, F&& fn) {
    if (nucleus.birth > t_lim) return;
    int d = grid.dim();
    if (growth.kind() == GrowthKind::time_only) {
        double base = growth.cumulative(nucleus.birth);
        double R = growth.cumulative(t_lim) - base;
        const TemporalFunction& g = growth.speed_profile();
        std::vector<long> lo_idx(d), hi_idx(d), mi(d);
        for (int a = 0; a < d; ++a) {
            double lo = std::max(grid.window.lo[a], nucleus.site[a] - R);
            double hi = std::min(grid.window.hi[a], nucleus.site[a] + R);
            lo_idx[a] = static_cast<long>(std::ceil((lo - grid.window.lo[a]) / grid.spacing - 1e-9));
            hi_idx[a] = static_cast<long>(std::floor((hi - grid.window.lo[a]) / grid.spacing + 1e-9));
            lo_idx[a] = std::max(lo_idx[a], 0L);
            hi_idx[a] = std::min(hi_idx[a], grid.extents[a] - 1);
            if (lo_idx[a] > hi_idx[a]) return;
        }
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
                if (cap <= t_lim) fn(grid.linear_index(mi), cap);
            }
            int a = d - 1;
            while (a >= 0 && ++mi[a] > hi_idx[a]) mi[a] = lo_idx[a], --a;
            if (a < 0) return;
        }
    }
    ScalarField tau = arrival_field(growth, nucleus.site);
    bool same_grid = tau.grid.extents == grid.extents &&
                     (tau.grid.window.lo - grid.window.lo).cwiseAbs().maxCoeff() == 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        double cap = nucleus.birth +
                     (same_grid ? tau.values[i] : tau.values[tau.grid.nearest(grid.node(i))]);
        if (cap <= t_lim) fn(i, cap);
    }
}

// Subgrid of `grid` covering target (intersected, node-aligned); offset maps
// subgrid multi-indices back into `grid`.
struct SubGrid {
    Grid grid;
    std::vector<long> offset;
    bool empty = true;
};

SubGrid subgrid_over(const Grid& grid, const Box& target) {
    int d = grid.dim();
    SubGrid out;
    out.offset.resize(d);
    std::vector<long> hi_idx(d);
    for (int a = 0; a < d; ++a) {
        long i0 = static_cast<long>(std::ceil((target.lo[a] - grid.window.lo[a]) / grid.spacing - 1e-9));
        long i1 = static_cast<long>(std::floor((target.hi[a] - grid.window.lo[a]) / grid.spacing + 1e-9));
        i0 = std::max(i0, 0L);
        i1 = std::min(i1, grid.extents[a] - 1);
        if (i0 > i1) return out;
        out.offset[a] = i0;
        hi_idx[a] = i1;
    }
    // Built directly (not via Grid::over) so single-node-wide slivers at the
    // grid edge stay representable.
    out.grid.spacing = grid.spacing;
    out.grid.window.lo.resize(d);
    out.grid.window.hi.resize(d);
    out.grid.extents.resize(d);
    for (int a = 0; a < d; ++a) {
        out.grid.window.lo[a] = grid.window.lo[a] + out.offset[a] * grid.spacing;
        out.grid.window.hi[a] = grid.window.lo[a] + hi_idx[a] * grid.spacing;
        out.grid.extents[a] = hi_idx[a] - out.offset[a] + 1;
    }
    out.grid.strides.assign(d, 1);
    for (int a = d - 2; a >= 0; --a)
        out.grid.strides[a] = out.grid.strides[a + 1] * out.grid.extents[a + 1];
    out.empty = false;
    return out;
}

void require_r(double r, double h, const char* who) {
    if (r < 2.0 * h * (1.0 - 1e-12))
        throw ConfigError(std::string(who) + ": r must be >= 2h (r = " + format_double(r) +
                          ", h = " + format_double(h) + "); increase r or refine the grid");
}

void require_time(const Ensemble& ens, double t, const char* who) {
    if (ens.realizations.empty()) throw ConfigError(std::string(who) + ": empty ensemble");
    if (t < 0.0 || t > ens.horizon)
        throw ConfigError(std::string(who) + ": need 0 <= t <= horizon");
}

// Shared reduction skeleton: stream realizations in parallel, merge integer
// accumulators under a lock (integer addition commutes, so any merge order
// gives identical results).
template <class Work>
long reduce_realizations(const Ensemble& ens, int threads, Work&& work) {
    std::atomic<long> excluded{0};
    std::mutex merge;
    parallel_for(ens.realizations.size(), threads, [&](std::size_t i) {
        const Realization& real = ens.realizations[i];
        if (real.saturated) {
            ++excluded;
            return;
        }
        work(real, merge);
    });
    return excluded.load();
}

DensityEstimate finalize_binomial(const Ensemble& ens, const std::vector<long>& counts, long used,
                                  long excluded, double scale) {
    DensityEstimate est;
    est.estimate = ScalarField::zeros(ens.grid);
    est.stderr_field = ScalarField::zeros(ens.grid);
    est.n = used;
    est.excluded = excluded;
    double n = static_cast<double>(used);
    for (long i = 0; i < ens.grid.size(); ++i) {
        double p = counts[i] / n;
        est.estimate.values[i] = p * scale;
        est.stderr_field.values[i] = std::sqrt(p * (1.0 - p) / n) * scale;
    }
    return est;
}

DensityEstimate finalize_counts(const Ensemble& ens, const std::vector<long>& sum,
                                const std::vector<long>& sumsq, long used, long excluded,
                                double scale) {
    DensityEstimate est;
    est.estimate = ScalarField::zeros(ens.grid);
    est.stderr_field = ScalarField::zeros(ens.grid);
    est.n = used;
    est.excluded = excluded;
    double n = static_cast<double>(used);
    for (long i = 0; i < ens.grid.size(); ++i) {
        double mean = sum[i] / n;
        double var = used > 1 ? (sumsq[i] - n * mean * mean) / (n - 1.0) : 0.0;
        est.estimate.values[i] = mean * scale;
        est.stderr_field.values[i] = std::sqrt(std::max(var, 0.0) / n) * scale;
    }
    return est;
}

}  // namespace

DensityEstimate estimate_VV(const Ensemble& ens, double t, int threads) {
    require_time(ens, t, "estimate_VV");
    std::vector<long> counts(ens.grid.size(), 0);
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        ScalarField cap = capture_field(real, ens.grid);
        std::lock_guard<std::mutex> lk(m);
        for (long i = 0; i < ens.grid.size(); ++i)
            if (cap.values[i] <= t) ++counts[i];
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_VV: all realizations saturated");
    DensityEstimate est = finalize_binomial(ens, counts, used, excluded, 1.0);
    est.quantity = "V_V";
    est.t = t;
    return est;
}

DensityEstimate estimate_Vex(const Ensemble& ens, double t, int threads) {
    require_time(ens, t, "estimate_Vex");
    std::vector<long> sum(ens.grid.size(), 0), sumsq(ens.grid.size(), 0);
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        std::vector<int> cover(ens.grid.size(), 0);
        for (const MarkedPoint& nucleus : real.accepted)
            visit_grain(*real.growth, nucleus, ens.grid, t,
                        [&](long li, double) { ++cover[li]; });
        std::lock_guard<std::mutex> lk(m);
        for (long i = 0; i < ens.grid.size(); ++i) {
            sum[i] += cover[i];
            sumsq[i] += static_cast<long>(cover[i]) * cover[i];
        }
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_Vex: all realizations saturated");
    DensityEstimate est = finalize_counts(ens, sum, sumsq, used, excluded, 1.0);
    est.quantity = "V_ex";
    est.t = t;
    return est;
}

DensityEstimate estimate_SV(const Ensemble& ens, double t, double r, int threads) {
    require_time(ens, t, "estimate_SV");
    double h = ens.grid.spacing;
    require_r(r, h, "estimate_SV");
    double thresh = (r / h) * (r / h) * (1.0 + 1e-9);
    std::vector<long> counts(ens.grid.size(), 0);
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        ScalarField cap = capture_field(real, ens.grid);
        std::vector<std::uint8_t> support(ens.grid.size());
        for (long i = 0; i < ens.grid.size(); ++i) support[i] = cap.values[i] <= t ? 1 : 0;
        std::vector<double> sq = edt_squared_cells(support, ens.grid.extents);
        std::lock_guard<std::mutex> lk(m);
        for (long i = 0; i < ens.grid.size(); ++i)
            if (sq[i] > 0.0 && sq[i] <= thresh) ++counts[i];
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_SV: all realizations saturated");
    DensityEstimate est = finalize_binomial(ens, counts, used, excluded, 1.0 / r);
    est.quantity = "S_V";
    est.t = t;
    est.r = r;
    return est;
}

DensityEstimate estimate_Sex(const Ensemble& ens, double t, double r, int threads) {
    require_time(ens, t, "estimate_Sex");
    double h = ens.grid.spacing;
    require_r(r, h, "estimate_Sex");
    double thresh = (r / h) * (r / h) * (1.0 + 1e-9);
    std::vector<long> sum(ens.grid.size(), 0), sumsq(ens.grid.size(), 0);
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        std::vector<int> band(ens.grid.size(), 0);
        for (const MarkedPoint& nucleus : real.accepted) {
            if (nucleus.birth > t) continue;
            if (real.growth->kind() == GrowthKind::time_only) {
                // Clip to the grain's reach padded by r + 2h: every in/out
                // decision at distance <= r is unaffected by the clipping.
                double R = real.growth->cumulative(t) - real.growth->cumulative(nucleus.birth);
                Box reach;
                reach.lo = nucleus.site.array() - (R + r + 2.0 * h);
                reach.hi = nucleus.site.array() + (R + r + 2.0 * h);
                SubGrid sub = subgrid_over(ens.grid, reach);
                if (sub.empty) continue;
                std::vector<std::uint8_t> support(sub.grid.size(), 0);
                visit_grain(*real.growth, nucleus, sub.grid, t,
                            [&](long li, double) { support[li] = 1; });
                std::vector<double> sq = edt_squared_cells(support, sub.grid.extents);
                for (long i = 0; i < sub.grid.size(); ++i) {
                    if (!(sq[i] > 0.0 && sq[i] <= thresh)) continue;
                    std::vector<long> mi = sub.grid.multi_index(i);
                    for (int a = 0; a < ens.grid.dim(); ++a) mi[a] += sub.offset[a];
                    ++band[ens.grid.linear_index(mi)];
                }
            } else {
                std::vector<std::uint8_t> support(ens.grid.size(), 0);
                visit_grain(*real.growth, nucleus, ens.grid, t,
                            [&](long li, double) { support[li] = 1; });
                std::vector<double> sq = edt_squared_cells(support, ens.grid.extents);
                for (long i = 0; i < ens.grid.size(); ++i)
                    if (sq[i] > 0.0 && sq[i] <= thresh) ++band[i];
            }
        }
        std::lock_guard<std::mutex> lk(m);
        for (long i = 0; i < ens.grid.size(); ++i) {
            sum[i] += band[i];
            sumsq[i] += static_cast<long>(band[i]) * band[i];
        }
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_Sex: all realizations saturated");
    DensityEstimate est = finalize_counts(ens, sum, sumsq, used, excluded, 1.0 / r);
    est.quantity = "S_ex";
    est.t = t;
    est.r = r;
    return est;
}

std::pair<std::vector<DensityEstimate>, std::vector<DensityEstimate>> estimate_volume_tables(
    const Ensemble& ens, const std::vector<double>& times, int threads) {
    for (double t : times) require_time(ens, t, "estimate_volume_tables");
    if (times.empty()) return {};
    double t_max = *std::max_element(times.begin(), times.end());
    std::size_t K = times.size();
    long N = ens.grid.size();
    std::vector<std::vector<long>> counts(K, std::vector<long>(N, 0));
    std::vector<std::vector<long>> sum(K, std::vector<long>(N, 0)), sumsq(K, std::vector<long>(N, 0));
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        ScalarField cap = capture_field(real, ens.grid);
        std::vector<int> cover(K * N, 0);
        for (const MarkedPoint& nucleus : real.accepted)
            visit_grain(*real.growth, nucleus, ens.grid, t_max, [&](long li, double c) {
                for (std::size_t k = 0; k < K; ++k)
                    if (c <= times[k]) ++cover[k * N + li];
            });
        std::lock_guard<std::mutex> lk(m);
        for (std::size_t k = 0; k < K; ++k)
            for (long i = 0; i < N; ++i) {
                if (cap.values[i] <= times[k]) ++counts[k][i];
                int c = cover[k * N + i];
                sum[k][i] += c;
                sumsq[k][i] += static_cast<long>(c) * c;
            }
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_volume_tables: all realizations saturated");
    std::pair<std::vector<DensityEstimate>, std::vector<DensityEstimate>> out;
    for (std::size_t k = 0; k < K; ++k) {
        DensityEstimate vv = finalize_binomial(ens, counts[k], used, excluded, 1.0);
        vv.quantity = "V_V";
        vv.t = times[k];
        out.first.push_back(std::move(vv));
        DensityEstimate vex = finalize_counts(ens, sum[k], sumsq[k], used, excluded, 1.0);
        vex.quantity = "V_ex";
        vex.t = times[k];
        out.second.push_back(std::move(vex));
    }
    return out;
}

std::vector<DensityEstimate> estimate_SV_tables(const Ensemble& ens,
                                                const std::vector<double>& times, double r,
                                                int threads) {
    for (double t : times) require_time(ens, t, "estimate_SV_tables");
    if (times.empty()) return {};
    double h = ens.grid.spacing;
    require_r(r, h, "estimate_SV_tables");
    double thresh = (r / h) * (r / h) * (1.0 + 1e-9);
    std::size_t K = times.size();
    long N = ens.grid.size();
    std::vector<std::vector<long>> counts(K, std::vector<long>(N, 0));
    long excluded = reduce_realizations(ens, threads, [&](const Realization& real, std::mutex& m) {
        ScalarField cap = capture_field(real, ens.grid);
        std::vector<std::vector<std::uint8_t>> band(K);
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<std::uint8_t> support(N);
            for (long i = 0; i < N; ++i) support[i] = cap.values[i] <= times[k] ? 1 : 0;
            std::vector<double> sq = edt_squared_cells(support, ens.grid.extents);
            band[k].resize(N);
            for (long i = 0; i < N; ++i) band[k][i] = sq[i] > 0.0 && sq[i] <= thresh ? 1 : 0;
        }
        std::lock_guard<std::mutex> lk(m);
        for (std::size_t k = 0; k < K; ++k)
            for (long i = 0; i < N; ++i)
                if (band[k][i]) ++counts[k][i];
    });
    long used = static_cast<long>(ens.realizations.size()) - excluded;
    if (used == 0) throw ConfigError("estimate_SV_tables: all realizations saturated");
    std::vector<DensityEstimate> out;
    for (std::size_t k = 0; k < K; ++k) {
        DensityEstimate est = finalize_binomial(ens, counts[k], used, excluded, 1.0 / r);
        est.quantity = "S_V";
        est.t = times[k];
        est.r = r;
        out.push_back(std::move(est));
    }
    return out;
}

std::vector<double> point_capture_times(const Ensemble& ens, const Vector& x, int threads) {
    std::vector<double> out(ens.realizations.size());
    parallel_for(ens.realizations.size(), threads, [&](std::size_t i) {
        const Realization& real = ens.realizations[i];
        out[i] = real.saturated ? std::numeric_limits<double>::quiet_NaN()
                                : union_capture_time(real, x);
    });
    return out;
}

Eigen::ArrayXXi point_cover_counts(const Ensemble& ens, const Vector& x,
                                   const std::vector<double>& times, int threads) {
    Eigen::ArrayXXi out(ens.realizations.size(), times.size());
    parallel_for(ens.realizations.size(), threads, [&](std::size_t i) {
        const Realization& real = ens.realizations[i];
        if (real.saturated) {
            out.row(i).setConstant(-1);
            return;
        }
        out.row(i).setZero();
        for (const MarkedPoint& nucleus : real.accepted) {
            double cap = grain_capture_time(*real.growth, nucleus, x);
            for (std::size_t k = 0; k < times.size(); ++k)
                if (cap <= times[k]) ++out(i, k);
        }
    });
    return out;
}

CaptureTimeSample sample_capture_time(const Ensemble& ens, const Vector& x, int threads) {
    if (ens.realizations.empty()) throw ConfigError("sample_capture_time: empty ensemble");
    CaptureTimeSample sample;
    sample.x = x;
    std::vector<double> caps = point_capture_times(ens, x, threads);
    for (double c : caps) {
        if (std::isnan(c)) {
            ++sample.excluded;
        } else if (c <= ens.horizon) {
            sample.times.push_back(c);
        } else {
            ++sample.censored;
        }
    }
    std::sort(sample.times.begin(), sample.times.end());
    sample.n = static_cast<long>(sample.times.size()) + sample.censored;
    return sample;
}

AtomReport atom_test(const CaptureTimeSample& sample) {
    AtomReport report;
    long finite = static_cast<long>(sample.times.size());
    if (finite < 100) {
        report.inconclusive = true;
        return report;
    }
    long max_mult = 1, run = 1;
    for (std::size_t i = 1; i < sample.times.size(); ++i) {
        run = sample.times[i] == sample.times[i - 1] ? run + 1 : 1;
        max_mult = std::max(max_mult, run);
    }
    report.max_repeat_fraction = static_cast<double>(max_mult) / static_cast<double>(finite);
    report.max_cdf_jump = static_cast<double>(max_mult) / static_cast<double>(sample.n);
    report.pass = report.max_repeat_fraction <=
                  std::max(2.0 / static_cast<double>(sample.n), 1e-3);
    return report;
}

double ks_statistic(const CaptureTimeSample& sample, const std::function<double(double)>& cdf) {
    if (sample.n == 0) throw ConfigError("ks_statistic: empty sample");
    double n = static_cast<double>(sample.n);
    double d = 0.0;
    for (std::size_t i = 0; i < sample.times.size(); ++i) {
        double F = cdf(sample.times[i]);
        d = std::max(d, std::abs((i + 1.0) / n - F));
        d = std::max(d, std::abs(static_cast<double>(i) / n - F));
    }
    return d;
}

BoxSweep box_sweep(const Ensemble& ens, const Box& A, double h, std::vector<double> vol_times,
                   std::vector<SurfaceItem> sv_items, std::vector<SurfaceItem> sex_items,
                   int threads, const BandOptions& band) {
    BoxSweep sweep;
    sweep.A = A;
    sweep.spacing = h;
    sweep.vol_times = std::move(vol_times);
    sweep.sv_items = std::move(sv_items);
    sweep.sex_items = std::move(sex_items);

    double r_max = 0.0, t_max = 0.0;
    for (double t : sweep.vol_times) t_max = std::max(t_max, t);
    for (const SurfaceItem& it : sweep.sv_items) {
        require_r(it.r, h, "box_sweep");
        r_max = std::max(r_max, it.r);
        t_max = std::max(t_max, it.t);
    }
    for (const SurfaceItem& it : sweep.sex_items) {
        require_r(it.r, h, "box_sweep");
        r_max = std::max(r_max, it.r);
        t_max = std::max(t_max, it.t);
    }
    if (t_max > ens.horizon) throw ConfigError("box_sweep: requested time beyond horizon");

    long pad_cells = static_cast<long>(std::ceil(r_max / h - 1e-9)) + 2;
    Grid grid = Grid::over(A.padded(pad_cells * h), h);
    double cell = grid.cell_volume();
    std::vector<std::uint8_t> in_A(grid.size());
    for (long i = 0; i < grid.size(); ++i)
        in_A[i] = A.contains(grid.node(i), 1e-9 * h) ? 1 : 0;

    // Group surface items by time so one EDT serves every radius at that t.
    std::map<double, std::vector<std::size_t>> sv_by_t, sex_by_t;
    for (std::size_t k = 0; k < sweep.sv_items.size(); ++k)
        sv_by_t[sweep.sv_items[k].t].push_back(k);
    for (std::size_t k = 0; k < sweep.sex_items.size(); ++k)
        sex_by_t[sweep.sex_items[k].t].push_back(k);

    long n = static_cast<long>(ens.realizations.size());
    sweep.vv.assign(sweep.vol_times.size(), std::vector<double>(n, 0.0));
    sweep.vex.assign(sweep.vol_times.size(), std::vector<double>(n, 0.0));
    sweep.sv.assign(sweep.sv_items.size(), std::vector<double>(n, 0.0));
    sweep.sex.assign(sweep.sex_items.size(), std::vector<double>(n, 0.0));
    std::atomic<long> excluded{0};

    parallel_for(n, threads, [&](std::size_t i) {
        const Realization& real = ens.realizations[i];
        if (real.saturated) {
            ++excluded;
            double nan = std::numeric_limits<double>::quiet_NaN();
            for (auto& row : sweep.vv) row[i] = nan;
            for (auto& row : sweep.vex) row[i] = nan;
            for (auto& row : sweep.sv) row[i] = nan;
            for (auto& row : sweep.sex) row[i] = nan;
            return;
        }
        ScalarField cap = capture_field(real, grid);

        for (std::size_t k = 0; k < sweep.vol_times.size(); ++k) {
            long count = 0;
            for (long li = 0; li < grid.size(); ++li)
                if (in_A[li] && cap.values[li] <= sweep.vol_times[k]) ++count;
            sweep.vv[k][i] = count * cell;
        }
        if (!sweep.vol_times.empty()) {
            std::vector<long> cover(sweep.vol_times.size(), 0);
            for (const MarkedPoint& nucleus : real.accepted)
                visit_grain(*real.growth, nucleus, grid, t_max, [&](long li, double c) {
                    if (!in_A[li]) return;
                    for (std::size_t k = 0; k < sweep.vol_times.size(); ++k)
                        if (c <= sweep.vol_times[k]) ++cover[k];
                });
            for (std::size_t k = 0; k < sweep.vol_times.size(); ++k)
                sweep.vex[k][i] = cover[k] * cell;
        }

        for (const auto& [t, items] : sv_by_t) {
            std::vector<std::uint8_t> support(grid.size());
            for (long li = 0; li < grid.size(); ++li) support[li] = cap.values[li] <= t ? 1 : 0;
            std::vector<double> sq = edt_squared_cells(support, grid.extents);
            std::vector<double> sq_in;
            if (band.symmetric) {
                std::vector<std::uint8_t> comp(grid.size());
                for (long li = 0; li < grid.size(); ++li) comp[li] = support[li] ? 0 : 1;
                sq_in = edt_squared_cells(comp, grid.extents);
            }
            for (std::size_t k : items) {
                double rr = sweep.sv_items[k].r / h + band.shift_cells;
                double thresh = rr * rr * (1.0 + 1e-9);
                long count = 0;
                for (long li = 0; li < grid.size(); ++li) {
                    if (!in_A[li]) continue;
                    if (sq[li] > 0.0 && sq[li] <= thresh) ++count;
                    if (band.symmetric && sq_in[li] > 0.0 && sq_in[li] <= thresh) ++count;
                }
                sweep.sv[k][i] =
                    count * cell / sweep.sv_items[k].r / (band.symmetric ? 2.0 : 1.0);
            }
        }

        for (const auto& [t, items] : sex_by_t) {
            double r_here = 0.0;
            for (std::size_t k : items) r_here = std::max(r_here, sweep.sex_items[k].r);
            std::vector<long> counts(items.size(), 0);
            for (const MarkedPoint& nucleus : real.accepted) {
                if (nucleus.birth > t) continue;
                double R = 0.0;
                if (real.growth->kind() == GrowthKind::time_only)
                    R = real.growth->cumulative(t) - real.growth->cumulative(nucleus.birth);
                else
                    R = real.growth->max_speed() * (t - nucleus.birth);
                Box reach;
                reach.lo = nucleus.site.array() - (R + r_here + 2.0 * h);
                reach.hi = nucleus.site.array() + (R + r_here + 2.0 * h);
                SubGrid sub = subgrid_over(grid, reach);
                if (sub.empty) continue;
                std::vector<std::uint8_t> support(sub.grid.size(), 0);
                visit_grain(*real.growth, nucleus, sub.grid, t,
                            [&](long li, double) { support[li] = 1; });
                std::vector<double> sq = edt_squared_cells(support, sub.grid.extents);
                std::vector<double> sq_in;
                if (band.symmetric) {
                    std::vector<std::uint8_t> comp(sub.grid.size());
                    for (long si = 0; si < sub.grid.size(); ++si) comp[si] = support[si] ? 0 : 1;
                    sq_in = edt_squared_cells(comp, sub.grid.extents);
                }
                for (long si = 0; si < sub.grid.size(); ++si) {
                    bool outer = sq[si] > 0.0;
                    bool inner = band.symmetric && sq_in[si] > 0.0;
                    if (!outer && !inner) continue;
                    std::vector<long> mi = sub.grid.multi_index(si);
                    for (int a = 0; a < grid.dim(); ++a) mi[a] += sub.offset[a];
                    if (!in_A[grid.linear_index(mi)]) continue;
                    for (std::size_t j = 0; j < items.size(); ++j) {
                        double rr = sweep.sex_items[items[j]].r / h + band.shift_cells;
                        double thr = rr * rr * (1.0 + 1e-9);
                        if (outer && sq[si] <= thr) ++counts[j];
                        if (inner && sq_in[si] <= thr) ++counts[j];
                    }
                }
            }
            for (std::size_t j = 0; j < items.size(); ++j)
                sweep.sex[items[j]][i] = counts[j] * cell / sweep.sex_items[items[j]].r /
                                         (band.symmetric ? 2.0 : 1.0);
        }
    });
    sweep.excluded = excluded.load();
    return sweep;
}

MeanSE mean_se(const std::vector<double>& values) {
    MeanSE out;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++out.n;
    }
    if (out.n == 0) return out;
    out.mean = sum / out.n;
    double ss = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        ss += (v - out.mean) * (v - out.mean);
    }
    out.se = out.n > 1 ? std::sqrt(ss / (out.n - 1.0) / out.n) : 0.0;
    return out;
}

void write_density_csv(std::ostream& os, const DensityEstimate& est, std::uint64_t fingerprint) {
    os << "# fingerprint=" << hex64(fingerprint) << "\n";
    int d = est.estimate.grid.dim();
    for (int a = 0; a < d; ++a) os << "x" << a << ",";
    os << "estimate,stderr,n,t,quantity,r\n";
    const Grid& grid = est.estimate.grid;
    for (long i = 0; i < grid.size(); ++i) {
        Vector p = grid.node(i);
        for (int a = 0; a < d; ++a) os << format_double(p[a]) << ",";
        os << format_double(est.estimate.values[i]) << "," << format_double(est.stderr_field.values[i])
           << "," << est.n << "," << format_double(est.t) << "," << est.quantity << ","
           << format_double(est.r) << "\n";
    }
}

void write_capture_csv(std::ostream& os, const CaptureTimeSample& sample,
                       std::uint64_t fingerprint) {
    os << "# fingerprint=" << hex64(fingerprint) << "\n";
    os << "capture_time\n";
    for (double t : sample.times) os << format_double(t) << "\n";
}

void write_capture_json(std::ostream& os, const CaptureTimeSample& sample,
                        std::uint64_t fingerprint) {
    nlohmann::json j;
    j["fingerprint"] = hex64(fingerprint);
    j["x"] = std::vector<double>(sample.x.data(), sample.x.data() + sample.x.size());
    j["n"] = sample.n;
    j["finite"] = sample.times.size();
    j["censored"] = sample.censored;
    j["excluded_saturated"] = sample.excluded;
    os << j.dump(2) << "\n";
}

}  // namespace germgrain
