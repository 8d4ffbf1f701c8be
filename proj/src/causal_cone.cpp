#include "germgrain/causal_cone.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "germgrain/quadrature.hpp"

namespace germgrain {

namespace {

// Radii at which a sphere about c starts/stops being clipped by the support
// box of q: per-face distances and corner distances. Integrands are smooth
// between consecutive values.
std::vector<double> clip_radii(const SpatialDensity& q, const Vector& c) {
    const Box& b = q.support_box();
    int d = c.size();
    std::vector<double> out;
    for (int a = 0; a < d; ++a) {
        out.push_back(std::abs(b.lo[a] - c[a]));
        out.push_back(std::abs(b.hi[a] - c[a]));
    }
    // Corners (2^d of them); for d = 3 also edge lines.
    for (int mask = 0; mask < (1 << d); ++mask) {
        double s2 = 0.0;
        for (int a = 0; a < d; ++a) {
            double v = ((mask >> a) & 1) ? b.hi[a] : b.lo[a];
            s2 += (v - c[a]) * (v - c[a]);
        }
        out.push_back(std::sqrt(s2));
    }
    if (d == 3) {
        for (int a = 0; a < 3; ++a)
            for (int m = 0; m < 4; ++m) {
                double s2 = 0.0;
                int k = 0;
                for (int b2 = 0; b2 < 3; ++b2) {
                    if (b2 == a) continue;
                    double v = ((m >> k) & 1) ? b.hi[b2] : b.lo[b2];
                    s2 += (v - c[b2]) * (v - c[b2]);
                    ++k;
                }
                out.push_back(std::sqrt(s2));
            }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Integral of q over the sphere |y - c| = r. d = 2: exact arc segmentation at
// the support-box crossings with Gauss-Legendre on each interior arc; d = 3:
// product rule with q evaluated pointwise (documented O(1/N) if the sphere is
// clipped; shipped 3-d configs keep sections unclipped).
double surface_mass(const SpatialDensity& q, const Vector& c, double r) {
    if (r <= 0.0) return 0.0;
    int d = static_cast<int>(c.size());
    if (d == 2) {
        const Box& b = q.support_box();
        std::vector<double> angles;
        auto push_cos = [&](double u) {
            if (u >= -1.0 && u <= 1.0) {
                double a = std::acos(u);
                angles.push_back(a);
                angles.push_back(2.0 * M_PI - a);
            }
        };
        auto push_sin = [&](double v) {
            if (v >= -1.0 && v <= 1.0) {
                double a = std::asin(v);
                angles.push_back(a < 0.0 ? a + 2.0 * M_PI : a);
                double a2 = M_PI - a;
                angles.push_back(a2 < 0.0 ? a2 + 2.0 * M_PI : a2);
            }
        };
        push_cos((b.lo[0] - c[0]) / r);
        push_cos((b.hi[0] - c[0]) / r);
        push_sin((b.lo[1] - c[1]) / r);
        push_sin((b.hi[1] - c[1]) / r);
        angles.push_back(0.0);
        std::sort(angles.begin(), angles.end());
        angles.erase(std::unique(angles.begin(), angles.end()), angles.end());

        const GaussRule& rule = gauss_legendre(16);
        double total = 0.0;
        Vector p(2);
        std::size_t m = angles.size();
        for (std::size_t i = 0; i < m; ++i) {
            double a0 = angles[i];
            double a1 = (i + 1 < m) ? angles[i + 1] : angles[0] + 2.0 * M_PI;
            if (a1 - a0 < 1e-14) continue;
            double mid = 0.5 * (a0 + a1), half = 0.5 * (a1 - a0);
            p[0] = c[0] + r * std::cos(mid);
            p[1] = c[1] + r * std::sin(mid);
            if (!b.contains(p)) continue;
            double seg = 0.0;
            for (int k = 0; k < 16; ++k) {
                double phi = mid + half * rule.nodes[k];
                p[0] = c[0] + r * std::cos(phi);
                p[1] = c[1] + r * std::sin(phi);
                seg += rule.weights[k] * q.density(p);
            }
            total += seg * half * r;
        }
        return total;
    }
    return sphere_integral([&](const Vector& y) { return q.density(y); }, c, r);
}

// Integral of q over the closed ball |y - c| <= R, by radial Gauss-Legendre
// segmented at the clip radii.
double ball_mass(const SpatialDensity& q, const Vector& c, double R) {
    if (R <= 0.0) return 0.0;
    std::vector<double> cuts{0.0};
    for (double v : clip_radii(q, c))
        if (v > 0.0 && v < R) cuts.push_back(v);
    cuts.push_back(R);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += gauss_integrate([&](double r) { return surface_mass(q, c, r); }, cuts[i],
                                 cuts[i + 1], 32);
    return total;
}

// Breakpoints in birth time s where the time_only integrand has kinks:
// marginal-intensity kinks and radii at which the section starts clipping.
std::vector<double> time_breakpoints(const CausalCone& cone, const NucleationModel& model) {
    std::vector<double> bps;
    double t = cone.time;
    const TemporalFunction& f = model.temporal;
    if (f.kind() == TemporalFunction::Kind::piecewise_linear) {
        double shifts = model.kind == NucleationKind::staircase ? std::floor(t) : 0.0;
        for (double j = 0.0; j <= shifts; j += 1.0)
            for (double k : f.knots())
                if (j + k > 0.0 && j + k < t) bps.push_back(j + k);
    } else if (model.kind == NucleationKind::staircase) {
        for (double j = 1.0; j < t; j += 1.0) bps.push_back(j);
    }
    const GrowthField& g = *cone.growth;
    if (g.kind() == GrowthKind::time_only) {
        for (double k : g.speed_profile().knots())
            if (k > 0.0 && k < t) bps.push_back(k);
        double Ct = g.cumulative(t);
        // Note: the spatial structure enters through R(s,t) crossing the
        // support-box clip radii of q about x.
        for (double dist : clip_radii(model.spatial, cone.target)) {
            if (dist <= 0.0 || dist >= Ct) continue;
            double s = g.speed_profile().inverse_integral0(Ct - dist);
            if (s > 0.0 && s < t) bps.push_back(s);
        }
    }
    return bps;
}

}  // namespace

CausalCone make_cone(const Vector& x, double t, const GrowthField& growth) {
    if (t < 0.0) throw std::domain_error("make_cone: t must be >= 0");
    CausalCone cone;
    cone.target = x;
    cone.time = t;
    cone.growth = &growth;
    if (growth.kind() == GrowthKind::space_only)
        cone.arrivals = std::make_shared<ScalarField>(arrival_field(growth, x));
    return cone;
}

bool cone_contains(const CausalCone& cone, double s, const Vector& y) {
    if (s < 0.0 || s > cone.time) return false;
    if (cone.growth->kind() == GrowthKind::time_only)
        return (y - cone.target).norm() <= radius(*cone.growth, s, cone.time);
    const ScalarField& tau = *cone.arrivals;
    return tau.values[tau.grid.nearest(y)] <= cone.time - s;
}

double section_mass(const CausalCone& cone, double s, const SpatialDensity& q) {
    if (!(0.0 <= s) || s > cone.time)
        throw std::domain_error("section_mass: need 0 <= s <= t");
    if (cone.growth->kind() == GrowthKind::time_only)
        return ball_mass(q, cone.target, radius(*cone.growth, s, cone.time));
    const ScalarField& tau = *cone.arrivals;
    const Grid& grid = tau.grid;
    double lim = cone.time - s, sum = 0.0;
    for (long i = 0; i < grid.size(); ++i)
        if (tau.values[i] <= lim) sum += q.density(grid.node(i));
    return sum * grid.cell_volume();
}

double cone_measure(const CausalCone& cone, const NucleationModel& model, double abs_tol) {
    if (!model.is_base_kind())
        throw UnsupportedModelError("cone_measure: no analytic intensity for this model kind");
    double t = cone.time;
    if (t == 0.0) return 0.0;
    if (cone.growth->kind() == GrowthKind::time_only) {
        auto integrand = [&](double s) {
            return marginal_temporal_density(model, s) * section_mass(cone, s, model.spatial);
        };
        return adaptive_simpson_split(integrand, 0.0, t, time_breakpoints(cone, model), abs_tol);
    }
    // space_only: Q(s, S_x(s,t)) is a step function of s on the node grid, so
    // the s-integral collapses to the exact closed form
    // sum_i q_i h^d Lambda_tilde((t - tau_i)^+).
    const ScalarField& tau = *cone.arrivals;
    const Grid& grid = tau.grid;
    double sum = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        if (tau.values[i] >= t) continue;
        double qi = model.spatial.density(grid.node(i));
        if (qi > 0.0) sum += qi * marginal_cumulative_intensity(model, t - tau.values[i]);
    }
    return sum * grid.cell_volume();
}

double cone_measure_rate(const CausalCone& cone, const NucleationModel& model, double abs_tol) {
    if (!model.is_base_kind())
        throw UnsupportedModelError("cone_measure_rate: no analytic intensity for this model kind");
    double t = cone.time;
    if (t == 0.0) return 0.0;
    if (cone.growth->kind() == GrowthKind::time_only) {
        auto integrand = [&](double s) {
            double R = radius(*cone.growth, s, t);
            return marginal_temporal_density(model, s) *
                   surface_mass(model.spatial, cone.target, R);
        };
        double inner =
            adaptive_simpson_split(integrand, 0.0, t, time_breakpoints(cone, model), abs_tol);
        return cone.growth->speed_at(t, cone.target) * inner;
    }
    // Exact t-derivative of the space_only closed form above.
    const ScalarField& tau = *cone.arrivals;
    const Grid& grid = tau.grid;
    double sum = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
        if (tau.values[i] >= t) continue;
        double qi = model.spatial.density(grid.node(i));
        if (qi > 0.0) sum += qi * marginal_temporal_density(model, t - tau.values[i]);
    }
    return sum * grid.cell_volume();
}

double extended_surface_density(const CausalCone& cone, const NucleationModel& model,
                                double abs_tol) {
    return cone_measure_rate(cone, model, abs_tol) /
           cone.growth->speed_at(cone.time, cone.target);
}

std::vector<ConeTableRow> evaluate_cone_table(const GrowthField& growth,
                                              const NucleationModel& model,
                                              const std::vector<std::pair<double, Vector>>& pairs,
                                              double abs_tol, int threads) {
    // One arrival field per distinct target.
    std::map<std::vector<double>, std::shared_ptr<const ScalarField>> fields;
    std::vector<CausalCone> cones(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [t, x] = pairs[i];
        CausalCone cone;
        cone.target = x;
        cone.time = t;
        cone.growth = &growth;
        if (growth.kind() == GrowthKind::space_only) {
            std::vector<double> key(x.data(), x.data() + x.size());
            auto it = fields.find(key);
            if (it == fields.end())
                it = fields.emplace(key, std::make_shared<ScalarField>(arrival_field(growth, x)))
                         .first;
            cone.arrivals = it->second;
        }
        cones[i] = std::move(cone);
    }
    std::vector<ConeTableRow> rows(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        ConeTableRow row;
        row.t = pairs[i].first;
        row.x = pairs[i].second;
        row.measure = cone_measure(cones[i], model, abs_tol);
        row.rate = cone_measure_rate(cones[i], model, abs_tol);
        row.s_ex = row.rate / growth.speed_at(row.t, row.x);
        rows[i] = std::move(row);
    });
    return rows;
}

}  // namespace germgrain
