#pragma once

// One-dimensional temporal profiles shared by birth intensities and birth-time
// densities: constant, exponential, and piecewise-linear on a knot grid.
// Piecewise-linear profiles are zero outside their knot range.

#include <vector>

#include "germgrain/core.hpp"

namespace germgrain {

class TemporalFunction {
public:
    enum class Kind { constant, exponential, piecewise_linear };

    static TemporalFunction constant(double value);
    // Density rate * exp(-rate * t) on [0, inf); total mass 1.
    static TemporalFunction exponential(double rate);
    // Linear interpolation through (knots[i], values[i]); values >= 0,
    // knots strictly increasing, zero outside [knots.front(), knots.back()].
    static TemporalFunction piecewise_linear(std::vector<double> knots,
                                             std::vector<double> values);

    Kind kind() const { return kind_; }
    double value(double t) const;
    // Integral over [0, t] (0 for t <= 0). Exact: the profiles are closed-form.
    double integral0(double t) const;
    // integral0(+inf); +inf for the constant profile.
    double total_mass() const;
    // True if the profile integrates to 1 within `tol` (a valid density).
    bool is_probability_density(double tol = 1e-9) const;
    // This profile scaled by factor >= 0.
    TemporalFunction scaled(double factor) const;
    // Smallest t with value(s) = 0 for all s > t; +inf for constant/exponential.
    double support_end() const;
    // Knot abscissae (empty unless piecewise-linear); kinks of the profile.
    const std::vector<double>& knots() const { return knots_; }
    // Smallest t >= 0 with integral0(t) = target (exact, closed-form per
    // kind); +inf when the target exceeds the total mass. target >= 0.
    double inverse_integral0(double target) const;

    // Piecewise-linear tabulated inverse of the cumulative: maps u in [0, 1)
    // to a birth time, monotone and atom-free. The table covers [0, t_end]
    // with `steps` equal steps; u beyond the covered mass clamps to t_end.
    struct InverseTable {
        std::vector<double> times;
        std::vector<double> cumulative;  // cumulative[i] = integral0(times[i])
        double sample(double u) const;   // u scaled by cumulative.back()
    };
    InverseTable inverse_table(double t_end, int steps = 1000) const;

private:
    TemporalFunction() = default;
    Kind kind_ = Kind::constant;
    double c_ = 0.0;                // constant value or exponential rate
    std::vector<double> knots_;     // piecewise-linear only
    std::vector<double> values_;
    std::vector<double> cum_;       // cumulative at knots
};

// Marginal density of the staircase process built from birth density f:
// one draw T ~ f produces arrivals T, T + 1, T + 2, ...; the marginal density
// at s is sum_{j=0..floor(s)} f(s - j).
double staircase_density(const TemporalFunction& f, double s);

// Expected number of staircase arrivals in [0, t]:
// sum_{j=0..floor(t)} integral of f over [0, t - j].
double staircase_cumulative(const TemporalFunction& f, double t);

}  // namespace germgrain
