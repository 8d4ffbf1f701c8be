#include "germgrain/temporal.hpp"

#include <algorithm>
#include <cmath>

namespace germgrain {

TemporalFunction TemporalFunction::constant(double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("TemporalFunction::constant: value must be >= 0");
    TemporalFunction f;
    f.kind_ = Kind::constant;
    f.c_ = value;
    return f;
}

TemporalFunction TemporalFunction::exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("TemporalFunction::exponential: rate must be > 0");
    TemporalFunction f;
    f.kind_ = Kind::exponential;
    f.c_ = rate;
    return f;
}

TemporalFunction TemporalFunction::piecewise_linear(std::vector<double> knots,
                                                    std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size())
        throw std::invalid_argument(
            "TemporalFunction::piecewise_linear: need matching knots/values, at least 2");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i] < knots[i + 1]))
            throw std::invalid_argument(
                "TemporalFunction::piecewise_linear: knots must be strictly increasing");
    if (knots.front() < 0.0)
        throw std::invalid_argument("TemporalFunction::piecewise_linear: knots must be >= 0");
    for (double v : values)
        if (!(v >= 0.0))
            throw std::invalid_argument("TemporalFunction::piecewise_linear: values must be >= 0");
    TemporalFunction f;
    f.kind_ = Kind::piecewise_linear;
    f.knots_ = std::move(knots);
    f.values_ = std::move(values);
    f.cum_.assign(f.knots_.size(), 0.0);
    for (std::size_t i = 1; i < f.knots_.size(); ++i)
        f.cum_[i] = f.cum_[i - 1] + 0.5 * (f.values_[i] + f.values_[i - 1]) *
                                        (f.knots_[i] - f.knots_[i - 1]);
    return f;
}

double TemporalFunction::value(double t) const {
    switch (kind_) {
        case Kind::constant:
            return c_;
        case Kind::exponential:
            return t < 0.0 ? 0.0 : c_ * std::exp(-c_ * t);
        case Kind::piecewise_linear: {
            if (t < knots_.front() || t > knots_.back()) return 0.0;
            auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
            std::size_t i = (it == knots_.end()) ? knots_.size() - 1
                                                 : static_cast<std::size_t>(it - knots_.begin());
            double w = (t - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
            return values_[i - 1] + w * (values_[i] - values_[i - 1]);
        }
    }
    return 0.0;
}

double TemporalFunction::integral0(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::constant:
            return c_ * t;
        case Kind::exponential:
            return -std::expm1(-c_ * t);
        case Kind::piecewise_linear: {
            if (t <= knots_.front()) return 0.0;
            if (t >= knots_.back()) return cum_.back();
            auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
            std::size_t i = static_cast<std::size_t>(it - knots_.begin());
            double dt = t - knots_[i - 1];
            double v = value(t);
            return cum_[i - 1] + 0.5 * (values_[i - 1] + v) * dt;
        }
    }
    return 0.0;
}

double TemporalFunction::total_mass() const {
    switch (kind_) {
        case Kind::constant:
            return c_ > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        case Kind::exponential:
            return 1.0;
        case Kind::piecewise_linear:
            return cum_.back();
    }
    return 0.0;
}

bool TemporalFunction::is_probability_density(double tol) const {
    double m = total_mass();
    return std::isfinite(m) && std::abs(m - 1.0) <= tol;
}

TemporalFunction TemporalFunction::scaled(double factor) const {
    if (!(factor >= 0.0)) throw std::invalid_argument("TemporalFunction::scaled: factor must be >= 0");
    switch (kind_) {
        case Kind::constant:
            return constant(c_ * factor);
        case Kind::exponential: {
            // Scaling an exponential density is no longer a density; represent
            // the scaled profile on a knot grid instead. Not needed in
            // practice: intensities are constant or piecewise-linear.
            throw std::invalid_argument("TemporalFunction::scaled: exponential profile");
        }
        case Kind::piecewise_linear: {
            std::vector<double> v = values_;
            for (double& x : v) x *= factor;
            return piecewise_linear(knots_, std::move(v));
        }
    }
    throw std::logic_error("TemporalFunction::scaled: unreachable");
}

double TemporalFunction::support_end() const {
    return kind_ == Kind::piecewise_linear ? knots_.back()
                                           : std::numeric_limits<double>::infinity();
}

double TemporalFunction::inverse_integral0(double target) const {
    if (!(target >= 0.0))
        throw std::invalid_argument("TemporalFunction::inverse_integral0: target must be >= 0");
    if (target == 0.0) return 0.0;
    switch (kind_) {
        case Kind::constant:
            return c_ > 0.0 ? target / c_ : std::numeric_limits<double>::infinity();
        case Kind::exponential:
            return target >= 1.0 ? std::numeric_limits<double>::infinity()
                                 : -std::log1p(-target) / c_;
        case Kind::piecewise_linear: {
            if (target > cum_.back()) return std::numeric_limits<double>::infinity();
            auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
            std::size_t i = static_cast<std::size_t>(it - cum_.begin());
            if (i == 0) return knots_.front();  // target hit at zero-length prefix
            double c0 = cum_[i - 1], t0 = knots_[i - 1];
            double dt = knots_[i] - t0;
            double v0 = values_[i - 1], v1 = values_[i];
            double slope = (v1 - v0) / dt;
            double rem = target - c0;
            // Solve v0*x + slope*x^2/2 = rem on [0, dt], stable branch.
            double x;
            if (std::abs(slope) < 1e-14 * std::max(1.0, v0)) {
                x = v0 > 0.0 ? rem / v0 : dt;
            } else {
                double disc = v0 * v0 + 2.0 * slope * rem;
                disc = std::max(disc, 0.0);
                x = slope > 0.0 ? (std::sqrt(disc) - v0) / slope
                                : 2.0 * rem / (v0 + std::sqrt(disc));
            }
            x = std::clamp(x, 0.0, dt);
            return t0 + x;
        }
    }
    throw std::logic_error("TemporalFunction::inverse_integral0: unreachable");
}

double TemporalFunction::InverseTable::sample(double u) const {
    double target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.begin()) return times.front();
    if (it == cumulative.end()) return times.back();
    std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
    double dc = cumulative[i] - cumulative[i - 1];
    double w = dc > 0.0 ? (target - cumulative[i - 1]) / dc : 0.0;
    return times[i - 1] + w * (times[i] - times[i - 1]);
}

TemporalFunction::InverseTable TemporalFunction::inverse_table(double t_end, int steps) const {
    if (!(t_end > 0.0) || steps < 1)
        throw std::invalid_argument("TemporalFunction::inverse_table: need t_end > 0, steps >= 1");
    InverseTable table;
    table.times.resize(steps + 1);
    table.cumulative.resize(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        double t = t_end * i / steps;
        table.times[i] = t;
        table.cumulative[i] = integral0(t);
    }
    if (!(table.cumulative.back() > 0.0))
        throw std::invalid_argument("TemporalFunction::inverse_table: profile has no mass on [0, t_end]");
    return table;
}

double staircase_density(const TemporalFunction& f, double s) {
    if (s < 0.0) return 0.0;
    double sum = 0.0;
    for (int j = 0; j <= static_cast<int>(std::floor(s)); ++j) sum += f.value(s - j);
    return sum;
}

double staircase_cumulative(const TemporalFunction& f, double t) {
    if (t < 0.0) return 0.0;
    double sum = 0.0;
    for (int j = 0; j <= static_cast<int>(std::floor(t)); ++j) sum += f.integral0(t - j);
    return sum;
}

}  // namespace germgrain
