#include "germgrain/spatial.hpp"

#include <cmath>

namespace germgrain {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

SpatialDensity SpatialDensity::uniform(const Box& domain, std::optional<Box> box) {
    SpatialDensity q;
    q.kind_ = Kind::uniform;
    q.support_ = box ? domain.intersect(*box) : domain;
    q.uniform_density_ = 1.0 / q.support_.volume();
    return q;
}

SpatialDensity SpatialDensity::gaussian(const Box& domain, Vector mean, double sigma) {
    if (mean.size() != domain.lo.size())
        throw ConfigError("spatial.mean: dimension does not match the domain");
    if (!(sigma > 0.0)) throw ConfigError("spatial.sigma: must be > 0");
    SpatialDensity q;
    q.kind_ = Kind::gaussian;
    q.support_ = domain;
    q.mean_ = std::move(mean);
    q.sigma_ = sigma;
    double mass = 1.0;
    for (int a = 0; a < domain.dim(); ++a)
        mass *= normal_cdf((domain.hi[a] - q.mean_[a]) / sigma) -
                normal_cdf((domain.lo[a] - q.mean_[a]) / sigma);
    if (!(mass >= 1e-12))
        throw ConfigError("spatial.mean/sigma: truncated mass inside the domain is negligible");
    q.trunc_mass_ = mass;
    return q;
}

double SpatialDensity::density(const Vector& x) const {
    if (!support_.contains(x)) return 0.0;
    if (kind_ == Kind::uniform) return uniform_density_;
    double s2 = (x - mean_).squaredNorm() / (sigma_ * sigma_);
    double norm = std::pow(2.0 * M_PI * sigma_ * sigma_, -0.5 * dim());
    return norm * std::exp(-0.5 * s2) / trunc_mass_;
}

Vector SpatialDensity::sample(Philox4x32& g) const {
    if (kind_ == Kind::uniform) return point_in_box(g, support_);
    // Per-axis truncated normal by rejection; the constructor guarantees the
    // overall mass is not negligible, but guard each axis anyway.
    Vector x(dim());
    for (int a = 0; a < dim(); ++a) {
        bool ok = false;
        for (int it = 0; it < 100000; ++it) {
            double v = mean_[a] + sigma_ * standard_normal(g);
            if (v >= support_.lo[a] && v <= support_.hi[a]) {
                x[a] = v;
                ok = true;
                break;
            }
        }
        if (!ok)
            throw std::runtime_error(
                "SpatialDensity::sample: truncated-normal rejection failed to land in the domain");
    }
    return x;
}

double SpatialDensity::box_mass(const Box& b) const {
    Vector lo = b.lo.cwiseMax(support_.lo), hi = b.hi.cwiseMin(support_.hi);
    double mass = 1.0;
    for (int a = 0; a < dim(); ++a) {
        if (!(lo[a] < hi[a])) return 0.0;
        if (kind_ == Kind::uniform)
            mass *= (hi[a] - lo[a]) / (support_.hi[a] - support_.lo[a]);
        else
            mass *= (normal_cdf((hi[a] - mean_[a]) / sigma_) -
                     normal_cdf((lo[a] - mean_[a]) / sigma_)) /
                    (normal_cdf((support_.hi[a] - mean_[a]) / sigma_) -
                     normal_cdf((support_.lo[a] - mean_[a]) / sigma_));
    }
    return mass;
}

}  // namespace germgrain
