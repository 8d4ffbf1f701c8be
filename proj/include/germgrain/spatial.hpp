#pragma once

// Mark (nucleation-site) densities over a bounded spatial domain. Densities
// are normalized probability densities on their effective support, which is
// always clipped to the domain box handed in at construction (the padded
// observation window).

#include <optional>

#include "germgrain/core.hpp"
#include "germgrain/rng.hpp"

namespace germgrain {

class SpatialDensity {
public:
    enum class Kind { uniform, gaussian };

    // Uniform on domain, or on domain ∩ box if a restriction box is given.
    static SpatialDensity uniform(const Box& domain, std::optional<Box> box = std::nullopt);
    // Isotropic normal N(mean, sigma^2 I) truncated to the domain and
    // renormalized. sigma > 0; the truncated mass must be >= 1e-12.
    static SpatialDensity gaussian(const Box& domain, Vector mean, double sigma);

    Kind kind() const { return kind_; }
    int dim() const { return support_.dim(); }
    // Probability density at x (0 outside the effective support).
    double density(const Vector& x) const;
    // Draw a point from the density.
    Vector sample(Philox4x32& g) const;
    // Smallest box containing the support.
    const Box& support_box() const { return support_; }
    // Probability mass of an axis-aligned box (used by analytic oracles).
    double box_mass(const Box& b) const;

private:
    SpatialDensity() = default;
    Kind kind_ = Kind::uniform;
    Box support_;       // effective support (already clipped to the domain)
    double uniform_density_ = 0.0;
    Vector mean_;
    double sigma_ = 0.0;
    double trunc_mass_ = 1.0;  // gaussian mass inside support_
};

}  // namespace germgrain
