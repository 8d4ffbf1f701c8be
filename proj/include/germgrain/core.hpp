#pragma once

// Shared basic types for the germ-grain toolkit: axis-aligned boxes, error
// categories, deterministic helpers (hashing, float formatting, parallel map).

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace germgrain {

using Vector = Eigen::VectorXd;

// Sentinel for "point never captured within the horizon".
inline constexpr double kNoCapture = std::numeric_limits<double>::infinity();

// Thrown when a user-supplied configuration value is structurally invalid.
// The message always names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an analytic quantity is requested for a model that only
// supports simulation (e.g. the cumulative intensity of a thinned process).
struct UnsupportedModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
    Vector lo;
    Vector hi;

    Box() = default;
    Box(Vector lo_, Vector hi_);

    int dim() const { return static_cast<int>(lo.size()); }
    Vector lengths() const { return hi - lo; }
    Vector center() const { return 0.5 * (lo + hi); }
    double volume() const;
    bool contains(const Vector& p, double tol = 0.0) const;
    // Box grown by `margin` on every side (margin >= 0).
    Box padded(double margin) const;
    // Intersection; throws std::domain_error if empty.
    Box intersect(const Box& other) const;

    static Box cube(int dim, double lo, double hi);
};

// FNV-1a 64-bit hash; used to fingerprint canonicalized configurations so
// every output artifact can be traced back to the exact run setup.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Locale-independent shortest round-trip formatting ("%.17g" semantics) so
// CSV output is byte-identical across runs and machines.
std::string format_double(double v);

// Runs fn(i) for i in [0, n) on `threads` workers. Tasks are handed out by an
// atomic cursor; fn must only write to data indexed by i (or thread-private
// buffers) so results are independent of scheduling. threads <= 1 runs inline.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace germgrain
