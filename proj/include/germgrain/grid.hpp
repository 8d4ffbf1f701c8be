#pragma once

// Node-centered sampling grids. A grid over window [lo, hi] with spacing h has
// nodes at lo + i * h per axis, including both faces, so every window length
// must be an integer multiple of h. Fields store one value per node; box
// integrals are node sums times h^d (each node represents the cell centered
// on it).

#include <cstdint>
#include <string>
#include <vector>

#include "germgrain/core.hpp"

namespace germgrain {

struct Grid {
    Box window;
    double spacing = 0.0;
    std::vector<long> extents;  // node counts per axis
    std::vector<long> strides;  // row-major: last axis fastest

    // Throws ConfigError if any window length is not an integer multiple of h
    // (relative tolerance 1e-9).
    static Grid over(const Box& window, double h);

    int dim() const { return static_cast<int>(extents.size()); }
    long size() const;
    Vector node(long lin) const;
    std::vector<long> multi_index(long lin) const;
    long linear_index(const std::vector<long>& mi) const;
    // Node nearest to p; throws std::domain_error if p lies outside the window
    // (tolerance half a cell).
    long nearest(const Vector& p) const;
    // True if p is within the window, with a relative tolerance of ~1e-9 h so
    // exact-boundary nodes count as inside.
    bool contains_node_point(const Vector& p) const;
    double cell_volume() const;
};

struct ScalarField {
    Grid grid;
    Eigen::ArrayXd values;

    static ScalarField zeros(const Grid& g);
    static ScalarField constant(const Grid& g, double v);
};

// Integral of the field over A: sum of values at nodes inside A, times h^d.
double box_integral(const ScalarField& field, const Box& A);

// Number of nodes of the grid lying in A.
long box_node_count(const Grid& g, const Box& A);

// Raw dump: u32 dim; u64 extents[dim]; f64 spacing; f64 lo[dim]; f64 hi[dim];
// then f64 values, row-major, little-endian throughout.
void write_field_raw(const ScalarField& field, const std::string& path);
ScalarField read_field_raw(const std::string& path);

}  // namespace germgrain
