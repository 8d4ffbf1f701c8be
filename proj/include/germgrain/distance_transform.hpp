#pragma once

// Exact Euclidean distance transform on node grids (per-axis lower-envelope
// algorithm). Distances are returned squared, in units of cells^2, so integer
// lattice offsets stay exact and threshold comparisons are tie-robust.

#include <cstdint>
#include <vector>

#include "germgrain/grid.hpp"

namespace germgrain {

// support[i] != 0 marks a support node (row-major over `extents`). Returns the
// squared distance, in cells^2, from every node to the nearest support node;
// +inf everywhere if the support is empty.
std::vector<double> edt_squared_cells(const std::vector<std::uint8_t>& support,
                                      const std::vector<long>& extents);

// Convenience wrapper: treats field values > 0.5 as support.
std::vector<double> edt_squared_cells(const ScalarField& indicator);

}  // namespace germgrain
