#pragma once

// First-order upwind fast-marching solver for the eikonal equation
// |grad tau| = 1/G(x) on a node grid, used for space-dependent growth.

#include "germgrain/grid.hpp"

namespace germgrain {

// Arrival times from the source node (linear index). speed must be positive
// and finite at every node. tau = 0 exactly at the source.
Eigen::ArrayXd solve_eikonal(const Grid& grid, const Eigen::ArrayXd& speed, long source);

// Max over non-source nodes of the relative residual of the discrete upwind
// eikonal equation; the solver output satisfies <= 1e-9.
double eikonal_residual(const Grid& grid, const Eigen::ArrayXd& speed,
                        const Eigen::ArrayXd& tau, long source);

}  // namespace germgrain
