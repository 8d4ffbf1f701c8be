#pragma once

// Causal-cone evaluation by deterministic quadrature: membership, section
// masses, the cone measure Lambda(C(t,x)), its exact time derivative, and the
// mean extended surface density, for nucleation models with analytic
// marginal intensities.

#include <memory>
#include <utility>
#include <vector>

#include "germgrain/growth.hpp"
#include "germgrain/nucleation.hpp"

namespace germgrain {

struct CausalCone {
    Vector target;
    double time = 0.0;
    const GrowthField* growth = nullptr;
    // space_only: travel times from the target (one eikonal solve, shared by
    // every evaluation against this cone; sections use eikonal symmetry).
    std::shared_ptr<const ScalarField> arrivals;
};

// Builds the cone for observation point x at time t (t >= 0). space_only
// growth triggers the eikonal solve here.
CausalCone make_cone(const Vector& x, double t, const GrowthField& growth);

// (s, y) in C(t,x): a grain born there would cover x by time t.
bool cone_contains(const CausalCone& cone, double s, const Vector& y);

// Q(s, S_x(s,t)): mark mass of the cone section at birth time s (0 <= s <= t).
// time_only: radial quadrature over the ball B_{R(s,t)}(x), segmented at the
// support-box face/corner distances; space_only: node sum over {tau <= t-s}.
double section_mass(const CausalCone& cone, double s, const SpatialDensity& q);

// Lambda(C(t,x)) = int_0^t lambda(s) Q(s, S_x(s,t)) ds. time_only: adaptive
// Simpson with kink breakpoints; space_only: exact node-wise closed form
// sum_i q_i h^d Lambda_tilde((t - tau_i)^+). Nondecreasing in t.
double cone_measure(const CausalCone& cone, const NucleationModel& model, double abs_tol = 1e-6);

// d/dt Lambda(C(t,x)). time_only: G(t) times the surface-integral form;
// space_only: exact derivative sum_i q_i h^d lambda(t - tau_i).
double cone_measure_rate(const CausalCone& cone, const NucleationModel& model,
                         double abs_tol = 1e-6);

// S_ex(t,x) = cone_measure_rate / G(t,x).
double extended_surface_density(const CausalCone& cone, const NucleationModel& model,
                                double abs_tol = 1e-6);

struct ConeTableRow {
    double t = 0.0;
    Vector x;
    double measure = 0.0;
    double rate = 0.0;
    double s_ex = 0.0;
};

// Batch evaluation; arrival fields are computed once per distinct target.
std::vector<ConeTableRow> evaluate_cone_table(const GrowthField& growth,
                                              const NucleationModel& model,
                                              const std::vector<std::pair<double, Vector>>& pairs,
                                              double abs_tol = 1e-6, int threads = 1);

}  // namespace germgrain
