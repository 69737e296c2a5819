#pragma once

#include <span>

#include "espm/params.hpp"

namespace espm {

// Radial FDM for dc/dt = D (d2c/dr2 + (2/r) dc/dr) on a uniform grid of N
// nodes over [0, R]. Zero gradient at the center (symmetry limit
// 3 D d2c/dr2), Neumann surface condition dc/dr|_R = surface_gradient via a
// ghost node.
void spherical_rhs(std::span<const double> c, int N, double R, double D,
                   double surface_gradient, std::span<double> dcdt);

// Exact integral of the linear interpolant of (c0, c1) against r^2 dr over
// [r0, r1]; the building block of the trapezoidal bulk quadratures (exact for
// constant profiles by construction).
double radial_cell_moment(double r0, double r1, double c0, double c1);

// theta_bulk = (3/(c_max R^3)) * integral of c r^2 dr, composite trapezoid of
// the nodal profile.
double bulk_stoichiometry(std::span<const double> c, double R, double c_max);

// Negative particle: surface gradient -I/(D_s_n a_n A F L_n).
void negative_rhs(std::span<const double> c, double I, const CellParameters& p,
                  const DerivedGeometry& g, std::span<double> dcdt);

// Positive particle, one-phase: surface gradient +I/(D_s_p a_p A F L_p).
void one_phase_positive_rhs(std::span<const double> c, double I, const CellParameters& p,
                            const DerivedGeometry& g, std::span<double> dcdt);

double negative_surface_gradient(double I, const CellParameters& p, const DerivedGeometry& g);
double positive_surface_gradient(double I, const CellParameters& p, const DerivedGeometry& g);

}  // namespace espm
