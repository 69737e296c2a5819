#pragma once

#include "espm/params.hpp"

namespace espm {

enum class OcpBranch { Discharge, Charge };
enum class Electrode { Negative, Positive };

// Positive OCP, hysteretic: the discharge and charge branches are separate
// fits in the surface stoichiometry. theta must lie in (0,1).
double ocp_positive(double theta_surf, OcpBranch branch);

double ocp_negative(double theta_surf, const CellParameters& p);

// i0 = k F sqrt(c_avg c_surf (c_max - c_surf)); zero at c_surf = 0 or c_max.
double exchange_current(Electrode e, double c_avg, double c_surf, const CellParameters& p);

// eta = (R T / 0.5 F) asinh(I_signed / (2 A a L i0)). The current is
// electrode-signed: +I at the negative electrode, -I at the positive, so
// both overpotentials reduce terminal voltage during discharge.
double overpotential(Electrode e, double I, double i0, const CellParameters& p,
                     const DerivedGeometry& g);

struct VoltageBreakdown {
    double U_p, U_n;        // open-circuit potentials, V
    double eta_p, eta_n;    // overpotentials, V
    double delta_phi_e;     // electrolyte potential drop, V
    double ohmic;           // I (R_l + R_el), V
    double V_cell;          // U_p + eta_p - U_n - eta_n + delta_phi_e - ohmic
};

VoltageBreakdown assemble_voltage(double theta_p_surf, double theta_n_surf, double I,
                                  double c_avg, double delta_phi_e, double R_el,
                                  OcpBranch branch, const CellParameters& p,
                                  const DerivedGeometry& g);

// SOC_n = (theta_n_bulk - theta_n_0)/(theta_n_100 - theta_n_0);
// SOC_p = (theta_p_0 - theta_p_bulk)/(theta_p_0 - theta_p_100).
double soc_negative(double theta_n_bulk, const CellParameters& p);
double soc_positive(double theta_p_bulk, const CellParameters& p);

}  // namespace espm
