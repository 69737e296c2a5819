#include "espm/voltage.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace espm {

double ocp_positive(double theta, OcpBranch branch) {
    if (theta <= 0.0 || theta >= 1.0)
        throw std::domain_error("ocp_positive: theta = " + std::to_string(theta) +
                                " outside (0,1)");
    const double y = 1.0 - theta;
    if (branch == OcpBranch::Discharge) {
        return 3.382 - 0.2955 * std::exp(-44.99 * std::pow(y, 0.8707)) +
               std::pow(10.0, -20.71) * std::exp(14.17 * std::pow(y, 8.128)) +
               std::pow(10.0, -40.82) * std::exp(100.0 * std::pow(y, 1.213));
    }
    return 3.442 - 0.1774 * std::exp(-127.7 * std::pow(y, 0.7921)) +
           std::pow(10.0, -2.123) * std::exp(16.56 * std::pow(y, 24.08)) +
           std::pow(10.0, -10.29) * std::exp(99.91 * std::pow(y, 22.17));
}

double ocp_negative(double theta, const CellParameters& p) {
    if (theta <= 0.0 || theta >= 1.0)
        throw std::domain_error("ocp_negative: theta = " + std::to_string(theta) +
                                " outside (0,1)");
    return p.negative_ocp(theta);
}

double exchange_current(Electrode e, double c_avg, double c_surf, const CellParameters& p) {
    if (c_avg <= 0) throw std::domain_error("exchange_current requires c_avg > 0");
    double k = e == Electrode::Negative ? p.k_n : p.k_p;
    double c_max = e == Electrode::Negative ? p.c_s_n_max : p.c_s_p_max;
    if (c_surf < 0 || c_surf > c_max)
        throw std::domain_error("exchange_current: c_surf outside [0, c_max]");
    return k * p.F * std::sqrt(c_avg * c_surf * (c_max - c_surf));
}

double overpotential(Electrode e, double I, double i0, const CellParameters& p,
                     const DerivedGeometry& g) {
    if (i0 <= 0)
        throw std::domain_error("overpotential singularity: exchange current is zero");
    double a = e == Electrode::Negative ? g.a_n : g.a_p;
    double L = e == Electrode::Negative ? p.L_n : p.L_p;
    double I_signed = e == Electrode::Negative ? I : -I;
    double arg = I_signed / (2.0 * p.A_cell * a * L * i0);
    return p.R_gas * p.T / (0.5 * p.F) * std::asinh(arg);
}

VoltageBreakdown assemble_voltage(double theta_p_surf, double theta_n_surf, double I,
                                  double c_avg, double delta_phi_e, double R_el,
                                  OcpBranch branch, const CellParameters& p,
                                  const DerivedGeometry& g) {
    VoltageBreakdown b;
    b.U_p = ocp_positive(theta_p_surf, branch);
    b.U_n = ocp_negative(theta_n_surf, p);
    double i0_p = exchange_current(Electrode::Positive, c_avg, theta_p_surf * p.c_s_p_max, p);
    double i0_n = exchange_current(Electrode::Negative, c_avg, theta_n_surf * p.c_s_n_max, p);
    b.eta_p = overpotential(Electrode::Positive, I, i0_p, p, g);
    b.eta_n = overpotential(Electrode::Negative, I, i0_n, p, g);
    b.delta_phi_e = delta_phi_e;
    b.ohmic = I * (p.R_l + R_el);
    b.V_cell = b.U_p + b.eta_p - b.U_n - b.eta_n + b.delta_phi_e - b.ohmic;
    return b;
}

double soc_negative(double theta_n_bulk, const CellParameters& p) {
    return (theta_n_bulk - p.theta_n_0) / (p.theta_n_100 - p.theta_n_0);
}

double soc_positive(double theta_p_bulk, const CellParameters& p) {
    return (p.theta_p_0 - theta_p_bulk) / (p.theta_p_0 - p.theta_p_100);
}

}  // namespace espm
