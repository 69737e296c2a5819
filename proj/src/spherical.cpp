#include "espm/spherical.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace espm {

void spherical_rhs(std::span<const double> c, int N, double R, double D,
                   double surface_gradient, std::span<double> dcdt) {
    const double dr = R / (N - 1);
    const double inv_dr2 = 1.0 / (dr * dr);

    // center: symmetry gives d2c/dr2 = 2(c1 - c0)/dr^2 and the 2/r term
    // limits to another d2c/dr2, hence the factor 3
    dcdt[0] = 6.0 * D * (c[1] - c[0]) * inv_dr2;

    for (int j = 1; j < N - 1; ++j) {
        double r = j * dr;
        double d2 = (c[j + 1] - 2.0 * c[j] + c[j - 1]) * inv_dr2;
        double d1 = (c[j + 1] - c[j - 1]) / (2.0 * dr);
        dcdt[j] = D * (d2 + 2.0 / r * d1);
    }

    // surface ghost: c_N = c_{N-2} + 2 dr q
    double q = surface_gradient;
    double ghost = c[N - 2] + 2.0 * dr * q;
    double d2 = (ghost - 2.0 * c[N - 1] + c[N - 2]) * inv_dr2;
    dcdt[N - 1] = D * (d2 + 2.0 / R * q);

    for (int j = 0; j < N; ++j)
        if (!std::isfinite(dcdt[j]))
            throw std::runtime_error("non-finite particle rhs at node " + std::to_string(j));
}

double radial_cell_moment(double r0, double r1, double c0, double c1) {
    double h = r1 - r0;
    double cube = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
    double quart = (r1 * r1 * r1 * r1 - r0 * r0 * r0 * r0) / 4.0;
    return c0 * cube + (c1 - c0) / h * (quart - r0 * cube);
}

double bulk_stoichiometry(std::span<const double> c, double R, double c_max) {
    const int N = static_cast<int>(c.size());
    const double dr = R / (N - 1);
    double integral = 0.0;
    for (int j = 0; j < N - 1; ++j)
        integral += radial_cell_moment(j * dr, (j + 1) * dr, c[j], c[j + 1]);
    return 3.0 / (c_max * R * R * R) * integral;
}

double negative_surface_gradient(double I, const CellParameters& p, const DerivedGeometry& g) {
    return -I / (p.D_s_n * g.a_n * p.A_cell * p.F * p.L_n);
}

double positive_surface_gradient(double I, const CellParameters& p, const DerivedGeometry& g) {
    return I / (p.D_s_p * g.a_p * p.A_cell * p.F * p.L_p);
}

void negative_rhs(std::span<const double> c, double I, const CellParameters& p,
                  const DerivedGeometry& g, std::span<double> dcdt) {
    spherical_rhs(c, static_cast<int>(c.size()), p.R_n, p.D_s_n,
                  negative_surface_gradient(I, p, g), dcdt);
}

void one_phase_positive_rhs(std::span<const double> c, double I, const CellParameters& p,
                            const DerivedGeometry& g, std::span<double> dcdt) {
    spherical_rhs(c, static_cast<int>(c.size()), p.R_p, p.D_s_p,
                  positive_surface_gradient(I, p, g), dcdt);
}

}  // namespace espm
