#include "espm/electrolyte.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace espm {

namespace {

// Newton iterates may probe slightly negative concentrations; the
// correlations are evaluated with a small positive floor there. Public
// entry points still reject non-positive input.
constexpr double kCorrFloor = 1e-6;

double diffusivity_impl(double c, double T) {
    double pole = 206.25 + 10.0 * c / 1000.0;
    double denom = T - pole;
    if (denom <= 0.0)
        throw std::domain_error("electrolyte diffusivity correlation out of domain: T = " +
                                std::to_string(T) + " K, pole at " + std::to_string(pole) + " K");
    double expo = (-4.51 - 59.22 / denom) * c / 1000.0;
    return 1e-4 * std::pow(10.0, expo);
}

}  // namespace

double electrolyte_diffusivity(double c, double T) {
    if (c <= 0) throw std::domain_error("electrolyte diffusivity requires c > 0");
    return diffusivity_impl(c, T);
}

double electrolyte_conductivity(double c_avg) {
    if (c_avg <= 0) throw std::domain_error("electrolyte conductivity requires c_avg > 0");
    double r = c_avg / 1000.0;
    return std::pow(r / 1.05, 0.68) *
           std::exp(-0.1 * (r - 1.05) * (r - 1.05) - 0.56 * (r - 1.05));
}

double thermodynamic_factor(double c_avg, double T) {
    double r = c_avg / 1000.0;
    if (r < 0) r = 0;
    return 0.601 - 0.24 * std::sqrt(r) +
           0.982 * (1.0 - 0.0052 * (T - 293.0)) * std::pow(r, 1.5);
}

ElectrolyteGrid make_electrolyte_grid(const CellParameters& p, const DerivedGeometry& g) {
    if (p.n_n < 3 || p.n_s < 3 || p.n_p < 3)
        throw ConfigError("each electrolyte region needs >= 3 volumes");
    ElectrolyteGrid grid;
    grid.n_n = p.n_n;
    grid.n_s = p.n_s;
    grid.n_p = p.n_p;
    double x = 0.0;
    auto add_region = [&](int n, double L, Region r, double eps) {
        double w = L / n;
        for (int i = 0; i < n; ++i) {
            grid.widths.push_back(w);
            grid.x_centers.push_back(x + (i + 0.5) * w);
            grid.region.push_back(r);
            grid.porosity.push_back(eps);
        }
        x += L;
    };
    add_region(p.n_n, p.L_n, Region::Negative, g.eps_n);
    add_region(p.n_s, p.L_s, Region::Separator, g.eps_s);
    add_region(p.n_p, p.L_p, Region::Positive, g.eps_p);
    return grid;
}

double mean_concentration(const ElectrolyteState& s, const ElectrolyteGrid& g) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        num += g.widths[i] * s.c[i];
        den += g.widths[i];
    }
    return num / den;
}

void electrolyte_rhs(std::span<const double> c, const ElectrolyteGrid& g, double I,
                     const CellParameters& p, std::span<double> dcdt) {
    const int n = g.size();
    const double Jn = I / (p.A_cell * p.F * p.L_n);
    const double Jp = -I / (p.A_cell * p.F * p.L_p);

    // face fluxes, positive in +x; zero at both collectors
    double flux_left = 0.0;
    for (int i = 0; i < n; ++i) {
        double flux_right = 0.0;
        if (i + 1 < n) {
            double ci = std::max(c[i], kCorrFloor);
            double cj = std::max(c[i + 1], kCorrFloor);
            double Di = diffusivity_impl(ci, p.T) * std::pow(g.porosity[i], p.brugg);
            double Dj = diffusivity_impl(cj, p.T) * std::pow(g.porosity[i + 1], p.brugg);
            // distance-weighted harmonic mean conserves flux across
            // material discontinuities
            double wi = g.widths[i], wj = g.widths[i + 1];
            double Dface = (wi + wj) / (wi / Di + wj / Dj);
            double dx = 0.5 * (wi + wj);
            flux_right = -Dface * (c[i + 1] - c[i]) / dx;
        }
        double J = 0.0;
        switch (g.region[i]) {
            case Region::Negative: J = Jn; break;
            case Region::Separator: J = 0.0; break;
            case Region::Positive: J = Jp; break;
        }
        dcdt[i] = ((flux_left - flux_right) / g.widths[i] + (1.0 - p.t_plus) * J) / g.porosity[i];
        if (!std::isfinite(dcdt[i]))
            throw std::runtime_error("non-finite electrolyte rhs at volume " + std::to_string(i));
        flux_left = flux_right;
    }
}

double face_concentration_neg(const ElectrolyteState& s, const ElectrolyteGrid& g) {
    // centers at w/2 and 3w/2; extrapolate to x = 0
    return 1.5 * s.c[0] - 0.5 * s.c[1];
}

double face_concentration_pos(const ElectrolyteState& s, const ElectrolyteGrid& g) {
    int n = g.size();
    return 1.5 * s.c[n - 1] - 0.5 * s.c[n - 2];
}

double electrolyte_potential_drop(const ElectrolyteState& s, const ElectrolyteGrid& g,
                                  const CellParameters& p) {
    double c0 = face_concentration_neg(s, g);
    double cL = face_concentration_pos(s, g);
    if (c0 <= 0 || cL <= 0)
        throw std::domain_error("non-positive boundary electrolyte concentration");
    double v = thermodynamic_factor(mean_concentration(s, g), p.T);
    return 2.0 * p.R_gas * p.T * v / p.F * std::log(cL / c0);
}

double electrolyte_resistance(const ElectrolyteState& s, const ElectrolyteGrid& g,
                              const CellParameters& p, const DerivedGeometry& geom) {
    double kappa = electrolyte_conductivity(mean_concentration(s, g));
    double kn = kappa * std::pow(geom.eps_n, p.brugg);
    double ks = kappa * std::pow(geom.eps_s, p.brugg);
    double kp = kappa * std::pow(geom.eps_p, p.brugg);
    if (kn <= 0 || ks <= 0 || kp <= 0)
        throw std::domain_error("zero effective electrolyte conductivity");
    return (p.L_n / kn + 2.0 * p.L_s / ks + p.L_p / kp) / (2.0 * p.A_cell);
}

double total_lithium(const ElectrolyteState& s, const ElectrolyteGrid& g) {
    double sum = 0.0;
    for (int i = 0; i < g.size(); ++i) sum += g.widths[i] * g.porosity[i] * s.c[i];
    return sum;
}

}  // namespace espm
