#pragma once

#include <span>
#include <vector>

#include "espm/params.hpp"

namespace espm {

enum class Region { Negative, Separator, Positive };

// Finite-volume grid across negative electrode / separator / positive
// electrode. x runs from the negative current collector (x = 0) to the
// positive one (x = L_n + L_s + L_p).
struct ElectrolyteGrid {
    int n_n, n_s, n_p;
    std::vector<double> x_centers;  // volume-center coordinates, m
    std::vector<double> widths;     // volume widths, m
    std::vector<Region> region;     // region tag per volume
    std::vector<double> porosity;   // eps_i per volume

    int size() const { return static_cast<int>(widths.size()); }
};

struct ElectrolyteState {
    std::vector<double> c;  // volume-averaged concentrations, mol/m^3
};

ElectrolyteGrid make_electrolyte_grid(const CellParameters& p, const DerivedGeometry& g);

// D(c,T) = 1e-4 * 10^{(-4.51 - 59.22/(T - (206.25 + 10 c/1000))) c/1000}.
// Throws when T is at or below the correlation pole.
double electrolyte_diffusivity(double c, double T);

// kappa(c_avg) with argument c_avg/1000; bulk value (no Bruggeman factor).
double electrolyte_conductivity(double c_avg);

// v(c,T) = 0.601 - 0.24 (c/1000)^{1/2} + 0.982 [1 - 0.0052 (T-293)] (c/1000)^{3/2}
double thermodynamic_factor(double c_avg, double T);

// Width-weighted mean concentration over all volumes.
double mean_concentration(const ElectrolyteState& s, const ElectrolyteGrid& g);

// Per-volume balance eps dc/dt = flux divergence + (1 - t_plus) J_region.
// Harmonic-mean face diffusivities, zero flux at both collectors.
void electrolyte_rhs(std::span<const double> c, const ElectrolyteGrid& g, double I,
                     const CellParameters& p, std::span<double> dcdt);

// Collector-face concentrations by linear extrapolation from the two
// nearest volume centers.
double face_concentration_neg(const ElectrolyteState& s, const ElectrolyteGrid& g);
double face_concentration_pos(const ElectrolyteState& s, const ElectrolyteGrid& g);

// DeltaPhi_e = (2 R T v(c_avg,T) / F) ln(c(L)/c(0))
double electrolyte_potential_drop(const ElectrolyteState& s, const ElectrolyteGrid& g,
                                  const CellParameters& p);

// R_el = (1/(2 A_cell)) (L_n/k_eff_n + 2 L_s/k_eff_s + L_p/k_eff_p), with
// kappa evaluated at the cell-wide mean concentration.
double electrolyte_resistance(const ElectrolyteState& s, const ElectrolyteGrid& g,
                              const CellParameters& p, const DerivedGeometry& geom);

// Total electrolyte lithium, sum(width * eps * c); conserved by the rhs.
double total_lithium(const ElectrolyteState& s, const ElectrolyteGrid& g);

}  // namespace espm
