#pragma once

#include <optional>
#include <span>
#include <vector>

#include "espm/params.hpp"

namespace espm {

enum class PhaseMode { OnePhaseAlpha, TwoPhase, OnePhaseBeta };
enum class Direction { Charge, Discharge };

const char* to_string(PhaseMode m);

// Two-phase positive particle on the fixed chi-grid, chi = (r - r_p)/(R_p - r_p).
// chi nodes l = 0..N_r with spacing 1/N_r; node 0 is the Dirichlet value g(I)
// and node N_r (the surface) is reconstructed from the flux condition, so the
// stored state is [r_p, c_1 .. c_{N_r-1}].
struct ShellState {
    double r_p = 0.0;          // boundary radius, m
    std::vector<double> c;     // c_1 .. c_{N_r-1}, mol/m^3

    int N_r() const { return static_cast<int>(c.size()) + 1; }
};

// Node-independent parts of the discretized shell operator.
struct TransformCoefficients {
    double M1;   // sign(I) D / ((c_alpha - c_beta)(R_p - r_p))
    double M2;   // (R_p - r_p) dchi / (D a_p A F L_p)
    double M3;   // D / (R_p - r_p)^2
    double drp;  // (M1/dchi)(c_1 - g)
    double dchi;
};

// g(I): c_beta when I > 0, c_alpha when I < 0, `held` when I = 0.
double boundary_concentration(double I, const CellParameters& p, double held);

// ic_k: core concentration at two-phase entry.
double core_initial_condition(Direction k, const CellParameters& p);

// Shell nucleated at the boundary composition, r_p = R_p - eps.
ShellState enter_two_phase(Direction k, const CellParameters& p);

TransformCoefficients transform_coefficients(const ShellState& s, double I, int sign_eff,
                                             double g, const CellParameters& p,
                                             const DerivedGeometry& geom);

// State-dependent advection coefficient at node l (chi_l = l*dchi).
double m4_at_node(const TransformCoefficients& tc, int l, const ShellState& s,
                  const CellParameters& p);

// d[r_p; c_1..c_{N_r-1}]/dt. sign_eff is sign(I), held from the last
// nonzero-current segment when I = 0. frozen_boundary forces dr_p/dt = 0
// (used by the fixed-domain diffusion oracle).
void shell_rhs(std::span<const double> x, double I, int sign_eff, double g,
               const CellParameters& p, const DerivedGeometry& geom, std::span<double> dxdt,
               bool frozen_boundary = false);

// Surface node c_{N_r} = c_{N_r-1} + M2 I.
double shell_surface_concentration(const ShellState& s, double I, int sign_eff, double g,
                                   const CellParameters& p, const DerivedGeometry& geom);

// theta_p_bulk in two-phase: core contribution + shell quadrature over chi.
double shell_bulk_stoichiometry(const ShellState& s, double core_c, double I, int sign_eff,
                                double g, const CellParameters& p, const DerivedGeometry& geom);

struct TwoPhaseExit {
    std::vector<double> c;  // radial profile on a uniform [0, R_p] grid
    double renorm;          // conservation correction factor applied
};

// Remap the shell onto a uniform radial grid; the core keeps core_c. A
// single multiplicative renormalization restores the lithium total; the
// factor must stay within 1 +/- 1e-3.
TwoPhaseExit exit_two_phase(const ShellState& s, double core_c, double I, int sign_eff,
                            double g, const CellParameters& p, const DerivedGeometry& geom,
                            int N_out);

struct TransitionEvent {
    PhaseMode from, to;
    double trigger_value;  // theta at entry triggers, r_p/R_p at exit
};

// theta_trigger is the surface (or bulk, per config) positive stoichiometry.
std::optional<TransitionEvent> detect_transition(PhaseMode mode, double theta_trigger,
                                                 double r_p, int sign_eff,
                                                 const CellParameters& p);

// Explicit state-space form x' = eta1 A1 x + diag(eta2_l) A2 x + eta3 B I + eta1 G
// (matrix-form reproduction used by the nodal/matrix equivalence check).
struct ShellMatrices {
    std::vector<std::vector<double>> A1, A2;
    std::vector<double> B, G;
    double eta1, eta3;
    std::vector<double> eta2;  // per-row M4(chi_l)/dchi
};

ShellMatrices build_shell_matrices(const ShellState& s, double I, int sign_eff, double g,
                                   const CellParameters& p, const DerivedGeometry& geom);

std::vector<double> shell_rhs_via_matrices(const ShellMatrices& m, std::span<const double> x,
                                           double I);

}  // namespace espm
