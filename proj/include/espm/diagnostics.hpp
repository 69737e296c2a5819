#pragma once

#include <string>
#include <vector>

#include "espm/params.hpp"
#include "espm/simulator.hpp"

namespace espm {

struct CheckResult {
    std::string name;
    bool pass;
    std::string detail;
};

// C/12 constant-current profile for the configured cell (duration in hours).
CurrentProfile cc_profile(double crate, Direction dir, double hours,
                          const CellParameters& p);

// Full charge-then-exit / discharge runs used by the conservation checks.
SimulationTrace run_c12(Direction dir, const CellParameters& p, double hours = 11.4);

// Invariant suite behind the `check` subcommand: electrolyte lithium
// conservation, Coulomb bookkeeping, moving-boundary lifecycle, matrix/nodal
// rhs equivalence, boundary-flux identity, N_r refinement.
std::vector<CheckResult> run_checks(const CellParameters& p);

// Matrix-form vs nodal rhs max relative deviation over `trials` random states.
double matrix_nodal_equivalence(const CellParameters& p, int trials, unsigned seed);

// |dSOC_i * Q_i - integral I dt / 3600| / (integral |I| dt / 3600)
struct CoulombCheck {
    double err_n, err_p;
};
CoulombCheck coulomb_bookkeeping(const SimulationTrace& tr, const CellParameters& p);

// Voltage RMS difference between two traces sampled on the same grid,
// compared over the overlapping prefix.
double voltage_rms_diff(const SimulationTrace& a, const SimulationTrace& b);

}  // namespace espm
