#pragma once

#include <limits>
#include <string>
#include <vector>

#include "espm/core_shell.hpp"
#include "espm/electrolyte.hpp"
#include "espm/params.hpp"
#include "espm/spherical.hpp"
#include "espm/voltage.hpp"

namespace espm {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full dynamic state. Exactly one positive-particle representation is
// active: `positive` (radial nodes) outside two-phase, `shell` inside.
struct CellState {
    ElectrolyteState elyte;
    std::vector<double> c_s_n;
    PhaseMode mode = PhaseMode::OnePhaseAlpha;
    std::vector<double> positive;  // one-phase radial profile
    ShellState shell;              // two-phase representation
    double core_c = 0.0;           // core concentration ic_k while two-phase
    double g_hold = 0.0;           // boundary concentration, held at I = 0
    int sign_hold = 0;             // current sign, held at I = 0
    OcpBranch branch = OcpBranch::Discharge;
    double t_bar = 0.0;            // time of last regime transition
    double q_throughput_Ah = 0.0;
};

struct ProfileSegment {
    double duration;  // s
    double I;         // A, positive = discharge
};

struct CurrentProfile {
    std::vector<ProfileSegment> segments;
    double V_min = -std::numeric_limits<double>::infinity();
    double V_max = std::numeric_limits<double>::infinity();
    double capacity_limit_Ah = std::numeric_limits<double>::infinity();

    double total_duration() const;
    void validate() const;
};

struct TraceEvent {
    double t;
    PhaseMode from, to;
    double trigger_value;
};

struct SimulationTrace {
    std::vector<double> t, I, V, soc_n, soc_p, rp_over_Rp, theta_p_surf, theta_n_surf, U_p, U_n,
        eta_p, eta_n, dphi_e, ohmic, q_Ah;
    std::vector<TraceEvent> events;

    // step-level diagnostics
    double max_flux_identity_dev = 0.0;   // two-phase surface-flux reconstruction
    double electrolyte_li_drift = 0.0;    // max relative drift of total electrolyte lithium
    double min_electrolyte_c = std::numeric_limits<double>::infinity();
    long total_steps = 0;
    long rhs_evals = 0;
    std::string termination_reason = "profile end";
    double t_end = 0.0;

    size_t size() const { return t.size(); }
};

struct SimOptions {
    double rtol = 1e-6;
    double atol_c = 1e-9;
    double dt_out = 10.0;
    std::vector<double> sample_times;  // overrides dt_out when non-empty

    static SimOptions from_params(const CellParameters& p) {
        SimOptions o;
        o.rtol = p.rtol;
        o.atol_c = p.atol_c;
        o.dt_out = p.dt_out;
        return o;
    }
};

// Equilibrium state at the window-mapped stoichiometries. Rejects states
// whose positive stoichiometry falls inside the two-phase plateau.
CellState initial_state(double soc0, Direction dir, const CellParameters& p,
                        const DerivedGeometry& g);

SimulationTrace simulate(const CurrentProfile& profile, const CellState& init,
                         const CellParameters& p, const SimOptions& opt);

// Surface/bulk positive stoichiometry for the active representation.
double theta_p_surface(const CellState& s, double I, const CellParameters& p,
                       const DerivedGeometry& g);
double theta_p_bulk(const CellState& s, double I, const CellParameters& p,
                    const DerivedGeometry& g);

void write_trace_csv(const SimulationTrace& tr, const std::string& path);

}  // namespace espm
