#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace espm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Anode open-circuit potential fit:
///   U_n(theta) = u0 + exp_amp * exp(-exp_rate * theta)
///              + sum_j amp_j * tanh((theta - center_j) / width_j)
/// The cell studied here publishes no anode OCP; coefficients come from the
/// config. The bundled example uses a lumped low-impedance anode fit (see
/// README) and can be swapped for a full graphite fit.
struct NegativeOcp {
    double u0 = 0.035;
    double exp_amp = 0.30;
    double exp_rate = 40.0;
    struct TanhTerm {
        double amp, center, width;
    };
    std::vector<TanhTerm> tanh_terms{{-0.010, 0.5, 0.1}};

    double operator()(double theta) const;
    double slope(double theta) const;  // dU/dtheta, used by sensitivity checks
};

enum class TransitionTrigger { Surface, Bulk };

// All model constants in SI units. Immutable after load_config(); safe to
// share across threads.
struct CellParameters {
    // geometry
    double R_n, R_p;          // particle radii, m
    double L_n, L_s, L_p;     // region thicknesses, m
    double A_cell;            // cell area, m^2

    // solid transport / thermodynamics
    double D_s_n, D_s_p;              // solid diffusivities, m^2/s
    double c_s_n_max, c_s_p_max;      // max solid concentrations, mol/m^3
    double theta_n_100, theta_n_0;    // negative stoichiometric window
    double theta_p_100, theta_p_0;    // positive stoichiometric window
    double theta_p_alpha, theta_p_beta;  // phase-boundary stoichiometries

    // composite electrode structure
    double nu_n, nu_p;                // active-material volume fractions
    double nu_n_filler, nu_p_filler;  // filler fractions
    double eps_s;                     // separator porosity
    double brugg;                     // Bruggeman exponent

    // electrolyte
    double t_plus;          // transference number
    double c0_electrolyte;  // initial electrolyte concentration, mol/m^3

    // kinetics and ohmics
    double k_n, k_p;  // reaction-rate constants
    double R_l;       // lumped ohmic resistance, Ohm

    // environment / constants
    double T = 298.15;       // K
    double F = 96485.0;      // C/mol
    double R_gas = 8.314;    // J/(mol K)
    double Q_nom;            // nominal capacity, Ah

    // core-shell numerics
    double epsilon_init_frac = 0.001;  // initial boundary offset eps/R_p
    double rho_frac = 0.001;           // terminal boundary threshold rho/R_p

    NegativeOcp negative_ocp;
    TransitionTrigger transition_trigger = TransitionTrigger::Surface;

    // grid sizes
    int n_n = 10, n_s = 10, n_p = 10;  // electrolyte finite volumes per region
    int N_rn = 20;                     // negative particle radial nodes
    int N_r = 30;  // shell chi nodes (also one-phase positive radial nodes)

    // solver defaults
    double rtol = 1e-6;
    double atol_c = 1e-9;  // absolute tolerance in concentration units
    double dt_out = 10.0;  // trace sampling period, s

    // phase-boundary concentrations
    double c_alpha() const { return theta_p_alpha * c_s_p_max; }
    double c_beta() const { return theta_p_beta * c_s_p_max; }

    void validate() const;  // throws ConfigError naming the violated field
};

struct DerivedGeometry {
    double a_n, a_p;           // active surface area per volume, 1/m
    double eps_n, eps_s, eps_p;  // porosities
};

// a_i = 3 nu_i / R_i, eps_i = 1 - nu_i - nu_i_filler. Throws on
// non-physical porosity.
DerivedGeometry derive_geometry(const CellParameters& p);

CellParameters load_config(const std::string& path);
CellParameters parse_config(const std::string& json_text);
std::string config_to_json(const CellParameters& p);
void save_config(const CellParameters& p, const std::string& path);

// Apply "key=value" overrides (top-level scalar/integer keys only).
void apply_override(CellParameters& p, const std::string& key, const std::string& value);

}  // namespace espm
