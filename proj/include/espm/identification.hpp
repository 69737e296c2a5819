#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "espm/params.hpp"
#include "espm/simulator.hpp"

namespace espm {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Constant-current cycling record: samples of (t, I, V) plus the metadata
// needed to anchor SOC. Time must be strictly increasing and the current
// single-signed (rests allowed).
struct Dataset {
    std::vector<double> t, I, V;
    Direction direction = Direction::Discharge;
    double soc0 = 1.0;
    double Q_nom = 0.0;  // Ah

    void validate() const;
};

// Columns t_s, I_A, V_V (header required).
Dataset load_dataset(const std::string& path, Direction dir, double soc0, double Q_nom);

// SOC(t_j) = soc0 - (1/(3600 Q_nom)) * integral of I dt, trapezoidal.
std::vector<double> soc_exp(const Dataset& d);

// Identified vector Theta, in the canonical order
// [R_n, R_p, A_cell, D_s_n, D_s_p, theta_n_100, theta_n_0, theta_p_100,
//  theta_p_0, theta_p_alpha, theta_p_beta, R_l].
constexpr int kThetaDim = 12;
using ThetaVector = std::array<double, kThetaDim>;

extern const std::array<const char*, kThetaDim> kThetaNames;
extern const std::array<const char*, kThetaDim> kThetaUnits;
extern const std::array<bool, kThetaDim> kThetaLogScale;  // searched in log10 space

CellParameters apply_theta(const CellParameters& base, const ThetaVector& theta);
ThetaVector extract_theta(const CellParameters& p);

struct ThetaBounds {
    ThetaVector lo, hi;
    void validate() const;
};

struct PsoSettings {
    int swarm = 60;
    int iterations = 200;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
};

struct IdentificationProblem {
    CellParameters base;  // carries the non-identified constants and grids
    std::vector<Dataset> datasets;
    ThetaBounds bounds;
    double w1 = 1.0, w2 = 1.0, w3 = 1.0;
    double Q_low = 0.0, Q_high = 0.0;  // 0 = Q_nom * (1 -/+ 0.1)
    double penalty_weight = 100.0;
    PsoSettings pso;

    double q_low() const { return Q_low > 0 ? Q_low : base.Q_nom * 0.9; }
    double q_high() const { return Q_high > 0 ? Q_high : base.Q_nom * 1.1; }
};

struct CostTerms {
    double v_rms_rel = 0.0, soc_n_rms = 0.0, soc_p_rms = 0.0;
    double weighted(double w1, double w2, double w3) const {
        return w1 * v_rms_rel + w2 * soc_n_rms + w3 * soc_p_rms;
    }
};

// Pure RMS assembly, exposed for oracle tests.
CostTerms rms_terms(const std::vector<double>& V_exp, const std::vector<double>& V_sim,
                    const std::vector<double>& soc_ref, const std::vector<double>& soc_n_sim,
                    const std::vector<double>& soc_p_sim);

struct ConstraintReport {
    double slack_b = 0.0;  // theta_p_0 - theta_p_beta       (>= 0 satisfied)
    double slack_c = 0.0;  // theta_p_alpha - theta_p_100    (>= 0 satisfied)
    double Q_n = 0.0, Q_p = 0.0;
    bool rp_nonneg = true;
    double rp_end_max_frac = 0.0;  // max over datasets of final r_p/R_p
    double penalty = 0.0;          // quadratic exterior penalty
    bool satisfied(double rho_frac, double q_lo, double q_hi) const;
};

struct CostBreakdown {
    double J = 1e3;  // simulation failures map to this finite penalty value
    std::vector<CostTerms> per_dataset;
    ConstraintReport constraints;
    bool sim_failed = false;
    std::string failure;
    double penalized() const { return J + constraints.penalty; }
};

// Capacity Q_i = nu_i F L_i A_cell c_max_i |theta_100 - theta_0| / 3600, Ah.
double capacity_Ah(Electrode e, const CellParameters& p);

CostBreakdown cost(const ThetaVector& theta, const IdentificationProblem& prob);

struct IdentificationResult {
    ThetaVector theta{};
    CostBreakdown best;
    std::vector<double> history;  // best penalized objective per iteration
    bool feasible = false;
    long evaluations = 0;
    double wall_seconds = 0.0;
};

// Global-best PSO over the bounded 12-dimensional box: inertia 0.729,
// cognitive/social coefficients 1.49, clamping with velocity zeroing,
// deterministic under fixed seed.
IdentificationResult identify(const IdentificationProblem& prob);

std::string result_to_json(const IdentificationResult& r, const IdentificationProblem& prob);
void write_bounds_table_csv(const IdentificationResult& r, const IdentificationProblem& prob,
                            const std::string& path);

// Reads bounds/weights/PSO settings from a JSON file (see README for the schema).
void load_identification_settings(const std::string& path, IdentificationProblem& prob);

}  // namespace espm
