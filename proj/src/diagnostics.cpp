#include "espm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "espm/core_shell.hpp"
#include "espm/identification.hpp"

namespace espm {

CurrentProfile cc_profile(double crate, Direction dir, double hours, const CellParameters& p) {
    CurrentProfile prof;
    double I = crate * p.Q_nom * (dir == Direction::Discharge ? 1.0 : -1.0);
    prof.segments.push_back({hours * 3600.0, I});
    return prof;
}

SimulationTrace run_c12(Direction dir, const CellParameters& p, double hours) {
    DerivedGeometry geom = derive_geometry(p);
    CellState s0 = initial_state(dir == Direction::Discharge ? 1.0 : 0.0, dir, p, geom);
    return simulate(cc_profile(1.0 / 12.0, dir, hours, p), s0, p, SimOptions::from_params(p));
}

CoulombCheck coulomb_bookkeeping(const SimulationTrace& tr, const CellParameters& p) {
    double dsoc_n = tr.soc_n.back() - tr.soc_n.front();
    double dsoc_p = tr.soc_p.back() - tr.soc_p.front();
    // trapezoidal charge over the trace (current is piecewise constant)
    double q_signed = 0.0, q_abs = 0.0;
    for (size_t i = 1; i < tr.size(); ++i) {
        double dt = tr.t[i] - tr.t[i - 1];
        q_signed += 0.5 * (tr.I[i] + tr.I[i - 1]) * dt / 3600.0;
        q_abs += 0.5 * (std::abs(tr.I[i]) + std::abs(tr.I[i - 1])) * dt / 3600.0;
    }
    double Qn = capacity_Ah(Electrode::Negative, p);
    double Qp = capacity_Ah(Electrode::Positive, p);
    CoulombCheck c;
    // discharge (q_signed > 0) lowers both SOCs
    c.err_n = std::abs(dsoc_n * Qn + q_signed) / q_abs;
    c.err_p = std::abs(dsoc_p * Qp + q_signed) / q_abs;
    return c;
}

double matrix_nodal_equivalence(const CellParameters& p, int trials, unsigned seed) {
    DerivedGeometry geom = derive_geometry(p);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        double I = (unit(rng) * 2.0 - 1.0) * p.Q_nom;
        if (I == 0) I = p.Q_nom / 12.0;
        int sgn = I > 0 ? 1 : -1;
        double g = boundary_concentration(I, p, 0.0);
        ShellState s;
        s.r_p = (0.05 + 0.9 * unit(rng)) * p.R_p;
        s.c.resize(p.N_r - 1);
        double clo = std::min(p.c_alpha(), p.c_beta());
        double chi = std::max(p.c_alpha(), p.c_beta());
        for (auto& v : s.c) v = clo + unit(rng) * (chi - clo);

        std::vector<double> x(p.N_r);
        x[0] = s.r_p;
        std::copy(s.c.begin(), s.c.end(), x.begin() + 1);
        std::vector<double> f_nodal(p.N_r);
        shell_rhs(x, I, sgn, g, p, geom, f_nodal);
        ShellMatrices m = build_shell_matrices(s, I, sgn, g, p, geom);
        std::vector<double> f_mat = shell_rhs_via_matrices(m, x, I);

        double scale = 0.0;
        for (double v : f_nodal) scale = std::max(scale, std::abs(v));
        for (int i = 0; i < p.N_r; ++i)
            worst = std::max(worst, std::abs(f_nodal[i] - f_mat[i]) / scale);
    }
    return worst;
}

double voltage_rms_diff(const SimulationTrace& a, const SimulationTrace& b) {
    size_t n = std::min(a.size(), b.size());
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = a.V[i] - b.V[i];
        s += d * d;
    }
    return std::sqrt(s / n);
}

std::vector<CheckResult> run_checks(const CellParameters& p) {
    std::vector<CheckResult> out;
    auto fmt = [](double v) {
        std::ostringstream ss;
        ss.precision(3);
        ss << std::scientific << v;
        return ss.str();
    };

    SimulationTrace dis = run_c12(Direction::Discharge, p);
    SimulationTrace chg = run_c12(Direction::Charge, p);

    out.push_back({"electrolyte-li-conservation",
                   dis.electrolyte_li_drift < 1e-6 && chg.electrolyte_li_drift < 1e-6,
                   "max relative drift " +
                       fmt(std::max(dis.electrolyte_li_drift, chg.electrolyte_li_drift)) +
                       " (limit 1e-6)"});

    CoulombCheck cd = coulomb_bookkeeping(dis, p);
    CoulombCheck cc = coulomb_bookkeeping(chg, p);
    double worst = std::max({cd.err_n, cd.err_p, cc.err_n, cc.err_p});
    out.push_back({"coulomb-bookkeeping", worst < 5e-3,
                   "worst per-electrode error " + fmt(worst) + " (limit 5e-3)"});

    bool lifecycle = dis.events.size() >= 2 && chg.events.size() >= 2;
    std::string detail = "transitions per run: discharge " + std::to_string(dis.events.size()) +
                         ", charge " + std::to_string(chg.events.size());
    if (lifecycle) {
        lifecycle = dis.events[0].to == PhaseMode::TwoPhase &&
                    dis.events[1].to == PhaseMode::OnePhaseBeta &&
                    chg.events[0].to == PhaseMode::TwoPhase &&
                    chg.events[1].to == PhaseMode::OnePhaseAlpha;
    }
    out.push_back({"moving-boundary-lifecycle", lifecycle, detail});

    double eq = matrix_nodal_equivalence(p, 100, 42);
    out.push_back({"matrix-nodal-equivalence", eq < 1e-14,
                   "max relative deviation " + fmt(eq) + " (limit 1e-14)"});

    double flux = std::max(dis.max_flux_identity_dev, chg.max_flux_identity_dev);
    out.push_back({"boundary-flux-identity", flux < 1e-12,
                   "max relative deviation " + fmt(flux) + " (limit 1e-12)"});

    CellParameters p2 = p;
    p2.N_r = 2 * p.N_r;
    SimulationTrace dis2 = run_c12(Direction::Discharge, p2);
    double rms = voltage_rms_diff(dis, dis2);
    out.push_back({"shell-grid-refinement", rms < 1e-3,
                   "N_r " + std::to_string(p.N_r) + "->" + std::to_string(p2.N_r) +
                       " voltage RMS change " + fmt(rms) + " V (limit 1e-3)"});

    return out;
}

}  // namespace espm
