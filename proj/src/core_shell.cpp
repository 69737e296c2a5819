#include "espm/core_shell.hpp"

#include "espm/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace espm {

const char* to_string(PhaseMode m) {
    switch (m) {
        case PhaseMode::OnePhaseAlpha: return "one-phase-alpha";
        case PhaseMode::TwoPhase: return "two-phase";
        case PhaseMode::OnePhaseBeta: return "one-phase-beta";
    }
    return "?";
}

double boundary_concentration(double I, const CellParameters& p, double held) {
    if (I > 0) return p.c_beta();
    if (I < 0) return p.c_alpha();
    return held;
}

double core_initial_condition(Direction k, const CellParameters& p) {
    return k == Direction::Discharge ? p.c_alpha() : p.c_beta();
}

ShellState enter_two_phase(Direction k, const CellParameters& p) {
    if (p.epsilon_init_frac <= 0)
        throw std::invalid_argument("two-phase entry requires epsilon > 0 (singular M3 otherwise)");
    ShellState s;
    s.r_p = p.R_p * (1.0 - p.epsilon_init_frac);
    double g = k == Direction::Discharge ? p.c_beta() : p.c_alpha();
    s.c.assign(p.N_r - 1, g);
    return s;
}

TransformCoefficients transform_coefficients(const ShellState& s, double I, int sign_eff,
                                             double g, const CellParameters& p,
                                             const DerivedGeometry& geom) {
    const double shell = p.R_p - s.r_p;
    if (shell <= 0) throw std::runtime_error("shell width R_p - r_p is non-positive (singular)");
    TransformCoefficients tc;
    tc.dchi = 1.0 / s.N_r();
    tc.M1 = sign_eff * p.D_s_p / ((p.c_alpha() - p.c_beta()) * shell);
    tc.M2 = shell * tc.dchi / (p.D_s_p * geom.a_p * p.A_cell * p.F * p.L_p);
    tc.M3 = p.D_s_p / (shell * shell);
    tc.drp = tc.M1 / tc.dchi * (s.c[0] - g);
    return tc;
}

double m4_at_node(const TransformCoefficients& tc, int l, const ShellState& s,
                  const CellParameters& p) {
    const double shell = p.R_p - s.r_p;
    const double chi = l * tc.dchi;
    const double r = s.r_p + chi * shell;
    return 2.0 * p.D_s_p / (r * shell) - (chi - 1.0) / shell * tc.drp;
}

void shell_rhs(std::span<const double> x, double I, int sign_eff, double g,
               const CellParameters& p, const DerivedGeometry& geom, std::span<double> dxdt,
               bool frozen_boundary) {
    const int N = static_cast<int>(x.size());  // N = N_r states: r_p and N_r-1 nodes
    ShellState s;
    s.r_p = x[0];
    s.c.assign(x.begin() + 1, x.end());
    TransformCoefficients tc = transform_coefficients(s, I, sign_eff, g, p, geom);
    if (frozen_boundary) tc.drp = 0.0;

    dxdt[0] = tc.drp;

    const double e1 = tc.M3 / (tc.dchi * tc.dchi);
    // interior nodes l = 1..N_r-2, with c_0 = g(I)
    for (int l = 1; l <= N - 2; ++l) {
        double cm = (l == 1) ? g : s.c[l - 2];
        double c0 = s.c[l - 1];
        double cp = s.c[l];
        double m4 = m4_at_node(tc, l, s, p);
        dxdt[l] = e1 * (cp - 2.0 * c0 + cm) + m4 / tc.dchi * (cp - c0);
    }
    // node N_r-1: surface ghost substituted, c_{N_r} = c_{N_r-1} + M2 I
    {
        int l = N - 1;
        double m4 = m4_at_node(tc, l, s, p);
        dxdt[l] = e1 * (tc.M2 * I - s.c[l - 1] + s.c[l - 2]) + tc.M2 * m4 / tc.dchi * I;
    }

    for (int i = 0; i < N; ++i)
        if (!std::isfinite(dxdt[i]))
            throw std::runtime_error("non-finite shell rhs at state " + std::to_string(i));
}

double shell_surface_concentration(const ShellState& s, double I, int sign_eff, double g,
                                   const CellParameters& p, const DerivedGeometry& geom) {
    TransformCoefficients tc = transform_coefficients(s, I, sign_eff, g, p, geom);
    return s.c.back() + tc.M2 * I;
}

double shell_bulk_stoichiometry(const ShellState& s, double core_c, double I, int sign_eff,
                                double g, const CellParameters& p, const DerivedGeometry& geom) {
    const int N_r = s.N_r();
    const double shell = p.R_p - s.r_p;
    const double dchi = 1.0 / N_r;
    const double c_surf = shell_surface_concentration(s, I, sign_eff, g, p, geom);

    auto value_at = [&](int k) -> double {
        if (k == 0) return g;
        if (k == N_r) return c_surf;
        return s.c[k - 1];
    };
    // integral of c r^2 dr over the shell, r = r_p + chi (R_p - r_p)
    double integral = 0.0;
    for (int k = 0; k < N_r; ++k) {
        double r0 = s.r_p + k * dchi * shell;
        double r1 = s.r_p + (k + 1) * dchi * shell;
        integral += radial_cell_moment(r0, r1, value_at(k), value_at(k + 1));
    }
    double core = core_c * s.r_p * s.r_p * s.r_p / 3.0;
    return 3.0 / (p.c_s_p_max * p.R_p * p.R_p * p.R_p) * (core + integral);
}

TwoPhaseExit exit_two_phase(const ShellState& s, double core_c, double I, int sign_eff,
                            double g, const CellParameters& p, const DerivedGeometry& geom,
                            int N_out) {
    const double rho = p.rho_frac * p.R_p;
    if (s.r_p > rho)
        throw std::logic_error("exit_two_phase requires r_p <= rho (r_p/R_p = " +
                               std::to_string(s.r_p / p.R_p) + ")");

    const int N_r = s.N_r();
    const double shell = p.R_p - s.r_p;
    const double dchi = 1.0 / N_r;
    const double c_surf = shell_surface_concentration(s, I, sign_eff, g, p, geom);

    auto value_at = [&](int k) -> double {
        if (k == 0) return g;
        if (k == N_r) return c_surf;
        return s.c[k - 1];
    };

    TwoPhaseExit out;
    out.c.resize(N_out);
    const double dr = p.R_p / (N_out - 1);
    for (int j = 0; j < N_out; ++j) {
        double r = j * dr;
        // the residual core (r_p <= rho) is below grid resolution; nodes at or
        // inside it take the boundary value, the renormalization absorbs the
        // sub-threshold lithium difference
        double chi = std::max(0.0, (r - s.r_p) / shell);
        int k = std::min(static_cast<int>(chi / dchi), N_r - 1);
        double chi0 = k * dchi;
        double w = (chi - chi0) / dchi;
        out.c[j] = (1.0 - w) * value_at(k) + w * value_at(k + 1);  // monotone (linear)
    }

    // lithium moment before (core + shell quadrature) and after (radial trapezoid)
    double before = shell_bulk_stoichiometry(s, core_c, I, sign_eff, g, p, geom) *
                    p.c_s_p_max * p.R_p * p.R_p * p.R_p / 3.0;
    double after = 0.0;
    for (int j = 0; j < N_out - 1; ++j)
        after += radial_cell_moment(j * dr, (j + 1) * dr, out.c[j], out.c[j + 1]);
    out.renorm = before / after;
    if (std::abs(out.renorm - 1.0) > 1e-3)
        throw std::runtime_error("two-phase exit: conservation correction " +
                                 std::to_string(out.renorm) + " outside 1 +/- 1e-3");
    for (double& v : out.c) v *= out.renorm;
    return out;
}

std::optional<TransitionEvent> detect_transition(PhaseMode mode, double theta_trigger,
                                                 double r_p, int sign_eff,
                                                 const CellParameters& p) {
    switch (mode) {
        case PhaseMode::OnePhaseAlpha:
            if (sign_eff > 0 && theta_trigger >= p.theta_p_alpha)
                return TransitionEvent{mode, PhaseMode::TwoPhase, theta_trigger};
            break;
        case PhaseMode::OnePhaseBeta:
            if (sign_eff < 0 && theta_trigger <= p.theta_p_beta)
                return TransitionEvent{mode, PhaseMode::TwoPhase, theta_trigger};
            break;
        case PhaseMode::TwoPhase:
            if (r_p <= p.rho_frac * p.R_p) {
                PhaseMode to = sign_eff > 0 ? PhaseMode::OnePhaseBeta : PhaseMode::OnePhaseAlpha;
                return TransitionEvent{mode, to, r_p / p.R_p};
            }
            break;
    }
    return std::nullopt;
}

ShellMatrices build_shell_matrices(const ShellState& s, double I, int sign_eff, double g,
                                   const CellParameters& p, const DerivedGeometry& geom) {
    const int N = s.N_r();  // state dimension
    TransformCoefficients tc = transform_coefficients(s, I, sign_eff, g, p, geom);
    const double eta1 = tc.M3 / (tc.dchi * tc.dchi);
    const double eta4 = tc.M1 / tc.dchi;

    ShellMatrices m;
    m.eta1 = eta1;
    m.A1.assign(N, std::vector<double>(N, 0.0));
    m.A2.assign(N, std::vector<double>(N, 0.0));
    m.B.assign(N, 0.0);
    m.G.assign(N, 0.0);
    m.eta2.assign(N, 0.0);

    m.A1[0][1] = eta4 / eta1;
    m.G[0] = -eta4 / eta1 * g;
    for (int l = 1; l <= N - 2; ++l) {
        m.A1[l][l] = -2.0;
        m.A1[l][l + 1] = 1.0;
        if (l >= 2) m.A1[l][l - 1] = 1.0;
        m.A2[l][l] = -1.0;
        m.A2[l][l + 1] = 1.0;
        m.eta2[l] = m4_at_node(tc, l, s, p) / tc.dchi;
    }
    m.G[1] = g;
    // last row: -1 on the diagonal plus the sub-diagonal +1 required by the
    // ghost-substituted surface stencil
    m.A1[N - 1][N - 1] = -1.0;
    m.A1[N - 1][N - 2] = 1.0;
    m.B[N - 1] = 1.0;
    double m4_last = m4_at_node(tc, N - 1, s, p);
    m.eta3 = tc.M2 / tc.dchi * (m4_last + tc.M3 / tc.dchi);
    return m;
}

std::vector<double> shell_rhs_via_matrices(const ShellMatrices& m, std::span<const double> x,
                                           double I) {
    const int N = static_cast<int>(x.size());
    std::vector<double> f(N, 0.0);
    for (int i = 0; i < N; ++i) {
        double a1 = 0.0, a2 = 0.0;
        for (int j = 0; j < N; ++j) {
            a1 += m.A1[i][j] * x[j];
            a2 += m.A2[i][j] * x[j];
        }
        f[i] = m.eta1 * a1 + m.eta2[i] * a2 + m.eta3 * m.B[i] * I + m.eta1 * m.G[i];
    }
    return f;
}

}  // namespace espm
