#include "espm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "espm/ode.hpp"

namespace espm {

double CurrentProfile::total_duration() const {
    double s = 0.0;
    for (const auto& seg : segments) s += seg.duration;
    return s;
}

void CurrentProfile::validate() const {
    if (segments.empty()) throw SimulationError("current profile has no segments");
    for (const auto& seg : segments) {
        if (!(seg.duration > 0)) throw SimulationError("profile segment durations must be positive");
        if (!std::isfinite(seg.I)) throw SimulationError("profile segment current must be finite");
    }
}

CellState initial_state(double soc0, Direction dir, const CellParameters& p,
                        const DerivedGeometry& g) {
    if (soc0 < 0.0 || soc0 > 1.0) throw SimulationError("soc0 must lie in [0,1]");
    CellState s;
    s.elyte.c.assign(p.n_n + p.n_s + p.n_p, p.c0_electrolyte);
    double theta_n = p.theta_n_0 + soc0 * (p.theta_n_100 - p.theta_n_0);
    double theta_p = p.theta_p_0 + soc0 * (p.theta_p_100 - p.theta_p_0);
    s.c_s_n.assign(p.N_rn, theta_n * p.c_s_n_max);
    s.positive.assign(p.N_r, theta_p * p.c_s_p_max);
    if (theta_p < p.theta_p_alpha)
        s.mode = PhaseMode::OnePhaseAlpha;
    else if (theta_p > p.theta_p_beta)
        s.mode = PhaseMode::OnePhaseBeta;
    else
        throw SimulationError(
            "ambiguous phase: initial positive stoichiometry " + std::to_string(theta_p) +
            " lies inside the two-phase plateau; cannot initialize without history");
    s.branch = dir == Direction::Discharge ? OcpBranch::Discharge : OcpBranch::Charge;
    s.g_hold = dir == Direction::Discharge ? p.c_beta() : p.c_alpha();
    s.sign_hold = 0;
    return s;
}

double theta_p_surface(const CellState& s, double I, const CellParameters& p,
                       const DerivedGeometry& g) {
    if (s.mode == PhaseMode::TwoPhase)
        return shell_surface_concentration(s.shell, I, s.sign_hold, s.g_hold, p, g) / p.c_s_p_max;
    return s.positive.back() / p.c_s_p_max;
}

double theta_p_bulk(const CellState& s, double I, const CellParameters& p,
                    const DerivedGeometry& g) {
    if (s.mode == PhaseMode::TwoPhase)
        return shell_bulk_stoichiometry(s.shell, s.core_c, I, s.sign_hold, s.g_hold, p, g);
    return bulk_stoichiometry(s.positive, p.R_p, p.c_s_p_max);
}

namespace {

int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

struct Layout {
    int ne, nn, np;
    int total() const { return ne + nn + np; }
    int e0() const { return 0; }
    int n0() const { return ne; }
    int p0() const { return ne + nn; }
};

void pack(const CellState& s, const Layout& L, std::vector<double>& y) {
    y.resize(L.total());
    std::copy(s.elyte.c.begin(), s.elyte.c.end(), y.begin() + L.e0());
    std::copy(s.c_s_n.begin(), s.c_s_n.end(), y.begin() + L.n0());
    if (s.mode == PhaseMode::TwoPhase) {
        y[L.p0()] = s.shell.r_p;
        std::copy(s.shell.c.begin(), s.shell.c.end(), y.begin() + L.p0() + 1);
    } else {
        std::copy(s.positive.begin(), s.positive.end(), y.begin() + L.p0());
    }
}

// mode must already be set on s
void unpack(const double* y, const Layout& L, CellState& s) {
    s.elyte.c.assign(y + L.e0(), y + L.e0() + L.ne);
    s.c_s_n.assign(y + L.n0(), y + L.n0() + L.nn);
    if (s.mode == PhaseMode::TwoPhase) {
        s.shell.r_p = y[L.p0()];
        s.shell.c.assign(y + L.p0() + 1, y + L.p0() + L.np);
    } else {
        s.positive.assign(y + L.p0(), y + L.p0() + L.np);
    }
}

constexpr double kThetaMargin = 1e-9;

double clamp_theta(double th) { return std::clamp(th, kThetaMargin, 1.0 - kThetaMargin); }

void apply_transition(CellState& state, const TransitionEvent& ev, double t, double I,
                      const CellParameters& p, const DerivedGeometry& geom, SimulationTrace& tr) {
    if (ev.to == PhaseMode::TwoPhase) {
        Direction dir = (state.sign_hold > 0 || I > 0) ? Direction::Discharge : Direction::Charge;
        state.shell = enter_two_phase(dir, p);
        state.core_c = core_initial_condition(dir, p);
        state.positive.clear();
    } else {
        int sgn = state.sign_hold != 0 ? state.sign_hold : sign_of(I);
        TwoPhaseExit ex =
            exit_two_phase(state.shell, state.core_c, I, sgn, state.g_hold, p, geom, p.N_r);
        state.positive = ex.c;
        state.shell = ShellState{};
    }
    state.mode = ev.to;
    state.t_bar = t;
    tr.events.push_back({t, ev.from, ev.to, ev.trigger_value});
}

}  // namespace

SimulationTrace simulate(const CurrentProfile& profile, const CellState& init,
                         const CellParameters& p, const SimOptions& opt) {
    profile.validate();
    const DerivedGeometry geom = derive_geometry(p);
    const ElectrolyteGrid grid = make_electrolyte_grid(p, geom);
    const double rho = p.rho_frac * p.R_p;

    CellState state = init;
    if (static_cast<int>(state.elyte.c.size()) != grid.size())
        throw SimulationError("initial electrolyte state does not match grid size");

    SimulationTrace tr;
    const double T_total = profile.total_duration();

    std::vector<double> samples;
    if (!opt.sample_times.empty()) {
        samples = opt.sample_times;
        if (!std::is_sorted(samples.begin(), samples.end()))
            throw SimulationError("sample times must be ascending");
    } else {
        for (double t = 0.0; t <= T_total * (1.0 + 1e-12); t += opt.dt_out) samples.push_back(t);
    }
    size_t sample_idx = 0;

    const Layout L{grid.size(), p.N_rn, p.N_r};
    std::vector<double> y(L.total());

    const double li0 = total_lithium(state.elyte, grid);

    double t = 0.0;
    double seg_t0 = 0.0, seg_q0 = 0.0;
    double seg_I = 0.0;
    bool done = false;

    CellState scratch = state;  // reused when evaluating interpolated samples

    auto breakdown_at = [&](const CellState& cs, double I) -> VoltageBreakdown {
        double c_avg = mean_concentration(cs.elyte, grid);
        double dphi = electrolyte_potential_drop(cs.elyte, grid, p);
        double R_el = electrolyte_resistance(cs.elyte, grid, p, geom);
        double th_p = clamp_theta(theta_p_surface(cs, I, p, geom));
        double th_n = clamp_theta(cs.c_s_n.back() / p.c_s_n_max);
        return assemble_voltage(th_p, th_n, I, c_avg, dphi, R_el, cs.branch, p, geom);
    };

    auto emit_row = [&](double tt, const CellState& cs, double I) {
        VoltageBreakdown b = breakdown_at(cs, I);
        tr.t.push_back(tt);
        tr.I.push_back(I);
        tr.V.push_back(b.V_cell);
        tr.soc_n.push_back(soc_negative(bulk_stoichiometry(cs.c_s_n, p.R_n, p.c_s_n_max), p));
        tr.soc_p.push_back(soc_positive(theta_p_bulk(cs, I, p, geom), p));
        tr.rp_over_Rp.push_back(cs.mode == PhaseMode::TwoPhase ? cs.shell.r_p / p.R_p : 0.0);
        tr.theta_p_surf.push_back(theta_p_surface(cs, I, p, geom));
        tr.theta_n_surf.push_back(cs.c_s_n.back() / p.c_s_n_max);
        tr.U_p.push_back(b.U_p);
        tr.U_n.push_back(b.U_n);
        tr.eta_p.push_back(b.eta_p);
        tr.eta_n.push_back(b.eta_n);
        tr.dphi_e.push_back(b.delta_phi_e);
        tr.ohmic.push_back(b.ohmic);
        tr.q_Ah.push_back(seg_q0 + std::abs(I) * (tt - seg_t0) / 3600.0);
    };

    while (sample_idx < samples.size() && samples[sample_idx] <= 0.0) {
        emit_row(0.0, state, profile.segments.front().I);
        ++sample_idx;
    }

    for (size_t si = 0; si < profile.segments.size() && !done; ++si) {
        seg_I = profile.segments[si].I;
        double seg_end = seg_t0 + profile.segments[si].duration;

        if (std::isfinite(profile.capacity_limit_Ah) && seg_I != 0.0) {
            double t_cap =
                seg_t0 + (profile.capacity_limit_Ah - seg_q0) * 3600.0 / std::abs(seg_I);
            if (t_cap <= seg_end) {
                seg_end = t_cap;
                tr.termination_reason = "capacity limit";
                done = true;
            }
        }

        if (state.mode == PhaseMode::TwoPhase && seg_I != 0.0 && state.sign_hold != 0 &&
            sign_of(seg_I) != state.sign_hold)
            throw SimulationError("current sign reversal inside two-phase at t = " +
                                  std::to_string(t) + " s is not supported");

        if (seg_I != 0.0) {
            state.g_hold = boundary_concentration(seg_I, p, state.g_hold);
            state.sign_hold = sign_of(seg_I);
            state.branch = seg_I > 0 ? OcpBranch::Discharge : OcpBranch::Charge;
        }

        bool segment_done = false;
        while (!segment_done) {
            {
                // transition already due at (re)start
                double trig = p.transition_trigger == TransitionTrigger::Surface
                                  ? theta_p_surface(state, seg_I, p, geom)
                                  : theta_p_bulk(state, seg_I, p, geom);
                double rp_now = state.mode == PhaseMode::TwoPhase ? state.shell.r_p : 0.0;
                int se = state.sign_hold != 0 ? state.sign_hold : sign_of(seg_I);
                if (auto ev = detect_transition(state.mode, trig, rp_now, se, p)) {
                    apply_transition(state, *ev, t, seg_I, p, geom, tr);
                    continue;
                }
            }

            const PhaseMode mode = state.mode;
            const bool two_phase = mode == PhaseMode::TwoPhase;
            const double g_val = state.g_hold;
            const double core_c = state.core_c;
            const int sgn = state.sign_hold != 0 ? state.sign_hold : sign_of(seg_I);
            pack(state, L, y);

            OdeSystem sys;
            sys.n = L.total();
            sys.blocks = {{L.e0(), L.e0() + L.ne},
                          {L.n0(), L.n0() + L.nn},
                          {L.p0(), L.p0() + L.np}};
            sys.rhs = [&, g_val, sgn, two_phase](double, const double* yv, double* fv) {
                electrolyte_rhs(std::span<const double>(yv + L.e0(), L.ne), grid, seg_I, p,
                                std::span<double>(fv + L.e0(), L.ne));
                negative_rhs(std::span<const double>(yv + L.n0(), L.nn), seg_I, p, geom,
                             std::span<double>(fv + L.n0(), L.nn));
                if (two_phase)
                    shell_rhs(std::span<const double>(yv + L.p0(), L.np), seg_I, sgn, g_val, p,
                              geom, std::span<double>(fv + L.p0(), L.np));
                else
                    one_phase_positive_rhs(std::span<const double>(yv + L.p0(), L.np), seg_I, p,
                                           geom, std::span<double>(fv + L.p0(), L.np));
            };

            OdeOptions oopt;
            oopt.rtol = opt.rtol;
            oopt.atol.assign(L.total(), opt.atol_c);
            if (two_phase) oopt.atol[L.p0()] = 1e-6 * p.R_p;

            auto theta_p_surf_of = [&, g_val, sgn, two_phase](const double* yv) {
                if (!two_phase) return yv[L.p0() + L.np - 1] / p.c_s_p_max;
                ShellState sh;
                sh.r_p = yv[L.p0()];
                sh.c.assign(yv + L.p0() + 1, yv + L.p0() + L.np);
                return shell_surface_concentration(sh, seg_I, sgn, g_val, p, geom) / p.c_s_p_max;
            };
            auto theta_p_bulk_of = [&, g_val, sgn, core_c, two_phase](const double* yv) {
                if (!two_phase)
                    return bulk_stoichiometry(std::span<const double>(yv + L.p0(), L.np), p.R_p,
                                              p.c_s_p_max);
                ShellState sh;
                sh.r_p = yv[L.p0()];
                sh.c.assign(yv + L.p0() + 1, yv + L.p0() + L.np);
                return shell_bulk_stoichiometry(sh, core_c, seg_I, sgn, g_val, p, geom);
            };
            auto voltage_of = [&, mode](const double* yv) {
                scratch.mode = mode;
                unpack(yv, L, scratch);
                scratch.core_c = core_c;
                scratch.g_hold = g_val;
                scratch.sign_hold = sgn;
                scratch.branch = state.branch;
                return breakdown_at(scratch, seg_I).V_cell;
            };

            enum { EvRegime = 0, EvVmax = 1, EvVmin = 2 };
            std::vector<OdeEvent> events;
            if (mode == PhaseMode::OnePhaseAlpha && seg_I > 0) {
                events.push_back({EvRegime,
                                  [&, theta_p_surf_of, theta_p_bulk_of](double, const double* yv) {
                                      double th = p.transition_trigger ==
                                                          TransitionTrigger::Surface
                                                      ? theta_p_surf_of(yv)
                                                      : theta_p_bulk_of(yv);
                                      return th - p.theta_p_alpha;
                                  },
                                  +1});
            } else if (mode == PhaseMode::OnePhaseBeta && seg_I < 0) {
                events.push_back({EvRegime,
                                  [&, theta_p_surf_of, theta_p_bulk_of](double, const double* yv) {
                                      double th = p.transition_trigger ==
                                                          TransitionTrigger::Surface
                                                      ? theta_p_surf_of(yv)
                                                      : theta_p_bulk_of(yv);
                                      return th - p.theta_p_beta;
                                  },
                                  -1});
            } else if (two_phase) {
                events.push_back(
                    {EvRegime, [&](double, const double* yv) { return yv[L.p0()] - rho; }, -1});
            }
            if (std::isfinite(profile.V_max))
                events.push_back(
                    {EvVmax,
                     [&, voltage_of](double, const double* yv) {
                         return voltage_of(yv) - profile.V_max;
                     },
                     +1});
            if (std::isfinite(profile.V_min))
                events.push_back(
                    {EvVmin,
                     [&, voltage_of](double, const double* yv) {
                         return voltage_of(yv) - profile.V_min;
                     },
                     -1});

            std::string abort_reason;
            std::vector<double> yi;
            auto on_step = [&](const DenseStep& ds) -> bool {
                const std::vector<double>& ynew = *ds.y1;
                double th_n = ynew[L.n0() + L.nn - 1] / p.c_s_n_max;
                double th_p = theta_p_surf_of(ynew.data());
                if (th_n <= 0.0 || th_n >= 1.0) {
                    abort_reason = "saturation: negative surface stoichiometry " +
                                   std::to_string(th_n) + " left (0,1)";
                    return false;
                }
                if (th_p <= 0.0 || th_p >= 1.0) {
                    abort_reason = "saturation: positive surface stoichiometry " +
                                   std::to_string(th_p) + " left (0,1)";
                    return false;
                }
                double li = 0.0, cmin = std::numeric_limits<double>::infinity();
                for (int i = 0; i < L.ne; ++i) {
                    li += grid.widths[i] * grid.porosity[i] * ynew[L.e0() + i];
                    cmin = std::min(cmin, ynew[L.e0() + i]);
                }
                if (cmin <= 0.0) {
                    abort_reason = "electrolyte concentration became non-positive";
                    return false;
                }
                tr.min_electrolyte_c = std::min(tr.min_electrolyte_c, cmin);
                tr.electrolyte_li_drift =
                    std::max(tr.electrolyte_li_drift, std::abs(li - li0) / li0);

                if (two_phase && seg_I != 0.0) {
                    // surface-node increment c_{N_r} - c_{N_r-1} as reconstructed
                    ShellState sh;
                    sh.r_p = ynew[L.p0()];
                    sh.c.assign(ynew.begin() + L.p0() + 1, ynew.begin() + L.p0() + L.np);
                    double inc =
                        transform_coefficients(sh, seg_I, sgn, g_val, p, geom).M2 * seg_I;
                    double dchi = 1.0 / p.N_r;
                    double lhs = inc / dchi * p.D_s_p / (p.R_p - sh.r_p);
                    double rhs_flux = seg_I / (geom.a_p * p.A_cell * p.F * p.L_p);
                    tr.max_flux_identity_dev =
                        std::max(tr.max_flux_identity_dev,
                                 std::abs(lhs - rhs_flux) / std::abs(rhs_flux));
                }

                while (sample_idx < samples.size() &&
                       samples[sample_idx] <= ds.t1 * (1.0 + 1e-15)) {
                    double ts = samples[sample_idx];
                    if (ts <= ds.t0) {
                        ++sample_idx;
                        continue;
                    }
                    ds.eval(std::min(ts, ds.t1), yi);
                    scratch.mode = mode;
                    unpack(yi.data(), L, scratch);
                    scratch.core_c = core_c;
                    scratch.g_hold = g_val;
                    scratch.sign_hold = sgn;
                    scratch.branch = state.branch;
                    emit_row(ts, scratch, seg_I);
                    ++sample_idx;
                }
                return true;
            };

            OdeResult r;
            try {
                r = integrate_bdf(sys, t, seg_end, y, oopt, events, on_step);
            } catch (const std::exception& e) {
                throw SimulationError(std::string(e.what()) + " [regime " + to_string(mode) +
                                      ", t = " + std::to_string(t) + " s]");
            }
            tr.total_steps += r.steps;
            tr.rhs_evals += r.rhs_evals;
            unpack(y.data(), L, state);
            t = r.t;

            if (r.status == OdeStatus::Aborted) {
                throw SimulationError(abort_reason + " [regime " + to_string(mode) +
                                      ", t = " + std::to_string(t) + " s]");
            } else if (r.status == OdeStatus::EventFired) {
                if (r.event_id == EvRegime) {
                    double trig = p.transition_trigger == TransitionTrigger::Surface
                                      ? theta_p_surface(state, seg_I, p, geom)
                                      : theta_p_bulk(state, seg_I, p, geom);
                    double rp2 = state.mode == PhaseMode::TwoPhase ? state.shell.r_p : 0.0;
                    auto ev = detect_transition(state.mode, trig, rp2, sgn, p);
                    if (!ev)
                        throw SimulationError("regime event fired without transition at t = " +
                                              std::to_string(t));
                    apply_transition(state, *ev, t, seg_I, p, geom, tr);
                    continue;
                }
                tr.termination_reason = r.event_id == EvVmax ? "V_max cutoff" : "V_min cutoff";
                done = true;
                segment_done = true;
            } else {
                segment_done = true;
            }
        }

        seg_q0 += std::abs(seg_I) * (t - seg_t0) / 3600.0;
        seg_t0 = t;
    }

    tr.t_end = t;
    if (opt.sample_times.empty() && (tr.t.empty() || tr.t.back() < t - 1e-9)) {
        // seg bookkeeping already advanced; emit with zero elapsed time
        emit_row(t, state, seg_I);
    }
    return tr;
}

void write_trace_csv(const SimulationTrace& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimulationError("cannot write trace file '" + path + "'");
    out << "t_s,I_A,V_V,soc_n,soc_p,rp_over_Rp,theta_p_surf,theta_n_surf,U_p_V,U_n_V,eta_p_V,"
           "eta_n_V,dphi_e_V,ohmic_V\n";
    out.precision(12);
    for (size_t i = 0; i < tr.size(); ++i) {
        out << tr.t[i] << ',' << tr.I[i] << ',' << tr.V[i] << ',' << tr.soc_n[i] << ','
            << tr.soc_p[i] << ',' << tr.rp_over_Rp[i] << ',' << tr.theta_p_surf[i] << ','
            << tr.theta_n_surf[i] << ',' << tr.U_p[i] << ',' << tr.U_n[i] << ',' << tr.eta_p[i]
            << ',' << tr.eta_n[i] << ',' << tr.dphi_e[i] << ',' << tr.ohmic[i] << '\n';
    }
}

}  // namespace espm
