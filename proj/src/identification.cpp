#include "espm/identification.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "espm/csv.hpp"
#include "json.hpp"

namespace espm {

using nlohmann::json;

const std::array<const char*, kThetaDim> kThetaNames = {
    "R_n", "R_p", "A_cell", "D_s_n", "D_s_p", "theta_n_100", "theta_n_0",
    "theta_p_100", "theta_p_0", "theta_p_alpha", "theta_p_beta", "R_l"};

const std::array<const char*, kThetaDim> kThetaUnits = {
    "m", "m", "m^2", "m^2/s", "m^2/s", "-", "-", "-", "-", "-", "-", "Ohm"};

const std::array<bool, kThetaDim> kThetaLogScale = {true,  true,  false, true,
                                                    true,  false, false, false,
                                                    false, false, false, false};

void Dataset::validate() const {
    if (t.size() < 2 || t.size() != I.size() || t.size() != V.size())
        throw DatasetError("dataset needs >= 2 aligned samples of t, I, V");
    int sign = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (i > 0 && !(t[i] > t[i - 1]))
            throw DatasetError("dataset time not strictly increasing at row " +
                               std::to_string(i + 2));
        int s = I[i] > 0 ? 1 : (I[i] < 0 ? -1 : 0);
        if (s != 0) {
            if (sign != 0 && s != sign)
                throw DatasetError("dataset current changes sign at row " +
                                   std::to_string(i + 2) + "; single-sign current required");
            sign = s;
        }
    }
    if (Q_nom <= 0) throw DatasetError("dataset Q_nom must be positive");
    if (soc0 < 0 || soc0 > 1) throw DatasetError("dataset soc0 must lie in [0,1]");
}

Dataset load_dataset(const std::string& path, Direction dir, double soc0, double Q_nom) {
    CsvTable tab;
    try {
        tab = read_csv(path);
    } catch (const CsvError& e) {
        throw DatasetError(e.what());
    }
    int ct = tab.column("t_s"), ci = tab.column("I_A"), cv = tab.column("V_V");
    if (ct < 0 || ci < 0 || cv < 0)
        throw DatasetError("'" + path + "': header must contain t_s, I_A, V_V");
    Dataset d;
    d.direction = dir;
    d.soc0 = soc0;
    d.Q_nom = Q_nom;
    for (const auto& r : tab.rows) {
        d.t.push_back(r[ct]);
        d.I.push_back(r[ci]);
        d.V.push_back(r[cv]);
    }
    d.validate();
    return d;
}

std::vector<double> soc_exp(const Dataset& d) {
    std::vector<double> soc(d.t.size());
    double integral = 0.0;  // A s
    soc[0] = d.soc0;
    for (size_t i = 1; i < d.t.size(); ++i) {
        integral += 0.5 * (d.I[i] + d.I[i - 1]) * (d.t[i] - d.t[i - 1]);
        soc[i] = d.soc0 - integral / (3600.0 * d.Q_nom);
    }
    return soc;
}

CellParameters apply_theta(const CellParameters& base, const ThetaVector& th) {
    CellParameters p = base;
    p.R_n = th[0];
    p.R_p = th[1];
    p.A_cell = th[2];
    p.D_s_n = th[3];
    p.D_s_p = th[4];
    p.theta_n_100 = th[5];
    p.theta_n_0 = th[6];
    p.theta_p_100 = th[7];
    p.theta_p_0 = th[8];
    p.theta_p_alpha = th[9];
    p.theta_p_beta = th[10];
    p.R_l = th[11];
    return p;
}

ThetaVector extract_theta(const CellParameters& p) {
    return {p.R_n, p.R_p, p.A_cell, p.D_s_n, p.D_s_p, p.theta_n_100, p.theta_n_0,
            p.theta_p_100, p.theta_p_0, p.theta_p_alpha, p.theta_p_beta, p.R_l};
}

void ThetaBounds::validate() const {
    for (int i = 0; i < kThetaDim; ++i) {
        if (!(lo[i] < hi[i]))
            throw DatasetError(std::string("bounds not ordered for ") + kThetaNames[i]);
        if (kThetaLogScale[i] && lo[i] <= 0)
            throw DatasetError(std::string("log-scale bound must be positive for ") +
                               kThetaNames[i]);
    }
}

CostTerms rms_terms(const std::vector<double>& V_exp, const std::vector<double>& V_sim,
                    const std::vector<double>& soc_ref, const std::vector<double>& soc_n_sim,
                    const std::vector<double>& soc_p_sim) {
    const size_t N = V_exp.size();
    double sv = 0.0, sn = 0.0, sp = 0.0;
    for (size_t i = 0; i < N; ++i) {
        double rv = (V_exp[i] - V_sim[i]) / V_exp[i];
        sv += rv * rv;
        double rn = soc_ref[i] - soc_n_sim[i];
        sn += rn * rn;
        double rp = soc_ref[i] - soc_p_sim[i];
        sp += rp * rp;
    }
    CostTerms ct;
    ct.v_rms_rel = std::sqrt(sv / N);
    ct.soc_n_rms = std::sqrt(sn / N);
    ct.soc_p_rms = std::sqrt(sp / N);
    return ct;
}

double capacity_Ah(Electrode e, const CellParameters& p) {
    double nu = e == Electrode::Negative ? p.nu_n : p.nu_p;
    double L = e == Electrode::Negative ? p.L_n : p.L_p;
    double cmax = e == Electrode::Negative ? p.c_s_n_max : p.c_s_p_max;
    double win = e == Electrode::Negative ? std::abs(p.theta_n_100 - p.theta_n_0)
                                          : std::abs(p.theta_p_100 - p.theta_p_0);
    return nu * p.F * L * p.A_cell * cmax * win / 3600.0;
}

bool ConstraintReport::satisfied(double rho_frac, double q_lo, double q_hi) const {
    return slack_b >= 0 && slack_c >= 0 && rp_nonneg && rp_end_max_frac <= rho_frac &&
           Q_n >= q_lo && Q_n <= q_hi && Q_p >= q_lo && Q_p <= q_hi;
}

namespace {

CurrentProfile profile_from_dataset(const Dataset& d) {
    CurrentProfile prof;
    double seg_I = d.I[0];
    double seg_start = d.t[0];
    for (size_t i = 1; i < d.t.size(); ++i) {
        if (d.I[i] != seg_I) {
            prof.segments.push_back({d.t[i] - seg_start, seg_I});
            seg_I = d.I[i];
            seg_start = d.t[i];
        }
    }
    if (d.t.back() > seg_start) prof.segments.push_back({d.t.back() - seg_start, seg_I});
    return prof;
}

}  // namespace

CostBreakdown cost(const ThetaVector& theta, const IdentificationProblem& prob) {
    CostBreakdown out;
    CellParameters p = apply_theta(prob.base, theta);

    // static constraint slacks are reported even when the simulation fails
    out.constraints.slack_b = p.theta_p_0 - p.theta_p_beta;
    out.constraints.slack_c = p.theta_p_alpha - p.theta_p_100;
    out.constraints.Q_n = capacity_Ah(Electrode::Negative, p);
    out.constraints.Q_p = capacity_Ah(Electrode::Positive, p);

    double J = 0.0;
    bool failed = false;
    std::string failure;
    double rp_end_max = 0.0;
    bool rp_nonneg = true;

    try {
        p.validate();
        DerivedGeometry geom = derive_geometry(p);
        for (const auto& d : prob.datasets) {
            CellState s0 = initial_state(d.soc0, d.direction, p, geom);
            SimOptions so = SimOptions::from_params(p);
            so.sample_times = d.t;
            SimulationTrace tr = simulate(profile_from_dataset(d), s0, p, so);
            if (tr.size() != d.t.size())
                throw SimulationError("simulation ended before the dataset span");
            std::vector<double> se = soc_exp(d);
            CostTerms terms = rms_terms(d.V, tr.V, se, tr.soc_n, tr.soc_p);
            out.per_dataset.push_back(terms);
            J += terms.weighted(prob.w1, prob.w2, prob.w3);
            for (double r : tr.rp_over_Rp)
                if (r < 0) rp_nonneg = false;
            rp_end_max = std::max(rp_end_max, tr.rp_over_Rp.back());
        }
    } catch (const std::exception& e) {
        failed = true;
        failure = e.what();
    }

    out.sim_failed = failed;
    out.failure = failure;
    out.J = failed ? 1e3 : J;
    out.constraints.rp_nonneg = rp_nonneg;
    out.constraints.rp_end_max_frac = rp_end_max;

    // exterior quadratic penalties on normalized violations
    double pen = 0.0;
    auto add = [&](double violation) {
        if (violation > 0) pen += prob.penalty_weight * violation * violation;
    };
    add(-out.constraints.slack_b);
    add(-out.constraints.slack_c);
    if (!failed) add(out.constraints.rp_end_max_frac - p.rho_frac);
    if (!rp_nonneg) pen += prob.penalty_weight;
    double qlo = prob.q_low(), qhi = prob.q_high();
    add((qlo - out.constraints.Q_n) / prob.base.Q_nom);
    add((out.constraints.Q_n - qhi) / prob.base.Q_nom);
    add((qlo - out.constraints.Q_p) / prob.base.Q_nom);
    add((out.constraints.Q_p - qhi) / prob.base.Q_nom);
    out.constraints.penalty = pen;
    return out;
}

namespace {

double to_search_space(double x, int i) { return kThetaLogScale[i] ? std::log10(x) : x; }
double from_search_space(double z, int i) { return kThetaLogScale[i] ? std::pow(10.0, z) : z; }

}  // namespace

IdentificationResult identify(const IdentificationProblem& prob) {
    prob.bounds.validate();
    for (const auto& d : prob.datasets) d.validate();
    if (prob.pso.swarm < 1) throw DatasetError("swarm size must be >= 1");

    auto t_start = std::chrono::steady_clock::now();

    const int n = prob.pso.swarm;
    const int dim = kThetaDim;
    ThetaVector zlo, zhi;
    for (int i = 0; i < dim; ++i) {
        zlo[i] = to_search_space(prob.bounds.lo[i], i);
        zhi[i] = to_search_space(prob.bounds.hi[i], i);
    }

    std::mt19937_64 rng(prob.pso.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<ThetaVector> pos(n), vel(n), pbest(n);
    std::vector<double> pbest_val(n, std::numeric_limits<double>::infinity());
    std::vector<CostBreakdown> pbest_bd(n);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < dim; ++i) {
            pos[k][i] = zlo[i] + unit(rng) * (zhi[i] - zlo[i]);
            vel[k][i] = 0.0;
        }
    }

    int threads = prob.pso.threads > 0 ? prob.pso.threads
                                       : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);

    std::vector<CostBreakdown> results(n);
    long evals = 0;
    auto evaluate_all = [&]() {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                int k = next.fetch_add(1);
                if (k >= n) break;
                ThetaVector th;
                for (int i = 0; i < dim; ++i) th[i] = from_search_space(pos[k][i], i);
                results[k] = cost(th, prob);
            }
        };
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        evals += n;
    };

    int gbest = 0;
    auto update_bests = [&]() {
        for (int k = 0; k < n; ++k) {
            double v = results[k].penalized();
            if (v < pbest_val[k]) {
                pbest_val[k] = v;
                pbest[k] = pos[k];
                pbest_bd[k] = results[k];
            }
        }
        for (int k = 0; k < n; ++k)
            if (pbest_val[k] < pbest_val[gbest]) gbest = k;
    };

    IdentificationResult res;
    evaluate_all();
    update_bests();
    res.history.push_back(pbest_val[gbest]);

    const double w_inertia = 0.729, c_cog = 1.49, c_soc = 1.49;
    for (int it = 0; it < prob.pso.iterations; ++it) {
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < dim; ++i) {
                double r1 = unit(rng), r2 = unit(rng);
                vel[k][i] = w_inertia * vel[k][i] + c_cog * r1 * (pbest[k][i] - pos[k][i]) +
                            c_soc * r2 * (pbest[gbest][i] - pos[k][i]);
                pos[k][i] += vel[k][i];
                if (pos[k][i] < zlo[i]) {
                    pos[k][i] = zlo[i];
                    vel[k][i] = 0.0;  // clamp with velocity zeroing
                } else if (pos[k][i] > zhi[i]) {
                    pos[k][i] = zhi[i];
                    vel[k][i] = 0.0;
                }
            }
        }
        evaluate_all();
        update_bests();
        res.history.push_back(pbest_val[gbest]);
    }

    for (int i = 0; i < dim; ++i) res.theta[i] = from_search_space(pbest[gbest][i], i);
    res.best = pbest_bd[gbest];
    res.feasible = !res.best.sim_failed &&
                   res.best.constraints.satisfied(prob.base.rho_frac, prob.q_low(), prob.q_high());
    res.evaluations = evals;
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

std::string result_to_json(const IdentificationResult& r, const IdentificationProblem& prob) {
    json j;
    json th;
    for (int i = 0; i < kThetaDim; ++i) th[kThetaNames[i]] = r.theta[i];
    j["theta"] = th;
    j["J"] = r.best.J;
    j["penalized"] = r.best.penalized();
    j["feasible"] = r.feasible;
    j["evaluations"] = r.evaluations;
    j["wall_seconds"] = r.wall_seconds;
    json per;
    for (size_t k = 0; k < r.best.per_dataset.size(); ++k) {
        const auto& ct = r.best.per_dataset[k];
        per.push_back({{"v_rms_rel", ct.v_rms_rel},
                       {"soc_n_rms", ct.soc_n_rms},
                       {"soc_p_rms", ct.soc_p_rms}});
    }
    j["per_dataset"] = per;
    const auto& c = r.best.constraints;
    j["constraints"] = {{"slack_b", c.slack_b},   {"slack_c", c.slack_c},
                        {"Q_n_Ah", c.Q_n},        {"Q_p_Ah", c.Q_p},
                        {"Q_low_Ah", prob.q_low()}, {"Q_high_Ah", prob.q_high()},
                        {"rp_nonneg", c.rp_nonneg}, {"rp_end_max_frac", c.rp_end_max_frac},
                        {"penalty", c.penalty}};
    j["history"] = r.history;
    j["settings"] = {{"swarm", prob.pso.swarm},
                     {"iterations", prob.pso.iterations},
                     {"seed", prob.pso.seed},
                     {"w1", prob.w1},
                     {"w2", prob.w2},
                     {"w3", prob.w3},
                     {"penalty_weight", prob.penalty_weight}};
    return j.dump(2);
}

void write_bounds_table_csv(const IdentificationResult& r, const IdentificationProblem& prob,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write '" + path + "'");
    out << "symbol,lower_bound,upper_bound,identified,unit\n";
    out.precision(12);
    for (int i = 0; i < kThetaDim; ++i)
        out << kThetaNames[i] << ',' << prob.bounds.lo[i] << ',' << prob.bounds.hi[i] << ','
            << r.theta[i] << ',' << kThetaUnits[i] << '\n';
    out << "J,,," << r.best.J << ",-\n";
}

void load_identification_settings(const std::string& path, IdentificationProblem& prob) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open settings file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DatasetError(std::string("settings parse failure: ") + e.what());
    }
    if (!j.contains("bounds")) throw DatasetError("settings file missing 'bounds'");
    const json& b = j.at("bounds");
    for (int i = 0; i < kThetaDim; ++i) {
        if (!b.contains(kThetaNames[i]))
            throw DatasetError(std::string("bounds missing ") + kThetaNames[i]);
        const json& e = b.at(kThetaNames[i]);
        if (!e.is_array() || e.size() != 2)
            throw DatasetError(std::string("bounds for ") + kThetaNames[i] +
                               " must be [lower, upper]");
        prob.bounds.lo[i] = e[0].get<double>();
        prob.bounds.hi[i] = e[1].get<double>();
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        prob.w1 = w.at(0).get<double>();
        prob.w2 = w.at(1).get<double>();
        prob.w3 = w.at(2).get<double>();
        if (prob.w1 < 0 || prob.w2 < 0 || prob.w3 < 0)
            throw DatasetError("weights must be non-negative");
    }
    if (j.contains("penalty_weight")) prob.penalty_weight = j.at("penalty_weight").get<double>();
    if (j.contains("Q_low")) prob.Q_low = j.at("Q_low").get<double>();
    if (j.contains("Q_high")) prob.Q_high = j.at("Q_high").get<double>();
    if (j.contains("swarm")) prob.pso.swarm = j.at("swarm").get<int>();
    if (j.contains("iterations")) prob.pso.iterations = j.at("iterations").get<int>();
    if (j.contains("seed")) prob.pso.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) prob.pso.threads = j.at("threads").get<int>();
    prob.bounds.validate();
}

}  // namespace espm
