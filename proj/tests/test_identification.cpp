#include "doctest.h"

#include <cmath>
#include <random>

#include "espm/diagnostics.hpp"
#include "espm/identification.hpp"
#include "espm/params.hpp"

using namespace espm;

static CellParameters cfg() {
    return load_config(std::string(ESPM_SOURCE_DIR) + "/data/cell.json");
}

TEST_CASE("Coulomb-counting SOC") {
    Dataset d;
    d.Q_nom = 49.0;
    SUBCASE("C/12 discharge empties the cell in 12 h") {
        d.soc0 = 1.0;
        for (int k = 0; k <= 120; ++k) {
            d.t.push_back(k * 360.0);
            d.I.push_back(49.0 / 12.0);
            d.V.push_back(3.3);
        }
        auto s = soc_exp(d);
        CHECK(s.front() == doctest::Approx(1.0));
        CHECK(s.back() == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("zero current holds SOC") {
        d.soc0 = 0.7;
        for (int k = 0; k <= 10; ++k) {
            d.t.push_back(k * 100.0);
            d.I.push_back(0.0);
            d.V.push_back(3.3);
        }
        for (double v : soc_exp(d)) CHECK(v == doctest::Approx(0.7));
    }
    SUBCASE("6 h charge from empty reaches half") {
        d.soc0 = 0.0;
        for (int k = 0; k <= 60; ++k) {
            d.t.push_back(k * 360.0);
            d.I.push_back(-49.0 / 12.0);
            d.V.push_back(3.4);
        }
        CHECK(soc_exp(d).back() == doctest::Approx(0.5).epsilon(1e-9));
    }
}

TEST_CASE("RMS cost terms") {
    SUBCASE("identical series give zero") {
        std::vector<double> v(10, 3.3), s(10, 0.5);
        CostTerms ct = rms_terms(v, v, s, s, s);
        CHECK(ct.v_rms_rel == 0.0);
        CHECK(ct.soc_n_rms == 0.0);
        CHECK(ct.soc_p_rms == 0.0);
    }
    SUBCASE("constant 10 mV offset on a 3.3 V plateau") {
        std::vector<double> ve(100, 3.3), vs(100, 3.31), s(100, 0.5);
        CostTerms ct = rms_terms(ve, vs, s, s, s);
        CHECK(ct.v_rms_rel == doctest::Approx(0.01 / 3.3).epsilon(1e-9));
        CHECK(ct.weighted(1, 1, 1) == doctest::Approx(0.00303).epsilon(1e-2));
    }
}

TEST_CASE("capacity equation and static constraints at the identified values") {
    CellParameters p = cfg();
    double Qn = capacity_Ah(Electrode::Negative, p);
    double Qp = capacity_Ah(Electrode::Positive, p);
    CHECK(Qn == doctest::Approx(49.0).epsilon(2e-3));
    CHECK(Qp == doctest::Approx(49.0).epsilon(2e-3));
    CHECK(Qn >= 44.1);
    CHECK(Qn <= 53.9);
    // (b) and (c)
    CHECK(p.theta_p_beta <= p.theta_p_0);
    CHECK(p.theta_p_alpha >= p.theta_p_100);
}

TEST_CASE("dataset validation") {
    Dataset d;
    d.Q_nom = 49.0;
    d.soc0 = 1.0;
    d.t = {0.0, 1.0, 2.0};
    d.I = {1.0, -1.0, 1.0};
    d.V = {3.3, 3.3, 3.3};
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("sign"), DatasetError);
    d.I = {1.0, 1.0, 1.0};
    d.t = {0.0, 2.0, 1.0};
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("increasing"), DatasetError);
}

namespace {

Dataset make_twin_dataset(const CellParameters& p, Direction dir, double hours, double noise_mv,
                          unsigned seed) {
    DerivedGeometry g = derive_geometry(p);
    double I = p.Q_nom / 12.0 * (dir == Direction::Discharge ? 1.0 : -1.0);
    double soc0 = dir == Direction::Discharge ? 1.0 : 0.0;
    Dataset d;
    d.direction = dir;
    d.soc0 = soc0;
    d.Q_nom = p.Q_nom;
    for (double t = 0.0; t <= hours * 3600.0 + 1e-9; t += 60.0) d.t.push_back(t);
    CellState s0 = initial_state(soc0, dir, p, g);
    SimOptions so = SimOptions::from_params(p);
    so.sample_times = d.t;
    CurrentProfile prof;
    prof.segments.push_back({hours * 3600.0, I});
    SimulationTrace tr = simulate(prof, s0, p, so);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_mv * 1e-3);
    for (size_t i = 0; i < d.t.size(); ++i) {
        d.I.push_back(I);
        d.V.push_back(tr.V[i] + noise(rng));
    }
    return d;
}

}  // namespace

TEST_CASE("cost vanishes at the generating parameters") {
    CellParameters p = cfg();
    p.N_r = 30;  // match the twin fixture grid
    IdentificationProblem prob;
    prob.base = p;
    prob.datasets.push_back(make_twin_dataset(p, Direction::Discharge, 2.0, 0.0, 1));
    for (int i = 0; i < kThetaDim; ++i) {
        prob.bounds.lo[i] = 1.0;
        prob.bounds.hi[i] = 2.0;
    }
    CostBreakdown cb = cost(extract_theta(p), prob);
    CHECK(!cb.sim_failed);
    CHECK(cb.J == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(cb.J < 1e-12);
}

TEST_CASE("cost is insensitive to resampling density") {
    CellParameters p = cfg();
    p.N_r = 30;
    IdentificationProblem prob;
    prob.base = p;
    Dataset d = make_twin_dataset(p, Direction::Discharge, 2.0, 2.0, 3);
    prob.datasets.push_back(d);

    // perturb one parameter so the residual is non-trivial
    ThetaVector th = extract_theta(p);
    th[5] += 0.01;  // theta_n_100
    CostBreakdown c1 = cost(th, prob);

    // interpolate the dataset to double density
    Dataset dd = d;
    dd.t.clear();
    dd.I.clear();
    dd.V.clear();
    for (size_t i = 0; i + 1 < d.t.size(); ++i) {
        dd.t.push_back(d.t[i]);
        dd.I.push_back(d.I[i]);
        dd.V.push_back(d.V[i]);
        dd.t.push_back(0.5 * (d.t[i] + d.t[i + 1]));
        dd.I.push_back(d.I[i]);
        dd.V.push_back(0.5 * (d.V[i] + d.V[i + 1]));
    }
    dd.t.push_back(d.t.back());
    dd.I.push_back(d.I.back());
    dd.V.push_back(d.V.back());
    IdentificationProblem prob2 = prob;
    prob2.datasets = {dd};
    CostBreakdown c2 = cost(th, prob2);
    CHECK(std::abs(c1.J - c2.J) / c1.J < 0.01);
}

TEST_CASE("simulation failure maps to the finite penalty value") {
    CellParameters p = cfg();
    p.N_r = 30;
    IdentificationProblem prob;
    prob.base = p;
    prob.datasets.push_back(make_twin_dataset(p, Direction::Discharge, 2.0, 0.0, 1));
    ThetaVector th = extract_theta(p);
    th[7] = 0.14;  // theta_p_100 pushed above theta_p_alpha... still below; break harder
    th[9] = 0.12;  // theta_p_alpha < theta_p_100 -> invalid parameters
    CostBreakdown cb = cost(th, prob);
    CHECK(cb.sim_failed);
    CHECK(cb.J == doctest::Approx(1e3));
    CHECK(cb.constraints.penalty > 0.0);  // (c) violated
}

TEST_CASE("degenerate PSO returns its single evaluated candidate") {
    CellParameters p = cfg();
    p.N_r = 30;
    IdentificationProblem prob;
    prob.base = p;
    prob.datasets.push_back(make_twin_dataset(p, Direction::Discharge, 0.5, 2.0, 5));
    ThetaVector truth = extract_theta(p);
    for (int i = 0; i < kThetaDim; ++i) {
        prob.bounds.lo[i] = truth[i] * 0.999;
        prob.bounds.hi[i] = truth[i] * 1.001;
    }
    prob.pso.swarm = 1;
    prob.pso.iterations = 0;
    prob.pso.seed = 99;
    IdentificationResult r = identify(prob);
    CHECK(r.history.size() == 1);
    CHECK(r.evaluations == 1);
    CostBreakdown again = cost(r.theta, prob);
    CHECK(again.penalized() == doctest::Approx(r.best.penalized()).epsilon(1e-14));
}

TEST_CASE("fixed seed reproduces the identification bit-for-bit") {
    CellParameters p = cfg();
    p.N_r = 30;
    IdentificationProblem prob;
    prob.base = p;
    prob.datasets.push_back(make_twin_dataset(p, Direction::Discharge, 0.5, 2.0, 5));
    ThetaVector truth = extract_theta(p);
    for (int i = 0; i < kThetaDim; ++i) {
        prob.bounds.lo[i] = truth[i] * 0.9;
        prob.bounds.hi[i] = truth[i] * 1.1;
    }
    prob.pso.swarm = 4;
    prob.pso.iterations = 3;
    prob.pso.seed = 2024;
    prob.pso.threads = 2;
    IdentificationResult a = identify(prob);
    IdentificationResult b = identify(prob);
    for (int i = 0; i < kThetaDim; ++i) CHECK(a.theta[i] == b.theta[i]);
    CHECK(a.best.penalized() == b.best.penalized());
}
