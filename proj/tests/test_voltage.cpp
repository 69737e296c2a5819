#include "doctest.h"

#include <cmath>

#include "espm/params.hpp"
#include "espm/voltage.hpp"

using namespace espm;

static CellParameters cfg() {
    return load_config(std::string(ESPM_SOURCE_DIR) + "/data/cell.json");
}

TEST_CASE("positive OCP branches at theta = 0.5") {
    // hand evaluation: all discharge corrections < 1e-3; charge second term
    // 10^-2.123 * exp(16.56 * 0.5^24.08) = 0.0075
    CHECK(ocp_positive(0.5, OcpBranch::Discharge) == doctest::Approx(3.382).epsilon(3e-4));
    CHECK(ocp_positive(0.5, OcpBranch::Charge) == doctest::Approx(3.4495).epsilon(3e-4));
    double hyst = ocp_positive(0.5, OcpBranch::Charge) - ocp_positive(0.5, OcpBranch::Discharge);
    CHECK(hyst == doctest::Approx(0.0675).epsilon(0.03));
    CHECK_THROWS_AS(ocp_positive(0.0, OcpBranch::Discharge), std::domain_error);
    CHECK_THROWS_AS(ocp_positive(1.0, OcpBranch::Charge), std::domain_error);
}

TEST_CASE("plateau flatness of the discharge branch") {
    CellParameters p = cfg();
    double lo = p.theta_p_alpha + 0.05, hi = p.theta_p_beta - 0.05;
    double umin = 1e9, umax = -1e9;
    for (double th = lo; th <= hi; th += 1e-3) {
        double u = ocp_positive(th, OcpBranch::Discharge);
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    CHECK(umax - umin < 0.010);
}

TEST_CASE("charge branch dominates the discharge branch on [0.1, 0.9]") {
    for (double th = 0.1; th <= 0.9 + 1e-12; th += 1e-3)
        CHECK(ocp_positive(th, OcpBranch::Charge) >= ocp_positive(th, OcpBranch::Discharge));
}

TEST_CASE("exchange current") {
    CellParameters p = cfg();
    p.k_p = 1e-11;
    p.c_s_p_max = 22800.0;
    p.F = 96485.0;
    SUBCASE("hand value") {
        double i0 = exchange_current(Electrode::Positive, 1050.0, 11400.0, p);
        CHECK(i0 == doctest::Approx(0.35644).epsilon(1e-4));
    }
    SUBCASE("maximized at half filling") {
        double mid = exchange_current(Electrode::Positive, 1050.0, p.c_s_p_max / 2, p);
        CHECK(mid > exchange_current(Electrode::Positive, 1050.0, 0.4 * p.c_s_p_max, p));
        CHECK(mid > exchange_current(Electrode::Positive, 1050.0, 0.6 * p.c_s_p_max, p));
    }
    SUBCASE("quadrupling c_avg doubles i0") {
        double a = exchange_current(Electrode::Positive, 1000.0, 11400.0, p);
        double b = exchange_current(Electrode::Positive, 4000.0, 11400.0, p);
        CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
    }
    SUBCASE("zero at the filling limits") {
        CHECK(exchange_current(Electrode::Positive, 1000.0, 0.0, p) == 0.0);
        CHECK(exchange_current(Electrode::Positive, 1000.0, p.c_s_p_max, p) == 0.0);
    }
}

TEST_CASE("overpotential") {
    CellParameters p = cfg();
    DerivedGeometry g = derive_geometry(p);
    SUBCASE("zero current gives zero") {
        CHECK(overpotential(Electrode::Negative, 0.0, 0.3, p, g) == doctest::Approx(0.0));
    }
    SUBCASE("discharge signs reduce the terminal voltage") {
        double I = 4.083;
        CHECK(overpotential(Electrode::Negative, I, 0.3, p, g) > 0.0);
        CHECK(overpotential(Electrode::Positive, I, 0.3, p, g) < 0.0);
    }
    SUBCASE("small-signal linearity within 1%") {
        double i0 = 0.3;
        double denom = 2.0 * p.A_cell * g.a_n * p.L_n * i0;
        double I = 0.05 * denom;  // asinh argument 0.05
        double eta = overpotential(Electrode::Negative, I, i0, p, g);
        double lin = p.R_gas * p.T / (0.5 * p.F) * I / denom;
        CHECK(eta == doctest::Approx(lin).epsilon(0.01));
    }
    SUBCASE("vanishing exchange current is a singularity") {
        CHECK_THROWS_AS(overpotential(Electrode::Negative, 1.0, 0.0, p, g), std::domain_error);
    }
}

TEST_CASE("voltage breakdown") {
    CellParameters p = cfg();
    DerivedGeometry g = derive_geometry(p);
    SUBCASE("components sum to the terminal voltage exactly") {
        VoltageBreakdown b = assemble_voltage(0.5, 0.5, 4.083, 1000.0, -0.005, 3.6e-4,
                                              OcpBranch::Discharge, p, g);
        double sum = b.U_p + b.eta_p - b.U_n - b.eta_n + b.delta_phi_e - b.ohmic;
        CHECK(std::abs(sum - b.V_cell) <= 1e-14);
    }
    SUBCASE("equilibrium is the OCP difference") {
        VoltageBreakdown b =
            assemble_voltage(0.5, 0.5, 0.0, 1000.0, 0.0, 3.6e-4, OcpBranch::Discharge, p, g);
        CHECK(b.V_cell == doctest::Approx(ocp_positive(0.5, OcpBranch::Discharge) -
                                          ocp_negative(0.5, p)));
    }
    SUBCASE("R_l enters linearly") {
        double I = 4.083;
        VoltageBreakdown b1 = assemble_voltage(0.5, 0.5, I, 1000.0, -0.005, 3.6e-4,
                                               OcpBranch::Discharge, p, g);
        p.R_l += 0.01;
        VoltageBreakdown b2 = assemble_voltage(0.5, 0.5, I, 1000.0, -0.005, 3.6e-4,
                                               OcpBranch::Discharge, p, g);
        CHECK(b1.V_cell - b2.V_cell == doctest::Approx(0.01 * I).epsilon(1e-9));
    }
}

TEST_CASE("state of charge mappings") {
    CellParameters p = cfg();
    CHECK(soc_negative(p.theta_n_100, p) == doctest::Approx(1.0));
    CHECK(soc_positive(p.theta_p_0, p) == doctest::Approx(0.0));
    // midpoint of the (0.010, 0.835) window
    CHECK(soc_negative(0.4225, p) == doctest::Approx(0.5).epsilon(1e-12));
}
