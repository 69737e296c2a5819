#include "doctest.h"

#include <fstream>

#include "espm/params.hpp"

using namespace espm;

static std::string example_config_path() {
    return std::string(ESPM_SOURCE_DIR) + "/data/cell.json";
}

TEST_CASE("example config loads with the identified phase stoichiometries") {
    CellParameters p = load_config(example_config_path());
    CHECK(p.theta_p_alpha == doctest::Approx(0.198));
    CHECK(p.theta_p_beta == doctest::Approx(0.800));
    CHECK(p.R_p == doctest::Approx(4.3e-8));
    CHECK(p.Q_nom == doctest::Approx(49.0));
}

TEST_CASE("phase ordering violation is reported by name") {
    CellParameters p = load_config(example_config_path());
    std::string txt = config_to_json(p);
    auto pos = txt.find("\"theta_p_alpha\": 0.198");
    REQUIRE(pos != std::string::npos);
    txt.replace(pos, std::string("\"theta_p_alpha\": 0.198").size(), "\"theta_p_alpha\": 0.9");
    try {
        parse_config(txt);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("theta_p_alpha < theta_p_beta") != std::string::npos);
    }
}

TEST_CASE("omitted epsilon_init_frac defaults to 0.001") {
    CellParameters p = load_config(example_config_path());
    CHECK(p.epsilon_init_frac == doctest::Approx(0.001));
    CHECK(p.rho_frac == doctest::Approx(0.001));
}

TEST_CASE("unknown config keys are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"R_n": 1e-6, "definitely_a_typo": 1})"), ConfigError);
}

TEST_CASE("config serialization round-trips field-wise") {
    CellParameters p = load_config(example_config_path());
    CellParameters q = parse_config(config_to_json(p));
    CHECK(q.R_n == p.R_n);
    CHECK(q.R_p == p.R_p);
    CHECK(q.D_s_p == p.D_s_p);
    CHECK(q.theta_p_alpha == p.theta_p_alpha);
    CHECK(q.theta_n_0 == p.theta_n_0);
    CHECK(q.t_plus == p.t_plus);
    CHECK(q.c0_electrolyte == p.c0_electrolyte);
    CHECK(q.N_r == p.N_r);
    CHECK(q.negative_ocp.u0 == p.negative_ocp.u0);
    CHECK(q.negative_ocp.tanh_terms.size() == p.negative_ocp.tanh_terms.size());
}

TEST_CASE("derive_geometry") {
    CellParameters p = load_config(example_config_path());

    SUBCASE("a_p hand value") {
        p.nu_p = 0.5;
        p.R_p = 4.3e-8;
        DerivedGeometry g = derive_geometry(p);
        CHECK(g.a_p == doctest::Approx(3.0 * 0.5 / 4.3e-8).epsilon(1e-12));
        CHECK(g.a_p == doctest::Approx(3.488e7).epsilon(1e-3));
    }
    SUBCASE("porosity arithmetic") {
        p.nu_n = 0.5;
        p.nu_n_filler = 0.05;
        DerivedGeometry g = derive_geometry(p);
        CHECK(g.eps_n == doctest::Approx(0.45));
    }
    SUBCASE("non-physical porosity rejected") {
        p.nu_n = 1.0;
        p.nu_n_filler = 0.1;
        CHECK_THROWS_WITH_AS(derive_geometry(p), doctest::Contains("non-physical porosity"),
                             ConfigError);
    }
    SUBCASE("doubling R halves a exactly") {
        DerivedGeometry g1 = derive_geometry(p);
        p.R_p *= 2.0;
        p.R_n *= 2.0;
        DerivedGeometry g2 = derive_geometry(p);
        CHECK(g2.a_p == g1.a_p / 2.0);
        CHECK(g2.a_n == g1.a_n / 2.0);
    }
}

TEST_CASE("override applies and rejects unknown keys") {
    CellParameters p = load_config(example_config_path());
    apply_override(p, "N_r", "60");
    CHECK(p.N_r == 60);
    apply_override(p, "D_s_p", "1e-18");
    CHECK(p.D_s_p == doctest::Approx(1e-18));
    CHECK_THROWS_AS(apply_override(p, "no_such_key", "1"), ConfigError);
}

TEST_CASE("anode OCP fit evaluates") {
    CellParameters p = load_config(example_config_path());
    CHECK(p.negative_ocp(0.5) == doctest::Approx(0.035).epsilon(1e-6));
    CHECK(p.negative_ocp(0.01) > 0.2);
    CHECK(p.negative_ocp(0.9) < 0.05);
}
