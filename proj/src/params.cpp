#include "espm/params.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace espm {

using nlohmann::json;

double NegativeOcp::operator()(double theta) const {
    double u = u0 + exp_amp * std::exp(-exp_rate * theta);
    for (const auto& t : tanh_terms) u += t.amp * std::tanh((theta - t.center) / t.width);
    return u;
}

double NegativeOcp::slope(double theta) const {
    double s = -exp_rate * exp_amp * std::exp(-exp_rate * theta);
    for (const auto& t : tanh_terms) {
        double z = std::tanh((theta - t.center) / t.width);
        s += t.amp * (1.0 - z * z) / t.width;
    }
    return s;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

void CellParameters::validate() const {
    require(R_n > 0, "R_n must be positive");
    require(R_p > 0, "R_p must be positive");
    require(L_n > 0 && L_s > 0 && L_p > 0, "region thicknesses L_n, L_s, L_p must be positive");
    require(A_cell > 0, "A_cell must be positive");
    require(D_s_n > 0 && D_s_p > 0, "solid diffusivities must be positive");
    require(c_s_n_max > 0 && c_s_p_max > 0, "max solid concentrations must be positive");
    require(nu_n > 0 && nu_p > 0, "active-material fractions must be positive");
    require(nu_n_filler >= 0 && nu_p_filler >= 0, "filler fractions must be non-negative");
    require(eps_s > 0 && eps_s < 1, "eps_s must lie in (0,1)");
    require(t_plus > 0 && t_plus < 1, "t_plus must lie in (0,1)");
    require(c0_electrolyte > 0, "c0_electrolyte must be positive");
    require(k_n > 0 && k_p > 0, "reaction-rate constants must be positive");
    require(R_l >= 0, "R_l must be non-negative");
    require(T > 0 && F > 0 && R_gas > 0, "T, F, R_gas must be positive");
    require(Q_nom > 0, "Q_nom must be positive");

    require(theta_n_0 > 0 && theta_n_0 < theta_n_100 && theta_n_100 < 1,
            "0 < theta_n_0 < theta_n_100 < 1 violated");
    require(theta_p_100 > 0, "theta_p_100 must be positive");
    require(theta_p_100 <= theta_p_alpha, "theta_p_100 <= theta_p_alpha violated");
    require(theta_p_alpha < theta_p_beta, "theta_p_alpha < theta_p_beta violated");
    require(theta_p_beta <= theta_p_0, "theta_p_beta <= theta_p_0 violated");
    require(theta_p_0 < 1, "theta_p_0 < 1 violated");

    require(epsilon_init_frac > 0 && epsilon_init_frac <= 0.01,
            "epsilon_init_frac must lie in (0, 0.01]");
    require(rho_frac > 0 && rho_frac <= 0.01, "rho_frac must lie in (0, 0.01]");

    require(n_n >= 3 && n_s >= 3 && n_p >= 3, "each electrolyte region needs >= 3 volumes");
    require(N_rn >= 5, "N_rn must be >= 5");
    require(N_r >= 5, "N_r must be >= 5");
    require(rtol > 0 && atol_c > 0 && dt_out > 0, "solver settings must be positive");
}

DerivedGeometry derive_geometry(const CellParameters& p) {
    DerivedGeometry g;
    g.a_n = 3.0 * p.nu_n / p.R_n;
    g.a_p = 3.0 * p.nu_p / p.R_p;
    g.eps_n = 1.0 - p.nu_n - p.nu_n_filler;
    g.eps_p = 1.0 - p.nu_p - p.nu_p_filler;
    g.eps_s = p.eps_s;
    if (g.eps_n <= 0) throw ConfigError("non-physical porosity: eps_n <= 0");
    if (g.eps_p <= 0) throw ConfigError("non-physical porosity: eps_p <= 0");
    if (g.eps_n >= 1 || g.eps_p >= 1) throw ConfigError("non-physical porosity: eps_i >= 1");
    return g;
}

namespace {

const std::set<std::string> kRequiredKeys = {
    "R_n", "R_p", "L_n", "L_s", "L_p", "A_cell", "D_s_n", "D_s_p",
    "c_s_n_max", "c_s_p_max", "nu_n", "nu_p", "nu_n_filler", "nu_p_filler",
    "eps_s", "brugg", "t_plus", "c0_electrolyte",
    "theta_n_100", "theta_n_0", "theta_p_100", "theta_p_0",
    "theta_p_alpha", "theta_p_beta", "k_n", "k_p", "R_l", "Q_nom"};

const std::set<std::string> kOptionalKeys = {
    "T", "F", "R_gas", "epsilon_init_frac", "rho_frac", "negative_ocp",
    "transition_trigger", "n_n", "n_s", "n_p", "N_rn", "N_r",
    "rtol", "atol_c", "dt_out"};

double get_num(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

CellParameters parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    for (const auto& item : j.items()) {
        const std::string& k = item.key();
        if (!kRequiredKeys.count(k) && !kOptionalKeys.count(k))
            throw ConfigError("unknown config key '" + k + "'");
    }
    for (const auto& k : kRequiredKeys)
        if (!j.contains(k)) throw ConfigError("missing required config key '" + k + "'");

    CellParameters p;
    p.R_n = get_num(j, "R_n");
    p.R_p = get_num(j, "R_p");
    p.L_n = get_num(j, "L_n");
    p.L_s = get_num(j, "L_s");
    p.L_p = get_num(j, "L_p");
    p.A_cell = get_num(j, "A_cell");
    p.D_s_n = get_num(j, "D_s_n");
    p.D_s_p = get_num(j, "D_s_p");
    p.c_s_n_max = get_num(j, "c_s_n_max");
    p.c_s_p_max = get_num(j, "c_s_p_max");
    p.nu_n = get_num(j, "nu_n");
    p.nu_p = get_num(j, "nu_p");
    p.nu_n_filler = get_num(j, "nu_n_filler");
    p.nu_p_filler = get_num(j, "nu_p_filler");
    p.eps_s = get_num(j, "eps_s");
    p.brugg = get_num(j, "brugg");
    p.t_plus = get_num(j, "t_plus");
    p.c0_electrolyte = get_num(j, "c0_electrolyte");
    p.theta_n_100 = get_num(j, "theta_n_100");
    p.theta_n_0 = get_num(j, "theta_n_0");
    p.theta_p_100 = get_num(j, "theta_p_100");
    p.theta_p_0 = get_num(j, "theta_p_0");
    p.theta_p_alpha = get_num(j, "theta_p_alpha");
    p.theta_p_beta = get_num(j, "theta_p_beta");
    p.k_n = get_num(j, "k_n");
    p.k_p = get_num(j, "k_p");
    p.R_l = get_num(j, "R_l");
    p.Q_nom = get_num(j, "Q_nom");

    if (j.contains("T")) p.T = get_num(j, "T");
    if (j.contains("F")) p.F = get_num(j, "F");
    if (j.contains("R_gas")) p.R_gas = get_num(j, "R_gas");
    if (j.contains("epsilon_init_frac")) p.epsilon_init_frac = get_num(j, "epsilon_init_frac");
    if (j.contains("rho_frac")) p.rho_frac = get_num(j, "rho_frac");
    if (j.contains("n_n")) p.n_n = j.at("n_n").get<int>();
    if (j.contains("n_s")) p.n_s = j.at("n_s").get<int>();
    if (j.contains("n_p")) p.n_p = j.at("n_p").get<int>();
    if (j.contains("N_rn")) p.N_rn = j.at("N_rn").get<int>();
    if (j.contains("N_r")) p.N_r = j.at("N_r").get<int>();
    if (j.contains("rtol")) p.rtol = get_num(j, "rtol");
    if (j.contains("atol_c")) p.atol_c = get_num(j, "atol_c");
    if (j.contains("dt_out")) p.dt_out = get_num(j, "dt_out");

    if (j.contains("transition_trigger")) {
        std::string t = j.at("transition_trigger").get<std::string>();
        if (t == "surface")
            p.transition_trigger = TransitionTrigger::Surface;
        else if (t == "bulk")
            p.transition_trigger = TransitionTrigger::Bulk;
        else
            throw ConfigError("transition_trigger must be 'surface' or 'bulk'");
    }

    if (j.contains("negative_ocp")) {
        const json& o = j.at("negative_ocp");
        for (const auto& item : o.items()) {
            const std::string& k = item.key();
            if (k != "u0" && k != "exp_amp" && k != "exp_rate" && k != "tanh_terms")
                throw ConfigError("unknown negative_ocp key '" + k + "'");
        }
        NegativeOcp ocp;
        ocp.tanh_terms.clear();
        if (o.contains("u0")) ocp.u0 = o.at("u0").get<double>();
        if (o.contains("exp_amp")) ocp.exp_amp = o.at("exp_amp").get<double>();
        if (o.contains("exp_rate")) ocp.exp_rate = o.at("exp_rate").get<double>();
        if (o.contains("tanh_terms")) {
            for (const auto& t : o.at("tanh_terms")) {
                if (!t.is_array() || t.size() != 3)
                    throw ConfigError("negative_ocp tanh_terms entries must be [amp, center, width]");
                ocp.tanh_terms.push_back({t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
            }
        }
        p.negative_ocp = ocp;
    }

    p.validate();
    return p;
}

CellParameters load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const CellParameters& p) {
    json j;
    j["R_n"] = p.R_n;
    j["R_p"] = p.R_p;
    j["L_n"] = p.L_n;
    j["L_s"] = p.L_s;
    j["L_p"] = p.L_p;
    j["A_cell"] = p.A_cell;
    j["D_s_n"] = p.D_s_n;
    j["D_s_p"] = p.D_s_p;
    j["c_s_n_max"] = p.c_s_n_max;
    j["c_s_p_max"] = p.c_s_p_max;
    j["nu_n"] = p.nu_n;
    j["nu_p"] = p.nu_p;
    j["nu_n_filler"] = p.nu_n_filler;
    j["nu_p_filler"] = p.nu_p_filler;
    j["eps_s"] = p.eps_s;
    j["brugg"] = p.brugg;
    j["t_plus"] = p.t_plus;
    j["c0_electrolyte"] = p.c0_electrolyte;
    j["theta_n_100"] = p.theta_n_100;
    j["theta_n_0"] = p.theta_n_0;
    j["theta_p_100"] = p.theta_p_100;
    j["theta_p_0"] = p.theta_p_0;
    j["theta_p_alpha"] = p.theta_p_alpha;
    j["theta_p_beta"] = p.theta_p_beta;
    j["k_n"] = p.k_n;
    j["k_p"] = p.k_p;
    j["R_l"] = p.R_l;
    j["Q_nom"] = p.Q_nom;
    j["T"] = p.T;
    j["F"] = p.F;
    j["R_gas"] = p.R_gas;
    j["epsilon_init_frac"] = p.epsilon_init_frac;
    j["rho_frac"] = p.rho_frac;
    j["transition_trigger"] =
        p.transition_trigger == TransitionTrigger::Surface ? "surface" : "bulk";
    j["n_n"] = p.n_n;
    j["n_s"] = p.n_s;
    j["n_p"] = p.n_p;
    j["N_rn"] = p.N_rn;
    j["N_r"] = p.N_r;
    j["rtol"] = p.rtol;
    j["atol_c"] = p.atol_c;
    j["dt_out"] = p.dt_out;
    json o;
    o["u0"] = p.negative_ocp.u0;
    o["exp_amp"] = p.negative_ocp.exp_amp;
    o["exp_rate"] = p.negative_ocp.exp_rate;
    json terms = json::array();
    for (const auto& t : p.negative_ocp.tanh_terms)
        terms.push_back(json::array({t.amp, t.center, t.width}));
    o["tanh_terms"] = terms;
    j["negative_ocp"] = o;
    return j.dump(2);
}

void save_config(const CellParameters& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file '" + path + "'");
    out << config_to_json(p) << "\n";
}

void apply_override(CellParameters& p, const std::string& key, const std::string& value) {
    json j = json::parse(config_to_json(p));
    if (!j.contains(key)) throw ConfigError("unknown override key '" + key + "'");
    if (j.at(key).is_number_integer())
        j[key] = std::stoi(value);
    else if (j.at(key).is_number())
        j[key] = std::stod(value);
    else if (j.at(key).is_string())
        j[key] = value;
    else
        throw ConfigError("override key '" + key + "' is not a scalar");
    p = parse_config(j.dump());
}

}  // namespace espm
