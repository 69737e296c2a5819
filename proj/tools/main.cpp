#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "espm/csv.hpp"
#include "espm/diagnostics.hpp"
#include "espm/identification.hpp"
#include "espm/params.hpp"
#include "espm/plot.hpp"
#include "espm/simulator.hpp"
#include "espm/voltage.hpp"

namespace fs = std::filesystem;
using namespace espm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSimulation = 3;
constexpr int kExitDataset = 4;
constexpr int kExitInfeasible = 5;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

fs::path resolve_outdir(std::string out) {
    if (const char* env = std::getenv("ESPM_OUTPUT_DIR"); env && *env) out = env;
    if (out.empty()) out = ".";
    fs::create_directories(out);
    return out;
}

CellParameters load_with_overrides(const std::string& path,
                                   const std::vector<std::string>& overrides) {
    CellParameters p = load_config(path);
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "' is not key=value");
        apply_override(p, ov.substr(0, eq), ov.substr(eq + 1));
    }
    return p;
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const CellParameters* p, const std::vector<std::string>& overrides,
                    std::uint64_t seed, const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool"] = "espm";
    j["version"] = ESPM_VERSION;
    j["subcommand"] = subcommand;
    if (p) j["config_hash_fnv1a64"] = hex64(fnv1a64(config_to_json(*p)));
    j["overrides"] = overrides;
    j["seed"] = seed;
    j["outputs"] = outputs;
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

double parse_crate(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& crate_str, const std::string& mode, double hours,
                 double soc0_flag, bool soc0_set, double vmin, double vmax, double cap_ah,
                 const std::string& schedule, const std::string& outdir, bool svg) {
    CellParameters p;
    try {
        p = load_with_overrides(config_path, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    Direction dir = mode == "charge" ? Direction::Charge : Direction::Discharge;

    CurrentProfile prof;
    if (!schedule.empty()) {
        try {
            CsvTable tab = read_csv(schedule);
            int cd = tab.column("duration_s"), ci = tab.column("I_A");
            if (cd < 0 || ci < 0)
                throw CsvError("schedule needs columns duration_s, I_A");
            for (const auto& r : tab.rows) prof.segments.push_back({r[cd], r[ci]});
            if (!prof.segments.empty()) dir = prof.segments[0].I >= 0 ? Direction::Discharge
                                                                      : Direction::Charge;
        } catch (const CsvError& e) {
            std::cerr << "schedule error: " << e.what() << "\n";
            return kExitConfig;
        }
    } else {
        double crate;
        try {
            crate = parse_crate(crate_str);
        } catch (const std::exception&) {
            std::cerr << "config error: cannot parse --crate '" << crate_str << "'\n";
            return kExitConfig;
        }
        double h = hours > 0 ? hours : 1.0 / crate;
        double I = crate * p.Q_nom * (dir == Direction::Discharge ? 1.0 : -1.0);
        prof.segments.push_back({h * 3600.0, I});
    }
    if (vmin > 0) prof.V_min = vmin;
    if (vmax > 0) prof.V_max = vmax;
    if (cap_ah > 0) prof.capacity_limit_Ah = cap_ah;

    fs::path out = resolve_outdir(outdir);
    try {
        DerivedGeometry geom = derive_geometry(p);
        double soc0 = soc0_set ? soc0_flag : (dir == Direction::Discharge ? 1.0 : 0.0);
        CellState s0 = initial_state(soc0, dir, p, geom);
        SimulationTrace tr = simulate(prof, s0, p, SimOptions::from_params(p));
        write_trace_csv(tr, (out / "trace.csv").string());
        std::vector<std::string> outputs{"trace.csv", "manifest.json"};
        if (svg) {
            write_svg_plot((out / "voltage_vs_capacity.svg").string(),
                           {{tr.q_Ah, tr.V, "V", "#1f77b4"}}, "Terminal voltage",
                           "capacity (Ah)", "V (V)");
            write_svg_plot((out / "soc_vs_time.svg").string(),
                           {{tr.t, tr.soc_n, "SOC_n", "#1f77b4"},
                            {tr.t, tr.soc_p, "SOC_p", "#d62728"}},
                           "State of charge", "t (s)", "SOC (-)");
            write_svg_plot((out / "boundary_vs_time.svg").string(),
                           {{tr.t, tr.rp_over_Rp, "r_p/R_p", "#2ca02c"}}, "Moving boundary",
                           "t (s)", "r_p/R_p (-)");
            outputs.insert(outputs.end(), {"voltage_vs_capacity.svg", "soc_vs_time.svg",
                                           "boundary_vs_time.svg"});
        }
        write_manifest(out, "simulate", &p, overrides, 0, outputs);
        std::cout << "simulate: " << tr.size() << " samples to t = " << tr.t_end
                  << " s, termination: " << tr.termination_reason << ", "
                  << tr.events.size() << " regime transitions, " << tr.total_steps
                  << " steps, " << tr.rhs_evals << " rhs evals\n";
        return 0;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return kExitSimulation;
    } catch (const std::exception& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return kExitSimulation;
    }
}

int cmd_identify(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& data_discharge, const std::string& data_charge,
                 const std::string& settings_path, double soc0_dis, double soc0_chg,
                 std::int64_t seed_flag, const std::string& outdir, bool svg) {
    IdentificationProblem prob;
    try {
        prob.base = load_with_overrides(config_path, overrides);
        load_identification_settings(settings_path, prob);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        prob.datasets.push_back(
            load_dataset(data_discharge, Direction::Discharge, soc0_dis, prob.base.Q_nom));
        prob.datasets.push_back(
            load_dataset(data_charge, Direction::Charge, soc0_chg, prob.base.Q_nom));
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitDataset;
    }
    if (seed_flag >= 0) prob.pso.seed = static_cast<std::uint64_t>(seed_flag);

    fs::path out = resolve_outdir(outdir);
    IdentificationResult res = identify(prob);
    {
        std::ofstream rj(out / "result.json");
        rj << result_to_json(res, prob) << "\n";
    }
    write_bounds_table_csv(res, prob, (out / "bounds_table.csv").string());
    std::vector<std::string> outputs{"result.json", "bounds_table.csv", "manifest.json"};

    if (svg) {
        CellParameters pb = apply_theta(prob.base, res.theta);
        DerivedGeometry geom = derive_geometry(pb);
        const char* names[2] = {"discharge", "charge"};
        for (size_t k = 0; k < prob.datasets.size() && k < 2; ++k) {
            const Dataset& d = prob.datasets[k];
            try {
                CellState s0 = initial_state(d.soc0, d.direction, pb, geom);
                SimOptions so = SimOptions::from_params(pb);
                so.sample_times = d.t;
                CurrentProfile pf;
                pf.segments.push_back({d.t.back() - d.t.front(), d.I.front()});
                SimulationTrace tr = simulate(pf, s0, pb, so);
                std::string fn = std::string("fit_") + names[k] + ".svg";
                write_svg_plot((out / fn).string(),
                               {{d.t, d.V, "data", "#888888"}, {tr.t, tr.V, "model", "#d62728"}},
                               std::string("Model vs data (") + names[k] + ")", "t (s)", "V (V)");
                outputs.push_back(fn);
            } catch (const std::exception& e) {
                std::cerr << "comparison plot failed (" << names[k] << "): " << e.what() << "\n";
            }
        }
    }
    write_manifest(out, "identify", &prob.base, overrides, prob.pso.seed, outputs);

    std::cout << "identify: J = " << res.best.J << ", penalized = " << res.best.penalized()
              << ", feasible = " << (res.feasible ? "yes" : "no") << ", evaluations = "
              << res.evaluations << ", wall = " << res.wall_seconds << " s\n";
    if (!res.feasible) {
        std::cerr << "infeasible result: constraints violated or simulation failed\n";
        return kExitInfeasible;
    }
    return 0;
}

int cmd_ocp(const std::string& outdir) {
    fs::path out = resolve_outdir(outdir);
    std::vector<std::vector<double>> rows;
    for (int k = 1; k <= 999; ++k) {
        double th = k * 1e-3;
        rows.push_back({th, ocp_positive(th, OcpBranch::Discharge),
                        ocp_positive(th, OcpBranch::Charge)});
    }
    write_csv((out / "ocp.csv").string(), {"theta", "U_discharge_V", "U_charge_V"}, rows);
    write_manifest(out, "ocp", nullptr, {}, 0, {"ocp.csv", "manifest.json"});
    std::cout << "ocp: wrote " << rows.size() << " rows per branch\n";
    return 0;
}

int cmd_check(const std::string& config_path, const std::vector<std::string>& overrides) {
    CellParameters p;
    try {
        p = load_with_overrides(config_path, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        auto checks = run_checks(p);
        bool all = true;
        for (const auto& c : checks) {
            std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "\n";
            all = all && c.pass;
        }
        return all ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "check failure: " << e.what() << "\n";
        return kExitSimulation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"core-shell enhanced single particle model toolkit for LFP cells"};
    app.require_subcommand(1);

    std::string config_path, outdir, crate = "1/12", mode = "discharge", schedule;
    std::vector<std::string> overrides;
    double hours = -1, soc0 = -1, vmin = -1, vmax = -1, cap_ah = -1;
    bool svg = false;

    auto* sim = app.add_subcommand("simulate", "run a constant-current or scheduled simulation");
    sim->add_option("--config", config_path, "cell configuration JSON")->required();
    sim->add_option("--crate", crate, "C-rate, e.g. 1/12 or 0.5");
    sim->add_option("--mode", mode, "discharge or charge")
        ->check(CLI::IsMember({"discharge", "charge"}));
    sim->add_option("--hours", hours, "segment duration in hours (default 1/crate)");
    sim->add_option("--soc0", soc0, "initial SOC (default 1 discharge, 0 charge)");
    sim->add_option("--vmin", vmin, "low voltage cutoff, V");
    sim->add_option("--vmax", vmax, "high voltage cutoff, V");
    sim->add_option("--capacity", cap_ah, "throughput limit, Ah");
    sim->add_option("--schedule", schedule, "explicit schedule CSV (duration_s, I_A)");
    sim->add_option("--out", outdir, "output directory");
    sim->add_flag("--svg", svg, "emit SVG plots");
    sim->add_option("--override", overrides, "config override key=value");

    std::string data_dis, data_chg, settings;
    double soc0_dis = 1.0, soc0_chg = 0.0;
    std::int64_t seed_flag = -1;
    auto* ident = app.add_subcommand("identify", "identify parameters from cycling data");
    ident->add_option("--config", config_path, "cell configuration JSON")->required();
    ident->add_option("--data-discharge", data_dis, "discharge dataset CSV")->required();
    ident->add_option("--data-charge", data_chg, "charge dataset CSV")->required();
    ident->add_option("--settings", settings, "bounds/PSO settings JSON")->required();
    ident->add_option("--soc0-discharge", soc0_dis, "SOC at start of discharge data");
    ident->add_option("--soc0-charge", soc0_chg, "SOC at start of charge data");
    ident->add_option("--seed", seed_flag, "PSO seed (overrides settings)");
    ident->add_option("--out", outdir, "output directory");
    ident->add_flag("--svg", svg, "emit comparison plots");
    ident->add_option("--override", overrides, "config override key=value");

    auto* ocp = app.add_subcommand("ocp", "emit positive OCP branches as CSV");
    ocp->add_option("--out", outdir, "output directory");

    auto* check = app.add_subcommand("check", "run the invariant suite");
    check->add_option("--config", config_path, "cell configuration JSON")->required();
    check->add_option("--override", overrides, "config override key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, overrides, crate, mode, hours, soc0, soc0 >= 0,
                                vmin, vmax, cap_ah, schedule, outdir, svg);
        if (ident->parsed())
            return cmd_identify(config_path, overrides, data_dis, data_chg, settings, soc0_dis,
                                soc0_chg, seed_flag, outdir, svg);
        if (ocp->parsed()) return cmd_ocp(outdir);
        if (check->parsed()) return cmd_check(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
