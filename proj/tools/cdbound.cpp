// cdbound.cpp — batch CLI for bound evaluations, sweeps, dynamics
// verification, and protocol optimization.
//
// Precedence: built-in defaults < config file (--config) < command-line flags.
// Exit codes: 0 success, 2 bound/assertion violation, 3 solver
// non-convergence or numeric failure, 4 config error.

#include <CLI11.hpp>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "cdbound/experiment.hpp"
#include "cdbound/version.hpp"

namespace {

using nlohmann::json;

struct Overrides {
    std::optional<std::string> family, coupling, bath_kind, out, beta, sweep_variable;
    std::optional<std::string> protocol_csv, bath_csv;
    std::optional<double> delta, tau, q_i, q_f, steepness, phi;
    std::optional<double> omega0, gamma, lambda, tail_exponent, dt;
    std::optional<int> workers, bound_grid, x_points, hierarchy_depth, matsubara, fock_levels;
    std::optional<double> sweep_from, sweep_to;
    std::optional<int> sweep_points;
    std::optional<std::vector<double>> steepness_values;
    std::optional<bool> force_low_beta;
};

void add_common_options(CLI::App* sub, Overrides& ov) {
    sub->add_option("--family", ov.family, "drive family: linear|sinh|quasi-step|tabulated");
    sub->add_option("--delta", ov.delta, "minimum gap");
    sub->add_option("--tau", ov.tau, "protocol duration");
    sub->add_option("--q-i", ov.q_i, "initial drive value");
    sub->add_option("--q-f", ov.q_f, "final drive value");
    sub->add_option("--steepness", ov.steepness, "sinh steepness a");
    sub->add_option("--protocol-csv", ov.protocol_csv, "tabulated drive CSV (t, q)");
    sub->add_option("--coupling", ov.coupling, "coupling mode: static|sta");
    sub->add_option("--phi", ov.phi, "static coupling angle");
    sub->add_option("--bath-kind", ov.bath_kind, "bath kind: underdamped|custom");
    sub->add_option("--omega0", ov.omega0, "bath resonance frequency");
    sub->add_option("--gamma", ov.gamma, "bath width");
    sub->add_option("--lambda", ov.lambda, "system-bath coupling strength");
    sub->add_option("--beta", ov.beta, "inverse temperature (number or 'inf')");
    sub->add_option("--bath-csv", ov.bath_csv, "custom spectral density CSV (w, J)");
    sub->add_option("--tail-exponent", ov.tail_exponent, "custom J power-law tail exponent");
    sub->add_option("--dt", ov.dt, "integrator step (0: automatic)");
    sub->add_option("--bound-grid", ov.bound_grid, "Simpson grid for l_BD (odd, >= 101)");
    sub->add_option("--x-points", ov.x_points, "X_t tabulation points");
    sub->add_option("--hierarchy-depth", ov.hierarchy_depth, "HEOM depth N_c");
    sub->add_option("--matsubara", ov.matsubara, "HEOM Matsubara terms K");
    sub->add_option("--fock-levels", ov.fock_levels, "pseudomode Fock cutoff N_f");
    sub->add_option("--workers", ov.workers, "sweep worker threads (0: auto)");
    sub->add_option("-o,--out", ov.out, "output CSV path");
}

template <class T>
void put(json& j, const char* section, const char* key, const std::optional<T>& v) {
    if (v) j[section][key] = *v;
}

json merged_config(const std::string& config_path, const std::string& experiment,
                   const Overrides& ov) {
    json j = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw cdbound::cli::ConfigError("cannot open config file: " + config_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw cdbound::cli::ConfigError("config parse error in " + config_path + ": " +
                                            e.what());
        }
    }
    j["experiment"] = experiment;
    put(j, "protocol", "family", ov.family);
    put(j, "protocol", "delta", ov.delta);
    put(j, "protocol", "tau", ov.tau);
    put(j, "protocol", "q_i", ov.q_i);
    put(j, "protocol", "q_f", ov.q_f);
    put(j, "protocol", "steepness", ov.steepness);
    put(j, "protocol", "csv", ov.protocol_csv);
    put(j, "coupling", "mode", ov.coupling);
    put(j, "coupling", "phi", ov.phi);
    put(j, "bath", "kind", ov.bath_kind);
    put(j, "bath", "omega0", ov.omega0);
    put(j, "bath", "gamma", ov.gamma);
    put(j, "bath", "lambda", ov.lambda);
    put(j, "bath", "csv", ov.bath_csv);
    put(j, "bath", "tail_exponent", ov.tail_exponent);
    if (ov.beta) {
        if (*ov.beta == "inf" || *ov.beta == "infinity")
            j["bath"]["beta"] = "inf";
        else
            j["bath"]["beta"] = std::stod(*ov.beta);
    }
    put(j, "solver", "dt", ov.dt);
    put(j, "solver", "bound_grid", ov.bound_grid);
    put(j, "solver", "x_points", ov.x_points);
    put(j, "solver", "hierarchy_depth", ov.hierarchy_depth);
    put(j, "solver", "matsubara", ov.matsubara);
    put(j, "solver", "fock_levels", ov.fock_levels);
    put(j, "sweep", "variable", ov.sweep_variable);
    if (ov.sweep_from || ov.sweep_to || ov.sweep_points) {
        // fig2 sweeps the gap; bound-sweep sweeps its named variable
        const char* which = (experiment == "fig2" || experiment == "dynamics-sweep")
                                ? "delta"
                                : "range";
        if (j.contains("sweep") && j["sweep"].contains(which) && j["sweep"][which].is_array())
            j["sweep"].erase(which);  // flags replace an explicit value list
        if (ov.sweep_from) j["sweep"][which]["from"] = *ov.sweep_from;
        if (ov.sweep_to) j["sweep"][which]["to"] = *ov.sweep_to;
        if (ov.sweep_points) j["sweep"][which]["points"] = *ov.sweep_points;
    }
    if (ov.steepness_values) j["sweep"]["steepness"] = *ov.steepness_values;
    if (ov.force_low_beta) j["sta"]["force_low_beta"] = *ov.force_low_beta;
    put(j, "output", "csv", ov.out);
    if (ov.workers) j["workers"] = *ov.workers;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cdbound: performance bounds for counter-diabatic driving of a "
                 "dissipative two-level system, with HEOM/pseudomode verification"};
    app.set_version_flag("--version", std::string("cdbound ") + cdbound::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->expected(1);

    Overrides ov;
    auto* fig2 = app.add_subcommand(
        "fig2", "bound + HEOM sweep over the minimum gap (dynamics-sweep)");
    fig2->add_option("--delta-from", ov.sweep_from, "sweep start");
    fig2->add_option("--delta-to", ov.sweep_to, "sweep end");
    fig2->add_option("--delta-points", ov.sweep_points, "sweep points");
    fig2->add_option("--a-values", ov.steepness_values, "sinh steepness values");
    auto* bound = app.add_subcommand("bound-sweep", "l_BD sweep over one variable");
    bound->add_option("--variable", ov.sweep_variable, "delta|steepness|lambda|phi");
    bound->add_option("--from", ov.sweep_from, "sweep start");
    bound->add_option("--to", ov.sweep_to, "sweep end");
    bound->add_option("--points", ov.sweep_points, "sweep points");
    auto* sta = app.add_subcommand("sta-verify", "exact-STA unit-fidelity verification");
    sta->add_flag("--force-low-beta", ov.force_low_beta,
                  "run outside the beta >= 10 accuracy regime");
    auto* bathfn = app.add_subcommand("bath-functionals", "tabulate S and X_t");
    auto* opt = app.add_subcommand("optimize", "minimize l_BD over protocol parameters");
    for (auto* sub : {fig2, bound, sta, bathfn, opt}) {
        add_common_options(sub, ov);
        sub->fallthrough();  // lets `cdbound fig2 --config ...` reach the app option
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cdbound::cli::kConfigError;
    }

    std::string experiment;
    if (fig2->parsed()) experiment = "fig2";
    if (bound->parsed()) experiment = "bound-sweep";
    if (sta->parsed()) experiment = "sta-verify";
    if (bathfn->parsed()) experiment = "bath-functionals";
    if (opt->parsed()) experiment = "optimize";

    try {
        const json j = merged_config(config_path, experiment, ov);
        const auto cfg = cdbound::cli::ExperimentConfig::from_json(j);
        return cdbound::cli::run_experiment(cfg, &std::cout);
    } catch (const cdbound::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cdbound::cli::kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cdbound::cli::kConfigError;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cdbound::cli::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cdbound::cli::kNoConvergence;
    }
}
