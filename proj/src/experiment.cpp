#include "cdbound/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "cdbound/csv_io.hpp"
#include "cdbound/optimizer.hpp"
#include "cdbound/version.hpp"

namespace cdbound::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

double get_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return j[key].get<double>();
}

double get_beta(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_string()) {
        const auto s = j[key].get<std::string>();
        if (s == "inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        throw ConfigError("beta: expected a number or \"inf\"");
    }
    if (!j[key].is_number()) throw ConfigError("beta: expected a number or \"inf\"");
    return j[key].get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    return j[key].get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ConfigError(std::string(key) + ": expected a boolean");
    return j[key].get<bool>();
}

std::string get_string(const json& j, const char* key, std::string fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(std::string(key) + ": expected a string");
    return j[key].get<std::string>();
}

std::vector<double> get_list(const json& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) throw ConfigError(std::string(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ConfigError(std::string(key) + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

SweepRange parse_sweep(const json& j, const std::string& where, SweepRange fallback) {
    SweepRange r = fallback;
    if (j.is_array()) {
        r.explicit_values.clear();
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(where + ": expected numbers");
            r.explicit_values.push_back(v.get<double>());
        }
        return r;
    }
    check_keys(j, where, {"from", "to", "points", "values"});
    r.from = get_number(j, "from", r.from);
    r.to = get_number(j, "to", r.to);
    r.points = get_int(j, "points", r.points);
    if (r.points < 1) throw ConfigError(where + ": points must be >= 1");
    r.explicit_values = get_list(j, "values", {});
    return r;
}

std::string flags_str(bool v) { return v ? "1" : "0"; }

json convergence_json(const dynamics::ConvergenceReport& c) {
    json j;
    j["converged"] = c.converged;
    j["hierarchy_depth"] = c.hierarchy_depth;
    j["matsubara"] = c.matsubara;
    j["fock_levels"] = c.fock_levels;
    j["dt"] = c.dt;
    j["delta_depth"] = c.delta_depth;
    j["delta_matsubara"] = c.delta_matsubara;
    j["delta_dt"] = c.delta_dt;
    j["top_fock_population"] = c.top_fock_population;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

void write_sidecar(const ExperimentConfig& cfg, json runs) {
    json meta;
    meta["config"] = cfg.resolved();
    meta["config_hash"] = cfg.config_hash();
    meta["version"] = kVersion;
    meta["runs"] = std::move(runs);
    std::ofstream out(cfg.out + ".meta.json");
    out << meta.dump(2) << "\n";
}

std::ofstream open_csv(const ExperimentConfig& cfg, const char* schema) {
    std::ofstream out(cfg.out);
    if (!out) throw ConfigError("cannot open output file: " + cfg.out);
    out << "# cdbound " << kVersion << " schema=" << schema << " config=" << cfg.config_hash()
        << "\n";
    return out;
}

void log_line(std::ostream* log, const std::string& line) {
    if (log) *log << line << "\n";
}

}  // namespace

std::vector<double> SweepRange::values() const {
    if (!explicit_values.empty()) return explicit_values;
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i)
        v[i] = points == 1 ? from : from + (to - from) * i / (points - 1);
    return v;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, "config",
               {"experiment", "protocol", "coupling", "bath", "sweep", "solver", "optimize",
                "sta", "output", "workers"});
    ExperimentConfig c;
    c.experiment = get_string(j, "experiment", c.experiment);

    if (j.contains("protocol")) {
        const auto& p = j["protocol"];
        check_keys(p, "protocol", {"family", "delta", "tau", "q_i", "q_f", "steepness", "csv"});
        c.family = get_string(p, "family", c.family);
        c.delta = get_number(p, "delta", c.delta);
        c.tau = get_number(p, "tau", c.tau);
        c.q_i = get_number(p, "q_i", c.q_i);
        c.q_f = get_number(p, "q_f", c.q_f);
        c.steepness = get_number(p, "steepness", c.steepness);
        c.protocol_csv = get_string(p, "csv", c.protocol_csv);
    }
    if (j.contains("coupling")) {
        const auto& p = j["coupling"];
        check_keys(p, "coupling", {"mode", "phi"});
        c.coupling = get_string(p, "mode", c.coupling);
        c.phi = get_number(p, "phi", c.phi);
        if (c.coupling != "static" && c.coupling != "sta")
            throw ConfigError("coupling.mode: expected \"static\" or \"sta\"");
    }
    if (j.contains("bath")) {
        const auto& p = j["bath"];
        check_keys(p, "bath",
                   {"kind", "omega0", "gamma", "lambda", "beta", "csv", "tail_exponent"});
        c.bath_kind = get_string(p, "kind", c.bath_kind);
        c.omega0 = get_number(p, "omega0", c.omega0);
        c.gamma = get_number(p, "gamma", c.gamma);
        c.lambda = get_number(p, "lambda", c.lambda);
        c.beta = get_beta(p, "beta", c.beta);
        c.bath_csv = get_string(p, "csv", c.bath_csv);
        c.tail_exponent = get_number(p, "tail_exponent", c.tail_exponent);
        if (c.bath_kind != "underdamped" && c.bath_kind != "custom")
            throw ConfigError("bath.kind: expected \"underdamped\" or \"custom\"");
    }
    if (j.contains("sweep")) {
        const auto& p = j["sweep"];
        check_keys(p, "sweep", {"delta", "steepness", "variable", "range"});
        if (p.contains("delta")) c.delta_sweep = parse_sweep(p["delta"], "sweep.delta", c.delta_sweep);
        if (p.contains("steepness"))
            c.steepness_values = get_list(p, "steepness", c.steepness_values);
        c.sweep_variable = get_string(p, "variable", c.sweep_variable);
        if (p.contains("range")) c.sweep = parse_sweep(p["range"], "sweep.range", c.sweep);
    }
    if (j.contains("solver")) {
        const auto& p = j["solver"];
        check_keys(p, "solver",
                   {"hierarchy_depth", "matsubara", "fock_levels", "dt", "bound_grid",
                    "x_points"});
        c.hierarchy_depth = get_int(p, "hierarchy_depth", c.hierarchy_depth);
        c.matsubara = get_int(p, "matsubara", c.matsubara);
        c.fock_levels = get_int(p, "fock_levels", c.fock_levels);
        c.dt = get_number(p, "dt", c.dt);
        c.bound_grid = get_int(p, "bound_grid", c.bound_grid);
        c.x_points = get_int(p, "x_points", c.x_points);
    }
    if (j.contains("optimize")) {
        const auto& p = j["optimize"];
        check_keys(p, "optimize",
                   {"family", "box_lo", "box_hi", "theta_dot_ceiling", "verify_dynamics"});
        c.optimize_family = get_string(p, "family", c.optimize_family);
        c.box_lo = get_list(p, "box_lo", c.box_lo);
        c.box_hi = get_list(p, "box_hi", c.box_hi);
        c.theta_dot_ceiling = get_number(p, "theta_dot_ceiling", c.theta_dot_ceiling);
        c.verify_dynamics = get_bool(p, "verify_dynamics", c.verify_dynamics);
        if (c.optimize_family != "sinh" && c.optimize_family != "spline")
            throw ConfigError("optimize.family: expected \"sinh\" or \"spline\"");
        if (c.box_lo.size() != c.box_hi.size())
            throw ConfigError("optimize: box_lo and box_hi must have the same length");
    }
    if (j.contains("sta")) {
        const auto& p = j["sta"];
        check_keys(p, "sta", {"force_low_beta", "fidelity_threshold"});
        c.force_low_beta = get_bool(p, "force_low_beta", c.force_low_beta);
        c.sta_threshold = get_number(p, "fidelity_threshold", c.sta_threshold);
    }
    if (j.contains("output")) {
        const auto& p = j["output"];
        check_keys(p, "output", {"csv"});
        c.out = get_string(p, "csv", c.out);
    }
    c.workers = get_int(j, "workers", c.workers);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::resolved() const {
    json j;
    j["experiment"] = experiment;
    j["protocol"] = {{"family", family},       {"delta", delta}, {"tau", tau},
                     {"q_i", q_i},             {"q_f", q_f},     {"steepness", steepness},
                     {"csv", protocol_csv}};
    j["coupling"] = {{"mode", coupling}, {"phi", phi}};
    j["bath"] = {{"kind", bath_kind}, {"omega0", omega0},
                 {"gamma", gamma},    {"lambda", lambda},
                 {"beta", std::isinf(beta) ? json("inf") : json(beta)},
                 {"csv", bath_csv},   {"tail_exponent", tail_exponent}};
    j["sweep"] = {{"delta", {{"from", delta_sweep.from},
                             {"to", delta_sweep.to},
                             {"points", delta_sweep.points},
                             {"values", delta_sweep.explicit_values}}},
                  {"steepness", steepness_values},
                  {"variable", sweep_variable},
                  {"range", {{"from", sweep.from},
                             {"to", sweep.to},
                             {"points", sweep.points},
                             {"values", sweep.explicit_values}}}};
    j["solver"] = {{"hierarchy_depth", hierarchy_depth}, {"matsubara", matsubara},
                   {"fock_levels", fock_levels},         {"dt", dt},
                   {"bound_grid", bound_grid},           {"x_points", x_points}};
    j["optimize"] = {{"family", optimize_family},
                     {"box_lo", box_lo},
                     {"box_hi", box_hi},
                     {"theta_dot_ceiling", theta_dot_ceiling},
                     {"verify_dynamics", verify_dynamics}};
    j["sta"] = {{"force_low_beta", force_low_beta}, {"fidelity_threshold", sta_threshold}};
    j["output"] = {{"csv", out}};
    j["workers"] = workers;
    return j;
}

std::string ExperimentConfig::config_hash() const {
    const std::string s = resolved().dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ProtocolSpec ExperimentConfig::make_protocol() const { return make_protocol(delta, steepness); }

ProtocolSpec ExperimentConfig::make_protocol(double delta_value, double steepness_value) const {
    if (family == "linear") return ProtocolSpec::linear(delta_value, tau, q_i, q_f);
    if (family == "sinh")
        return ProtocolSpec::sinh_drive(delta_value, tau, q_i, q_f, steepness_value);
    if (family == "quasi-step") {
        const double plateau =
            coupling == "static" ? q_optimal(phi, delta_value) : 0.0;
        return ProtocolSpec::quasi_step(delta_value, tau, q_i, q_f, plateau);
    }
    if (family == "tabulated") {
        if (protocol_csv.empty())
            throw ConfigError("protocol.family=tabulated needs protocol.csv");
        return ProtocolSpec::tabulated_from_csv(delta_value, protocol_csv);
    }
    throw ConfigError("protocol.family: unknown family '" + family + "'");
}

CouplingAngle ExperimentConfig::make_coupling() const {
    return coupling == "sta" ? CouplingAngle::sta() : CouplingAngle::fixed(phi);
}

bath::SpectralDensity ExperimentConfig::make_bath() const { return make_bath(lambda); }

bath::SpectralDensity ExperimentConfig::make_bath(double lambda_value) const {
    if (bath_kind == "underdamped")
        return bath::SpectralDensity::underdamped(omega0, gamma, lambda_value);
    if (bath_csv.empty()) throw ConfigError("bath.kind=custom needs bath.csv");
    return bath::SpectralDensity::from_csv(bath_csv, tail_exponent);
}

int resolve_workers(int configured, std::size_t task_count) {
    int w = configured;
    if (w <= 0) {
        if (const char* env = std::getenv("CDBOUND_WORKERS")) w = std::atoi(env);
    }
    if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
    if (w <= 0) w = 1;
    return static_cast<int>(std::min<std::size_t>(w, std::max<std::size_t>(task_count, 1)));
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    if (count == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int classify_fig2(const std::vector<Fig2Row>& rows) {
    bool violated = false, unconverged = false;
    for (const auto& r : rows) {
        if (!r.heom_converged) unconverged = true;
        else if (!r.bound_ok) violated = true;
    }
    if (violated) return kBoundViolation;
    if (unconverged) return kNoConvergence;
    return kOk;
}

Fig2Outcome run_fig2(const ExperimentConfig& cfg, std::ostream* log) {
    if (cfg.family != "sinh")
        throw ConfigError("fig2 sweeps the sinh drive family (protocol.family must be \"sinh\")");
    if (cfg.coupling != "static")
        throw ConfigError("fig2 needs a static coupling angle (HEOM verification)");

    const auto j = cfg.make_bath();
    const auto angle = cfg.make_coupling();
    const auto functionals = bath::BathFunctionals::tabulate(j, cfg.beta, cfg.tau, cfg.x_points);

    const auto deltas = cfg.delta_sweep.values();
    const auto& steeps = cfg.steepness_values;
    if (deltas.empty() || steeps.empty())
        throw ConfigError("fig2: the delta sweep and the steepness list must be non-empty");
    const std::size_t count = deltas.size() * steeps.size();

    Fig2Outcome outcome;
    outcome.rows.resize(count);
    std::vector<dynamics::ConvergenceReport> reports(count);

    const auto task = [&](std::size_t i) {
        const double d = deltas[i / steeps.size()];
        const double a = steeps[i % steeps.size()];
        const auto spec = cfg.make_protocol(d, a);
        const auto bound = bounds::l_bd_lz(spec, angle, functionals, cfg.bound_grid);

        dynamics::HeomOptions h;
        h.hierarchy_depth = cfg.hierarchy_depth;
        h.matsubara = cfg.matsubara;
        h.dt = cfg.dt;
        const auto sim = dynamics::run_heom(spec, angle, j, cfg.beta, h);

        Fig2Row row;
        row.delta = d;
        row.steepness = a;
        row.l_bd = bound.l_bd;
        row.fidelity_lower_bound = bound.fidelity_lower_bound;
        row.heom_fidelity = sim.final_fidelity;
        row.margin = sim.final_fidelity - bound.fidelity_lower_bound;
        row.bound_ok = row.margin >= -1e-3;
        row.heom_converged = sim.convergence.converged;
        row.under_resolved = bound.under_resolved;
        outcome.rows[i] = row;
        reports[i] = sim.convergence;
    };
    parallel_for(count, resolve_workers(cfg.workers, count), task);

    auto out = open_csv(cfg, "fig2.v1");
    out << "delta,steepness,l_bd,fidelity_lower_bound,heom_fidelity,margin,bound_ok,"
           "heom_converged,bound_under_resolved\n";
    json runs = json::array();
    for (std::size_t i = 0; i < count; ++i) {
        const auto& r = outcome.rows[i];
        out << format_double(r.delta) << ',' << format_double(r.steepness) << ','
            << format_double(r.l_bd) << ',' << format_double(r.fidelity_lower_bound) << ','
            << format_double(r.heom_fidelity) << ',' << format_double(r.margin) << ','
            << flags_str(r.bound_ok) << ',' << flags_str(r.heom_converged) << ','
            << flags_str(r.under_resolved) << "\n";
        json jr = convergence_json(reports[i]);
        jr["delta"] = r.delta;
        jr["steepness"] = r.steepness;
        runs.push_back(std::move(jr));
    }
    write_sidecar(cfg, std::move(runs));

    outcome.exit_code = classify_fig2(outcome.rows);
    log_line(log, "fig2: " + std::to_string(count) + " rows -> " + cfg.out +
                      " (exit " + std::to_string(outcome.exit_code) + ")");
    return outcome;
}

StaVerifyOutcome run_sta_verify(const ExperimentConfig& cfg, std::ostream* log) {
    if (!cfg.force_low_beta && !(cfg.beta >= 10.0))
        throw ConfigError("sta-verify expects beta >= 10 (pseudomode accuracy regime); "
                          "set sta.force_low_beta to override");

    const auto spec = cfg.make_protocol();
    const auto j = cfg.make_bath();

    dynamics::PseudomodeOptions p;
    p.fock_levels = cfg.fock_levels;
    p.dt = cfg.dt;
    const auto sta_run = dynamics::run_pseudomode(spec, CouplingAngle::sta(), j, cfg.beta, p);
    const auto static_run =
        dynamics::run_pseudomode(spec, CouplingAngle::fixed(cfg.phi), j, cfg.beta, p);

    auto out = open_csv(cfg, "sta_verify.v1");
    out << "t,re_rho00,im_rho00,re_rho01,im_rho01,re_rho10,im_rho10,re_rho11,im_rho11,"
           "fidelity,static_fidelity\n";
    for (std::size_t i = 0; i < sta_run.times.size(); ++i) {
        const auto& rho = sta_run.states[i];
        out << format_double(sta_run.times[i]);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                out << ',' << format_double(rho(r, c).real()) << ','
                    << format_double(rho(r, c).imag());
        const double fs = i < static_run.fidelities.size() ? static_run.fidelities[i] : 0.0;
        out << ',' << format_double(sta_run.fidelities[i]) << ',' << format_double(fs) << "\n";
    }
    json runs = json::array();
    {
        json a = convergence_json(sta_run.convergence);
        a["mode"] = "sta";
        a["final_fidelity"] = sta_run.final_fidelity;
        runs.push_back(std::move(a));
        json b = convergence_json(static_run.convergence);
        b["mode"] = "static";
        b["final_fidelity"] = static_run.final_fidelity;
        runs.push_back(std::move(b));
    }
    write_sidecar(cfg, std::move(runs));

    StaVerifyOutcome o;
    o.sta_fidelity = sta_run.final_fidelity;
    o.static_fidelity = static_run.final_fidelity;
    o.passed = o.sta_fidelity >= cfg.sta_threshold;
    if (!sta_run.convergence.converged || !static_run.convergence.converged)
        o.exit_code = kNoConvergence;
    else if (!o.passed)
        o.exit_code = kBoundViolation;
    log_line(log, "sta-verify: F_sta = " + format_double(o.sta_fidelity) +
                      ", F_static = " + format_double(o.static_fidelity) + " -> " + cfg.out);
    return o;
}

int run_bound_sweep(const ExperimentConfig& cfg, std::ostream* log) {
    const auto values = cfg.sweep.values();
    const auto& var = cfg.sweep_variable;
    if (var != "delta" && var != "steepness" && var != "lambda" && var != "phi")
        throw ConfigError("sweep.variable: expected delta|steepness|lambda|phi");
    if (var == "lambda" && cfg.bath_kind != "underdamped")
        throw ConfigError("sweep.variable=lambda needs the underdamped bath (a tabulated "
                          "J(w) has no coupling-strength knob)");
    if (var == "steepness" && cfg.family != "sinh")
        throw ConfigError("sweep.variable=steepness needs the sinh drive family");
    if (values.empty()) throw ConfigError("bound-sweep: the sweep range is empty");

    // bath functionals are shared unless lambda itself is swept
    std::optional<bath::BathFunctionals> shared;
    if (var != "lambda")
        shared = bath::BathFunctionals::tabulate(cfg.make_bath(), cfg.beta, cfg.tau,
                                                 cfg.x_points);

    struct Row {
        double value;
        bounds::BoundResult r;
    };
    std::vector<Row> rows(values.size());
    const auto task = [&](std::size_t i) {
        const double v = values[i];
        const double d = var == "delta" ? v : cfg.delta;
        const double a = var == "steepness" ? v : cfg.steepness;
        const auto spec = cfg.make_protocol(d, a);
        const auto angle =
            var == "phi" ? CouplingAngle::fixed(v) : cfg.make_coupling();
        if (var == "lambda") {
            const auto fn =
                bath::BathFunctionals::tabulate(cfg.make_bath(v), cfg.beta, cfg.tau, cfg.x_points);
            rows[i] = {v, bounds::l_bd_lz(spec, angle, fn, cfg.bound_grid)};
        } else {
            rows[i] = {v, bounds::l_bd_lz(spec, angle, *shared, cfg.bound_grid)};
        }
    };
    parallel_for(values.size(), resolve_workers(cfg.workers, values.size()), task);

    auto out = open_csv(cfg, "bound_sweep.v1");
    out << cfg.sweep_variable
        << ",l_bd,fidelity_lower_bound,valid,error_estimate,under_resolved\n";
    for (const auto& row : rows)
        out << format_double(row.value) << ',' << format_double(row.r.l_bd) << ','
            << format_double(row.r.fidelity_lower_bound) << ',' << flags_str(row.r.valid) << ','
            << format_double(row.r.error_estimate) << ',' << flags_str(row.r.under_resolved)
            << "\n";
    write_sidecar(cfg, json::array());
    log_line(log, "bound-sweep over " + var + ": " + std::to_string(values.size()) + " rows -> " +
                      cfg.out);
    return kOk;
}

int run_bath_functionals(const ExperimentConfig& cfg, std::ostream* log) {
    const auto j = cfg.make_bath();
    const auto fn = bath::BathFunctionals::tabulate(j, cfg.beta, cfg.tau, cfg.x_points);
    auto out = open_csv(cfg, "bath_functionals.v1");
    out << "# S=" << format_double(fn.S) << " S_error=" << format_double(fn.S_error)
        << " X_error=" << format_double(fn.X_error)
        << " X_interp_error=" << format_double(fn.X_interp_error) << "\n";
    out << "t,X\n";
    for (std::size_t i = 0; i < fn.times.size(); ++i)
        out << format_double(fn.times[i]) << ',' << format_double(fn.X_values[i]) << "\n";
    write_sidecar(cfg, json::array());
    log_line(log, "bath-functionals: S = " + format_double(fn.S) + " -> " + cfg.out);
    return kOk;
}

int run_optimize(const ExperimentConfig& cfg, std::ostream* log) {
    const auto j = cfg.make_bath();
    const auto functionals = bath::BathFunctionals::tabulate(j, cfg.beta, cfg.tau, cfg.x_points);

    optim::OptimizationProblem problem;
    problem.family = cfg.optimize_family == "sinh" ? optim::OptimizationProblem::Family::SinhSteepness
                                                   : optim::OptimizationProblem::Family::SplineControls;
    problem.delta = cfg.delta;
    problem.tau = cfg.tau;
    problem.q_i = cfg.q_i;
    problem.q_f = cfg.q_f;
    problem.angle = cfg.make_coupling();
    problem.bath = &functionals;
    problem.bound_grid = cfg.bound_grid;
    problem.theta_dot_ceiling = cfg.theta_dot_ceiling;
    for (std::size_t i = 0; i < cfg.box_lo.size(); ++i)
        problem.box.emplace_back(cfg.box_lo[i], cfg.box_hi[i]);

    std::vector<double> params;
    double l_bd = 0.0;
    std::string flags;
    if (problem.family == optim::OptimizationProblem::Family::SinhSteepness) {
        if (problem.box.size() != 1)
            throw ConfigError("optimize.family=sinh needs exactly one box dimension");
        optim::ScalarOptions so;
        so.lo = problem.box[0].first;
        so.hi = problem.box[0].second;
        const auto r = optim::optimize_scalar(problem, so);
        params = {r.parameter};
        l_bd = r.l_bd;
        flags = std::string(r.converged ? "converged" : "not-converged") +
                (r.boundary ? ";boundary" : "") + (r.multimodal ? ";multimodal" : "") +
                (r.rejections > 0 ? ";cd-ceiling-hits=" + std::to_string(r.rejections) : "");
    } else {
        const auto r = optim::optimize_multi(problem);
        params = r.parameters;
        l_bd = r.l_bd;
        flags = std::string(r.converged ? "converged" : "not-converged") +
                (r.improved ? "" : ";seed-returned") +
                (r.rejections > 0 ? ";cd-ceiling-hits=" + std::to_string(r.rejections) : "");
    }

    // optional dynamics verification of the winning protocol
    std::string heom_fidelity_str, heom_margin_str;
    json runs = json::array();
    if (cfg.verify_dynamics) {
        const auto spec = problem.protocol_for(params);
        dynamics::HeomOptions h;
        h.hierarchy_depth = cfg.hierarchy_depth;
        h.matsubara = cfg.matsubara;
        h.dt = cfg.dt;
        const auto sim = dynamics::run_heom(spec, problem.angle, j, cfg.beta, h);
        const auto fb = bounds::fidelity_bound_from(l_bd);
        heom_fidelity_str = format_double(sim.final_fidelity);
        heom_margin_str = format_double(sim.final_fidelity - fb.value);
        json jr = convergence_json(sim.convergence);
        jr["heom_fidelity"] = sim.final_fidelity;
        runs.push_back(std::move(jr));
    }

    // append to the optimization ledger; header written once
    const bool fresh = !std::ifstream(cfg.out).good();
    std::ofstream out(cfg.out, std::ios::app);
    if (!out) throw ConfigError("cannot open output file: " + cfg.out);
    if (fresh) {
        out << "# cdbound " << kVersion << " schema=optimize.v1\n";
        out << "config,family,delta,tau,q_i,q_f,phi,omega0,gamma,lambda,beta,k,parameters,"
               "l_bd,flags,heom_fidelity,heom_margin\n";
    }
    std::string joined;
    for (std::size_t i = 0; i < params.size(); ++i)
        joined += (i ? ";" : "") + format_double(params[i]);
    out << cfg.config_hash() << ',' << cfg.optimize_family << ',' << format_double(cfg.delta)
        << ',' << format_double(cfg.tau) << ',' << format_double(cfg.q_i) << ','
        << format_double(cfg.q_f) << ',' << format_double(cfg.phi) << ','
        << format_double(cfg.omega0) << ',' << format_double(cfg.gamma) << ','
        << format_double(cfg.lambda) << ','
        << (std::isinf(cfg.beta) ? "inf" : format_double(cfg.beta)) << ',' << params.size() << ','
        << joined << ',' << format_double(l_bd) << ',' << flags << ',' << heom_fidelity_str << ','
        << heom_margin_str << "\n";
    write_sidecar(cfg, std::move(runs));  // resolved config for the latest run
    log_line(log, "optimize: l_bd = " + format_double(l_bd) + " at [" + joined + "] -> " +
                      cfg.out);
    return kOk;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    const auto& kind = cfg.experiment;
    if (kind == "fig2" || kind == "dynamics-sweep") return run_fig2(cfg, log).exit_code;
    if (kind == "sta-verify") return run_sta_verify(cfg, log).exit_code;
    if (kind == "bound-sweep") return run_bound_sweep(cfg, log);
    if (kind == "bath-functionals") return run_bath_functionals(cfg, log);
    if (kind == "optimize") return run_optimize(cfg, log);
    throw ConfigError("unknown experiment kind '" + kind + "'");
}

}  // namespace cdbound::cli
