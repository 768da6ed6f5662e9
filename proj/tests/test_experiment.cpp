#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cdbound/experiment.hpp"

using namespace cdbound;
using cli::ExperimentConfig;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() {
        std::remove(path.c_str());
        std::remove((path + ".meta.json").c_str());
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CDBOUND_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("defaults mirror the reference parameter set") {
    const auto c = ExperimentConfig::from_json(json::object());
    CHECK(c.phi == doctest::Approx(kPi / 4).epsilon(1e-12));
    CHECK(c.beta == 1.0);
    CHECK(c.gamma == 0.1);
    CHECK(c.omega0 == 1.0);
    CHECK(c.lambda == 0.1);
    CHECK(c.tau == 2.0);
    CHECK(c.q_i == -1.0);
    CHECK(c.q_f == 1.0);
    CHECK(c.family == "sinh");
    CHECK(c.delta_sweep.from == 0.1);
    CHECK(c.delta_sweep.to == 2.0);
    CHECK(c.delta_sweep.points == 20);
    CHECK(c.steepness_values == std::vector<double>{1.0, 3.0, 10.0});
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(json::parse(R"({"lamda": 0.1})")),
                         doctest::Contains("unknown key"), cli::ConfigError);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json(json::parse(R"({"bath": {"lamda": 0.1}})")),
        doctest::Contains("unknown key 'lamda'"), cli::ConfigError);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_json(json::parse(R"({"sweep": {"delta": {"form": 0.1}}})")),
        doctest::Contains("unknown key 'form'"), cli::ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json(json::parse(R"({"coupling": {"mode": "windmill"}})")),
        cli::ConfigError);
}

TEST_CASE("beta accepts the zero-temperature flag") {
    const auto c = ExperimentConfig::from_json(json::parse(R"({"bath": {"beta": "inf"}})"));
    CHECK(std::isinf(c.beta));
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"bath": {"beta": "cold"}})")),
                    cli::ConfigError);
}

TEST_CASE("resolved config round-trips through the parser with a stable hash") {
    auto base = ExperimentConfig::from_json(json::parse(R"({"bath": {"lambda": 0.07}})"));
    const auto again = ExperimentConfig::from_json(base.resolved());
    CHECK(base.config_hash() == again.config_hash());
    CHECK(base.config_hash().size() == 16);
}

TEST_CASE("fig2 margin classification distinguishes the failure modes") {
    cli::Fig2Row good;
    cli::Fig2Row violated;
    violated.bound_ok = false;
    cli::Fig2Row unconverged;
    unconverged.heom_converged = false;
    CHECK(cli::classify_fig2({good, good}) == cli::kOk);
    CHECK(cli::classify_fig2({good, violated}) == cli::kBoundViolation);
    CHECK(cli::classify_fig2({good, unconverged}) == cli::kNoConvergence);
    // violation on a converged row wins over non-convergence elsewhere
    CHECK(cli::classify_fig2({unconverged, violated}) == cli::kBoundViolation);
    // a violation on an unconverged row is not trusted as a violation
    cli::Fig2Row both = unconverged;
    both.bound_ok = false;
    CHECK(cli::classify_fig2({good, both}) == cli::kNoConvergence);
}

TEST_CASE("decoupled fig2 sweep: unit fidelities, zero margins, byte-identical reruns") {
    TempFile out("tmp_fig2_lambda0.csv");
    json j = json::parse(R"({
        "bath": {"lambda": 0.0},
        "sweep": {"delta": [0.5, 1.0], "steepness": [3.0]},
        "output": {"csv": "tmp_fig2_lambda0.csv"}
    })");
    const auto cfg = ExperimentConfig::from_json(j);
    const auto outcome = cli::run_fig2(cfg);
    CHECK(outcome.exit_code == cli::kOk);
    REQUIRE(outcome.rows.size() == 2);
    for (const auto& r : outcome.rows) {
        CHECK(r.heom_fidelity == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(r.fidelity_lower_bound == 1.0);
        CHECK(std::abs(r.margin) < 1e-8);
        CHECK(r.heom_converged);
    }
    const std::string first = slurp(out.path);
    CHECK(first.find("# cdbound") == 0);
    CHECK(first.find("schema=fig2.v1") != std::string::npos);
    cli::run_fig2(cfg);
    CHECK(slurp(out.path) == first);  // determinism
}

TEST_CASE("single-point fig2 smoke run completes within the runtime budget") {
    TempFile out("tmp_fig2_smoke.csv");
    json j = json::parse(R"({
        "sweep": {"delta": [1.0], "steepness": [3.0]},
        "output": {"csv": "tmp_fig2_smoke.csv"}
    })");
    const auto cfg = ExperimentConfig::from_json(j);
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcome = cli::run_fig2(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(seconds < 60.0);
    CHECK(outcome.exit_code == cli::kOk);
    REQUIRE(outcome.rows.size() == 1);
    CHECK(outcome.rows[0].margin >= -1e-3);
    CHECK(outcome.rows[0].heom_converged);
    // sidecar carries the resolved config and per-run convergence records
    const auto meta = json::parse(slurp(out.path + ".meta.json"));
    CHECK(meta["runs"].size() == 1);
    CHECK(meta["runs"][0]["converged"].get<bool>());
    CHECK(meta["config"]["bath"]["lambda"].get<double>() == 0.1);
}

TEST_CASE("fig2 output does not depend on the worker pool size") {
    TempFile out("tmp_fig2_workers.csv");
    json j = json::parse(R"({
        "bath": {"lambda": 0.0},
        "sweep": {"delta": [0.4, 0.9, 1.7], "steepness": [1.0, 3.0]},
        "output": {"csv": "tmp_fig2_workers.csv"},
        "workers": 1
    })");
    auto cfg = ExperimentConfig::from_json(j);
    cli::run_fig2(cfg);
    const std::string serial = slurp(out.path);
    cfg.workers = 2;
    cli::run_fig2(cfg);
    // the worker count is part of the resolved config (and so the hash): strip
    // the header comment before comparing the data payload
    const auto body = [](const std::string& s) { return s.substr(s.find('\n') + 1); };
    CHECK(body(slurp(out.path)) == body(serial));
}

TEST_CASE("bound sweep over lambda grows monotonically and writes the schema header") {
    TempFile out("tmp_bound_sweep.csv");
    json j = json::parse(R"({
        "sweep": {"variable": "lambda", "range": [0.05, 0.1, 0.2]},
        "output": {"csv": "tmp_bound_sweep.csv"}
    })");
    const auto cfg = ExperimentConfig::from_json(j);
    CHECK(cli::run_bound_sweep(cfg) == cli::kOk);
    const std::string text = slurp(out.path);
    CHECK(text.find("schema=bound_sweep.v1") != std::string::npos);
    CHECK(text.find("lambda,l_bd,") != std::string::npos);

    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);  // header comment
    std::getline(lines, line);  // column names
    double prev = -1.0;
    int rows = 0;
    while (std::getline(lines, line)) {
        const double l_bd = std::stod(line.substr(line.find(',') + 1));
        CHECK(l_bd > prev);
        prev = l_bd;
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("lambda sweeps over tabulated baths are rejected up front") {
    json j = json::parse(R"({
        "bath": {"kind": "custom", "csv": "whatever.csv"},
        "sweep": {"variable": "lambda", "range": [0.1]},
        "output": {"csv": "tmp_never_written.csv"}
    })");
    CHECK_THROWS_WITH_AS(cli::run_bound_sweep(ExperimentConfig::from_json(j)),
                         doctest::Contains("coupling-strength"), cli::ConfigError);

    json j2 = json::parse(R"({
        "protocol": {"family": "linear"},
        "sweep": {"variable": "steepness", "range": [1.0]},
        "output": {"csv": "tmp_never_written.csv"}
    })");
    CHECK_THROWS_WITH_AS(cli::run_bound_sweep(ExperimentConfig::from_json(j2)),
                         doctest::Contains("sinh"), cli::ConfigError);
}

TEST_CASE("bath functionals experiment writes S and the X table") {
    TempFile out("tmp_bathfn.csv");
    json j = json::parse(R"({"output": {"csv": "tmp_bathfn.csv"},
                             "solver": {"x_points": 33}})");
    const auto cfg = ExperimentConfig::from_json(j);
    CHECK(cli::run_bath_functionals(cfg) == cli::kOk);
    const std::string text = slurp(out.path);
    CHECK(text.find("# S=") != std::string::npos);
    CHECK(text.find("t,X") != std::string::npos);
}

TEST_CASE("sta-verify passes in the accuracy regime and rejects low beta") {
    TempFile out("tmp_sta.csv");
    json j = json::parse(R"({
        "bath": {"beta": 10.0},
        "output": {"csv": "tmp_sta.csv"}
    })");
    const auto cfg = ExperimentConfig::from_json(j);
    const auto o = cli::run_sta_verify(cfg);
    CHECK(o.exit_code == cli::kOk);
    CHECK(o.passed);
    CHECK(o.sta_fidelity >= 0.999);
    CHECK(o.static_fidelity < o.sta_fidelity);
    const std::string text = slurp(out.path);
    CHECK(text.find("fidelity,static_fidelity") != std::string::npos);

    json low = json::parse(R"({"bath": {"beta": 1.0}, "output": {"csv": "tmp_sta.csv"}})");
    CHECK_THROWS_AS(cli::run_sta_verify(ExperimentConfig::from_json(low)), cli::ConfigError);

    // the decoupled case passes trivially (both runs are the same unitary)
    json decoupled = json::parse(R"({"bath": {"beta": 10.0, "lambda": 0.0},
                                     "output": {"csv": "tmp_sta.csv"}})");
    const auto o0 = cli::run_sta_verify(ExperimentConfig::from_json(decoupled));
    CHECK(o0.exit_code == cli::kOk);
    CHECK(o0.sta_fidelity >= 1.0 - 1e-8);
}

TEST_CASE("optimization ledger appends one provenance row per run") {
    TempFile out("tmp_opt.csv");
    json j = json::parse(R"({
        "optimize": {"family": "sinh", "box_lo": [0.5], "box_hi": [20.0]},
        "solver": {"bound_grid": 301, "x_points": 65},
        "output": {"csv": "tmp_opt.csv"}
    })");
    const auto cfg = ExperimentConfig::from_json(j);
    CHECK(cli::run_optimize(cfg) == cli::kOk);
    CHECK(cli::run_optimize(cfg) == cli::kOk);
    std::istringstream lines(slurp(out.path));
    std::string line;
    int comment = 0, header = 0, rows = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("# ", 0) == 0) ++comment;
        else if (line.rfind("config,", 0) == 0) ++header;
        else if (!line.empty()) ++rows;
    }
    CHECK(comment == 1);
    CHECK(header == 1);
    CHECK(rows == 2);
}

TEST_CASE("optimization can verify its winner against the dynamics") {
    TempFile out("tmp_opt_verify.csv");
    // decoupled bath: the optimizer returns immediately and the HEOM pass is
    // a plain unitary run, so this exercises the wiring cheaply
    json j = json::parse(R"({
        "bath": {"lambda": 0.0},
        "optimize": {"family": "sinh", "box_lo": [0.5], "box_hi": [20.0],
                     "verify_dynamics": true},
        "solver": {"bound_grid": 301, "x_points": 65},
        "output": {"csv": "tmp_opt_verify.csv"}
    })");
    CHECK(cli::run_optimize(ExperimentConfig::from_json(j)) == cli::kOk);
    const std::string text = slurp(out.path);
    // the verification columns are populated: fidelity 1, margin 0 at lambda=0
    const auto last_comma = text.find_last_of(',');
    const double margin = std::stod(text.substr(last_comma + 1));
    const auto prev_comma = text.find_last_of(',', last_comma - 1);
    const double fidelity = std::stod(text.substr(prev_comma + 1, last_comma - prev_comma - 1));
    CHECK(fidelity == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(margin) < 1e-8);
    const auto meta = json::parse(slurp(out.path + ".meta.json"));
    CHECK(meta["runs"].size() == 1);
    CHECK(meta["runs"][0]["heom_fidelity"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cli binary: help, config errors, and a quick run") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("bath-functionals --no-such-flag") == cli::kConfigError);
    CHECK(run_cli("") == cli::kConfigError);  // missing subcommand

    {
        std::ofstream bad("tmp_bad_config.json");
        bad << R"({"bath": {"lamda": 0.1}})";
    }
    CHECK(run_cli("--config tmp_bad_config.json bath-functionals -o tmp_cli_out.csv") ==
          cli::kConfigError);
    std::remove("tmp_bad_config.json");

    CHECK(run_cli("sta-verify --beta 2 -o tmp_cli_out.csv") == cli::kConfigError);

    CHECK(run_cli("bath-functionals --x-points 17 -o tmp_cli_out.csv") == 0);
    CHECK(slurp("tmp_cli_out.csv").find("# S=") != std::string::npos);
    std::remove("tmp_cli_out.csv");
    std::remove("tmp_cli_out.csv.meta.json");
}

TEST_CASE("dynamics-sweep is an alias for the fig2 experiment") {
    TempFile out("tmp_alias.csv");
    json j = json::parse(R"({
        "experiment": "dynamics-sweep",
        "bath": {"lambda": 0.0},
        "sweep": {"delta": [1.0], "steepness": [3.0]},
        "output": {"csv": "tmp_alias.csv"}
    })");
    CHECK(cli::run_experiment(ExperimentConfig::from_json(j)) == cli::kOk);
    CHECK(slurp(out.path).find("schema=fig2.v1") != std::string::npos);

    json bad = json::parse(R"({"experiment": "frobnicate"})");
    CHECK_THROWS_AS(cli::run_experiment(ExperimentConfig::from_json(bad)), cli::ConfigError);
}

TEST_CASE("worker pool honours the environment override") {
    CHECK(cli::resolve_workers(3, 100) == 3);
    setenv("CDBOUND_WORKERS", "2", 1);
    CHECK(cli::resolve_workers(0, 100) == 2);
    unsetenv("CDBOUND_WORKERS");
    CHECK(cli::resolve_workers(0, 1) == 1);  // never more workers than tasks
}

TEST_CASE("custom spectral densities load from CSV with a power-law tail") {
    const std::string path = "tmp_custom_j.csv";
    {
        std::ofstream out(path);
        out << "omega,J\n";
        const auto ud = bath::SpectralDensity::underdamped(1.0, 0.1, 0.1);
        for (int k = 1; k <= 4000; ++k) {
            const double w = 8.0 * k / 4000.0;
            out << w << "," << ud.value(w) << "\n";
        }
    }
    const auto j = bath::SpectralDensity::from_csv(path, 3.0);
    const auto ud = bath::SpectralDensity::underdamped(1.0, 0.1, 0.1);
    // table + tail reproduce the source functionals to interpolation accuracy
    const double s_csv = bath::compute_S(j, 1.0).value;
    const double s_ud = bath::compute_S(ud, 1.0).value;
    CHECK(std::abs(s_csv - s_ud) / s_ud < 1e-3);
    std::remove(path.c_str());

    // the tail metadata is required to keep J/w integrable
    {
        std::ofstream out(path);
        out << "0.5,0.1\n1.0,0.2\n2.0,0.1\n";
    }
    CHECK_THROWS_AS(bath::SpectralDensity::from_csv(path, 0.5), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("cli binary: flags override config file values") {
    {
        std::ofstream cfg("tmp_override.json");
        cfg << R"({"bath": {"lambda": 0.1}, "sweep": {"variable": "lambda",
                   "range": [0.1]}, "output": {"csv": "tmp_override_a.csv"}})";
    }
    // --out overrides output.csv from the file
    CHECK(run_cli("--config tmp_override.json bound-sweep -o tmp_override_b.csv") == 0);
    CHECK(std::ifstream("tmp_override_b.csv").good());
    CHECK_FALSE(std::ifstream("tmp_override_a.csv").good());
    std::remove("tmp_override.json");
    std::remove("tmp_override_b.csv");
}
