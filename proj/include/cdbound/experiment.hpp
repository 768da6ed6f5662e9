// experiment.hpp — config-driven batch experiments: the Fig.2-style
// bound-vs-dynamics sweep, bound-only sweeps, STA verification, bath
// functional tables, and protocol optimization. All runs are deterministic:
// identical configs produce byte-identical CSV output.
#pragma once

#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cdbound/bath.hpp"
#include "cdbound/bounds.hpp"
#include "cdbound/dynamics.hpp"
#include "cdbound/protocol.hpp"

namespace cdbound::cli {

enum ExitCode : int {
    kOk = 0,
    kBoundViolation = 2,
    kNoConvergence = 3,
    kConfigError = 4,
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepRange {
    double from = 0.1;
    double to = 2.0;
    int points = 20;
    std::vector<double> explicit_values;  // overrides from/to/points when set

    std::vector<double> values() const;
};

struct ExperimentConfig {
    std::string experiment = "fig2";

    // protocol
    std::string family = "sinh";
    double delta = 1.0;
    double tau = 2.0;
    double q_i = -1.0;
    double q_f = 1.0;
    double steepness = 3.0;
    std::string protocol_csv;

    // coupling
    std::string coupling = "static";  // "static" | "sta"
    double phi = 0.7853981633974483;  // pi/4 (sigma_x coupling)

    // bath (defaults mirror the Fig. 2 parameter set)
    std::string bath_kind = "underdamped";
    double omega0 = 1.0;
    double gamma = 0.1;
    double lambda = 0.1;
    double beta = 1.0;  // infinity allowed ("inf" in the config)
    std::string bath_csv;
    double tail_exponent = 3.0;

    // sweeps
    SweepRange delta_sweep{0.1, 2.0, 20, {}};
    std::vector<double> steepness_values{1.0, 3.0, 10.0};
    std::string sweep_variable = "delta";  // bound-sweep: delta|steepness|lambda|phi
    SweepRange sweep{0.1, 2.0, 20, {}};

    // solver
    int hierarchy_depth = 6;
    int matsubara = 3;
    int fock_levels = 10;
    double dt = 0.0;  // 0: automatic
    int bound_grid = 1001;
    int x_points = 201;

    // optimize
    std::string optimize_family = "sinh";  // "sinh" | "spline"
    std::vector<double> box_lo{0.5};
    std::vector<double> box_hi{50.0};
    double theta_dot_ceiling = 50.0;
    bool verify_dynamics = false;

    // sta-verify
    bool force_low_beta = false;
    double sta_threshold = 0.999;

    // output
    std::string out = "out.csv";
    int workers = 0;  // 0: CDBOUND_WORKERS env var, then hardware concurrency

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json resolved() const;
    std::string config_hash() const;

    ProtocolSpec make_protocol() const;
    ProtocolSpec make_protocol(double delta_value, double steepness_value) const;
    CouplingAngle make_coupling() const;
    bath::SpectralDensity make_bath() const;
    bath::SpectralDensity make_bath(double lambda_value) const;
};

struct Fig2Row {
    double delta = 0.0;
    double steepness = 0.0;
    double l_bd = 0.0;
    double fidelity_lower_bound = 0.0;
    double heom_fidelity = 0.0;
    double margin = 0.0;
    bool bound_ok = true;
    bool heom_converged = true;
    bool under_resolved = false;
};

struct Fig2Outcome {
    std::vector<Fig2Row> rows;
    int exit_code = kOk;
};

// Margin classification: bound violation (on converged rows) beats solver
// non-convergence; clean rows give 0.
int classify_fig2(const std::vector<Fig2Row>& rows);

Fig2Outcome run_fig2(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct StaVerifyOutcome {
    double sta_fidelity = 0.0;
    double static_fidelity = 0.0;
    bool passed = false;
    int exit_code = kOk;
};

StaVerifyOutcome run_sta_verify(const ExperimentConfig& cfg, std::ostream* log = nullptr);

int run_bound_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);
int run_bath_functionals(const ExperimentConfig& cfg, std::ostream* log = nullptr);
int run_optimize(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// dispatch on cfg.experiment ("dynamics-sweep" is an alias for "fig2")
int run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// worker pool used by the sweep runners; deterministic result ordering is the
// caller's job (tasks write into preallocated slots)
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);
int resolve_workers(int configured, std::size_t task_count);

}  // namespace cdbound::cli
