// dynamics.hpp — reduced dynamics of the driven, CD-controlled spin coupled
// to the bosonic bath: HEOM for static coupling angles, a damped-pseudomode
// master equation for time-dependent (sta) coupling, and a bare Schrodinger
// integrator for the isolated system.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cdbound/bath.hpp"
#include "cdbound/operators.hpp"
#include "cdbound/protocol.hpp"

namespace cdbound::dynamics {

struct ConvergenceReport {
    bool converged = true;
    int hierarchy_depth = 0;       // HEOM N_c
    int matsubara = 0;             // HEOM K
    int fock_levels = 0;           // pseudomode N_f
    double dt = 0.0;
    double delta_depth = 0.0;      // |F(N_c+1) - F|
    double delta_matsubara = 0.0;  // |F(K+1) - F|
    double delta_dt = 0.0;         // |F(dt/2) - F|
    double top_fock_population = 0.0;
    std::string detail;
};

struct SimulationResult {
    std::vector<double> times;
    std::vector<Operator2> states;   // reduced density matrices
    std::vector<double> fidelities;  // vs |psi_g(t)> (empty if no target given)
    double final_fidelity = 0.0;
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    ConvergenceReport convergence;
};

struct HeomOptions {
    int hierarchy_depth = 6;  // N_c
    int matsubara = 3;        // K
    double dt = 0.0;          // 0: automatic from the drive/bath scales
    bool convergence_check = true;  // probe N_c+1 and K+1
    bool dt_check = true;           // step-halving check on the final fidelity
    int max_escalations = 2;        // doubling rounds when a probe fails
    double convergence_tol = 1e-4;
    double dt_tol = 1e-6;
    int max_ados = 200000;
};

struct PseudomodeOptions {
    int fock_levels = 10;  // N_f
    double dt = 0.0;
    bool dt_check = true;
    int max_escalations = 2;  // N_f += 4 rounds on cutoff violation
    double fock_tol = 1e-4;   // ceiling for the top two Fock populations
    double dt_tol = 1e-6;
};

struct UnitaryOptions {
    double dt = 0.0;
    bool with_cd = true;  // false: drop H1 (bare LZ sweep)
};

// HEOM with time-dependent system Hamiltonian and a static coupling operator.
// Initial state |psi_g(0)><psi_g(0)| x bath Gibbs state. Throws for sta
// coupling (use run_pseudomode: the influence-functional construction needs a
// fixed coupling operator).
SimulationResult run_heom(const ProtocolSpec& spec, const CouplingAngle& angle,
                          const bath::SpectralDensity& j, double beta,
                          const HeomOptions& opts = {});

// Spin x damped-mode master equation (mode frequency omega0, decay gamma,
// thermal occupation nbar(beta, omega0)); supports static and sta coupling.
SimulationResult run_pseudomode(const ProtocolSpec& spec, const CouplingAngle& angle,
                                const bath::SpectralDensity& j, double beta,
                                const PseudomodeOptions& opts = {});

// Isolated two-level Schrodinger integration of H_cd (or H0 alone).
SimulationResult run_unitary_isolated(const ProtocolSpec& spec, const UnitaryOptions& opts = {});

// Low-level hierarchy propagation; `target` (optional) supplies the pure state
// the fidelity trace is taken against.
SimulationResult heom_propagate(const std::function<Operator2(double)>& hamiltonian,
                                const Operator2& coupling,
                                const bath::CorrelationDecomposition& decomposition,
                                const Operator2& rho0, double tau, double dt,
                                int hierarchy_depth, int max_ados = 200000,
                                const std::function<PureState2(double)>& target = {});

}  // namespace cdbound::dynamics
