// optimizer.hpp — minimize l_BD over drive-protocol parameters: golden-section
// search for one free parameter, deterministic Nelder-Mead for up to 8.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cdbound/bath.hpp"
#include "cdbound/bounds.hpp"
#include "cdbound/protocol.hpp"

namespace cdbound::optim {

struct OptimizationProblem {
    enum class Family { SinhSteepness, SplineControls };
    Family family = Family::SinhSteepness;

    // fixed problem data; q_i and q_f are never free parameters
    double delta = 1.0;
    double tau = 2.0;
    double q_i = -1.0;
    double q_f = 1.0;
    CouplingAngle angle = CouplingAngle::fixed(0.0);
    const bath::BathFunctionals* bath = nullptr;

    std::vector<std::pair<double, double>> box;  // per-parameter bounds
    // spline family: interior knot times in (0, tau); empty means uniform
    std::vector<double> knot_times;
    int bound_grid = 1001;
    double theta_dot_ceiling = 50.0;  // candidates with larger CD fields are rejected

    std::size_t parameter_count() const {
        return family == Family::SinhSteepness ? 1 : box.size();
    }
    ProtocolSpec protocol_for(std::span<const double> params) const;
};

struct Objective {
    double l_bd = 0.0;
    bool rejected = false;  // CD-field ceiling violated
};

// l_BD of the candidate protocol, or a rejection when max|theta_dot| exceeds
// the ceiling.
Objective evaluate(const OptimizationProblem& problem, std::span<const double> params);

struct ScalarResult {
    double parameter = 0.0;
    double l_bd = 0.0;
    bool converged = true;
    bool boundary = false;        // minimum ran into the bracket edge
    bool multimodal = false;      // pre-scan was not unimodal; grid+refine used
    int evaluations = 0;
    int rejections = 0;           // CD-ceiling hits during the search
};

struct ScalarOptions {
    double lo = 0.5;
    double hi = 50.0;
    int prescan = 16;
    double rel_tol = 1e-4;
    int max_iterations = 200;
};

ScalarResult optimize_scalar(const OptimizationProblem& problem, const ScalarOptions& opts);

struct MultiResult {
    std::vector<double> parameters;
    double l_bd = 0.0;
    bool converged = true;
    bool improved = true;  // false: no restart beat its seed
    int evaluations = 0;
    int rejections = 0;
};

struct MultiOptions {
    double tol = 1e-6;       // simplex diameter stop
    int max_iterations = 500;
    int restarts = 3;        // deterministic seeds
};

MultiResult optimize_multi(const OptimizationProblem& problem, const MultiOptions& opts = {});

}  // namespace cdbound::optim
