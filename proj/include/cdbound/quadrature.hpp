// quadrature.hpp — deterministic adaptive Gauss-Kronrod integration
#pragma once

#include <functional>
#include <vector>

namespace cdbound::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;   // stopping floor when the value is near zero
    int max_panels = 20000;   // subdivision budget
};

struct Result {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    int evaluations = 0;
    bool converged = true;

    Result& operator+=(const Result& o) {
        value += o.value;
        error += o.error;
        evaluations += o.evaluations;
        converged = converged && o.converged;
        return *this;
    }
};

using Fn = std::function<double(double)>;

// Adaptive G7/K15 on [a, b]. Worst-error-panel-first subdivision; fully
// deterministic (fixed tie-breaking on panel position, fixed summation order).
Result integrate(const Fn& f, double a, double b, const Options& opt = {});

// Same, with interior panel boundaries pre-seeded at `seeds` (values outside
// (a, b) are ignored).
Result integrate_seeded(const Fn& f, double a, double b, std::vector<double> seeds,
                        const Options& opt = {});

// Semi-infinite tail: integrates f over [a, inf) through the map
// w = a/(1-u), u in [0,1). `u_seeds` pre-splits the mapped interval.
Result integrate_tail(const Fn& f, double a, std::vector<double> u_seeds = {},
                      const Options& opt = {});

// Throws std::runtime_error if `r` failed to converge with a large residual
// (the signature of a non-integrable integrand).
void require_integrable(const Result& r, const char* what);

}  // namespace cdbound::quad
