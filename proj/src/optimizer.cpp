#include "cdbound/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cdbound::optim {

namespace {

constexpr double kGolden = 0.61803398874989484820;

double clip(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

}  // namespace

ProtocolSpec OptimizationProblem::protocol_for(std::span<const double> params) const {
    switch (family) {
        case Family::SinhSteepness:
            if (params.size() != 1)
                throw std::invalid_argument("sinh problem expects one parameter (steepness)");
            return ProtocolSpec::sinh_drive(delta, tau, q_i, q_f, params[0]);
        case Family::SplineControls: {
            // interior control values at fixed times; endpoints pinned, so
            // q(0) = q_i and q(tau) = q_f hold exactly by construction
            const std::size_t k = params.size();
            if (k < 1) throw std::invalid_argument("spline problem expects >= 1 control point");
            if (!knot_times.empty() && knot_times.size() != k)
                throw std::invalid_argument("spline problem: knot_times/parameter count mismatch");
            std::vector<double> t(k + 2), q(k + 2);
            t.front() = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                t[i + 1] = knot_times.empty()
                               ? tau * static_cast<double>(i + 1) / static_cast<double>(k + 1)
                               : knot_times[i];
            t.back() = tau;
            q.front() = q_i;
            for (std::size_t i = 0; i < k; ++i) q[i + 1] = params[i];
            q.back() = q_f;
            return ProtocolSpec::tabulated(delta, std::move(t), std::move(q));
        }
    }
    throw std::logic_error("unknown protocol family");
}

Objective evaluate(const OptimizationProblem& problem, std::span<const double> params) {
    if (problem.bath == nullptr)
        throw std::invalid_argument("optimizer: problem has no bath functionals");
    const ProtocolSpec spec = problem.protocol_for(params);
    if (spec.max_theta_dot() > problem.theta_dot_ceiling) return {0.0, true};
    const auto r = bounds::l_bd_lz(spec, problem.angle, *problem.bath, problem.bound_grid);
    return {r.l_bd, false};
}

ScalarResult optimize_scalar(const OptimizationProblem& problem, const ScalarOptions& opts) {
    if (problem.parameter_count() != 1)
        throw std::invalid_argument("optimize_scalar: problem must have exactly one parameter");
    if (!(opts.hi > opts.lo)) throw std::invalid_argument("optimize_scalar: empty bracket");

    ScalarResult res;
    const auto f = [&](double a) {
        ++res.evaluations;
        const auto obj = evaluate(problem, std::span(&a, 1));
        if (obj.rejected) {
            ++res.rejections;
            return std::numeric_limits<double>::infinity();
        }
        return obj.l_bd;
    };

    // a decoupled bath makes the objective identically zero
    if (problem.bath != nullptr && problem.bath->is_zero()) {
        res.parameter = opts.lo;
        res.l_bd = 0.0;
        return res;
    }

    // coarse pre-scan: bracket the minimum and check unimodality
    const int n = std::max(opts.prescan, 4);
    std::vector<double> xs(n), fs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = opts.lo + (opts.hi - opts.lo) * i / (n - 1);
        fs[i] = f(xs[i]);
    }
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (fs[i] < fs[best]) best = i;

    int direction_changes = 0;
    for (int i = 1; i + 1 < n; ++i) {
        const bool was_down = fs[i] < fs[i - 1];
        const bool goes_up = fs[i + 1] > fs[i];
        if (!was_down && !goes_up && fs[i] != fs[i - 1]) ++direction_changes;  // local max
    }
    res.multimodal = direction_changes > 0;

    if (!std::isfinite(fs[best])) {
        // everything rejected: report non-convergence at the bracket edge
        res.converged = false;
        res.parameter = xs[best];
        res.l_bd = fs[best];
        return res;
    }

    // golden-section within the bracketing neighbours of the best grid point
    double a = xs[std::max(0, best - 1)];
    double b = xs[std::min(n - 1, best + 1)];
    res.boundary = (best == 0 || best == n - 1);

    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (b - a <= opts.rel_tol * std::max({std::abs(a), std::abs(b), 1.0})) break;
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        }
    }
    double xm = f1 <= f2 ? x1 : x2;
    double fm = std::min(f1, f2);
    // keep the best of the refined point and the scan (grid+refine fallback)
    if (fs[best] < fm) {
        xm = xs[best];
        fm = fs[best];
    }
    res.parameter = xm;
    res.l_bd = fm;
    return res;
}

MultiResult optimize_multi(const OptimizationProblem& problem, const MultiOptions& opts) {
    const std::size_t k = problem.box.size();
    if (k < 1 || k > 8)
        throw std::invalid_argument("optimize_multi: supports 1 to 8 free parameters");
    for (const auto& [lo, hi] : problem.box)
        if (!(hi >= lo)) throw std::invalid_argument("optimize_multi: malformed box bounds");

    MultiResult res;
    const auto f = [&](const std::vector<double>& p) {
        ++res.evaluations;
        const auto obj = evaluate(problem, p);
        if (obj.rejected) {
            ++res.rejections;
            return std::numeric_limits<double>::infinity();
        }
        return obj.l_bd;
    };

    // degenerate box: nothing to optimize
    bool degenerate = true;
    for (const auto& [lo, hi] : problem.box) degenerate = degenerate && lo == hi;
    if (degenerate) {
        res.parameters.resize(k);
        for (std::size_t i = 0; i < k; ++i) res.parameters[i] = problem.box[i].first;
        res.l_bd = f(res.parameters);
        return res;
    }

    const auto clipped = [&](std::vector<double> p) {
        for (std::size_t i = 0; i < k; ++i)
            p[i] = clip(p[i], problem.box[i].first, problem.box[i].second);
        return p;
    };

    // deterministic seeds: box center, then shifted toward each corner
    std::vector<std::vector<double>> seeds;
    for (int s = 0; s < std::max(1, opts.restarts); ++s) {
        std::vector<double> p(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto [lo, hi] = problem.box[i];
            const double c = 0.5 * (lo + hi);
            if (s == 0) p[i] = c;
            else if (s == 1) p[i] = c - 0.25 * (hi - lo);
            else p[i] = c + 0.25 * (hi - lo) * (i % 2 == 0 ? 1.0 : -1.0);
        }
        seeds.push_back(std::move(p));
    }

    double best_seed_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_seed;
    std::vector<double> best_point;
    double best_value = std::numeric_limits<double>::infinity();

    for (const auto& seed : seeds) {
        const double seed_value = f(seed);
        if (seed_value < best_seed_value) {
            best_seed_value = seed_value;
            best_seed = seed;
        }

        // Nelder-Mead with a deterministic initial simplex around the seed
        const std::size_t m = k + 1;
        std::vector<std::vector<double>> simplex(m, seed);
        std::vector<double> value(m);
        for (std::size_t i = 0; i < k; ++i) {
            const auto [lo, hi] = problem.box[i];
            double step = 0.1 * (hi - lo);
            if (step == 0.0) step = 1e-6;
            simplex[i + 1][i] = clip(seed[i] + step, lo, hi);
            if (simplex[i + 1][i] == seed[i]) simplex[i + 1][i] = clip(seed[i] - step, lo, hi);
        }
        for (std::size_t i = 0; i < m; ++i) value[i] = f(simplex[i]);

        for (int it = 0; it < opts.max_iterations; ++it) {
            std::vector<std::size_t> order(m);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (value[a] != value[b]) return value[a] < value[b];
                return a < b;  // deterministic tie-break
            });
            {
                std::vector<std::vector<double>> s2(m);
                std::vector<double> v2(m);
                for (std::size_t i = 0; i < m; ++i) {
                    s2[i] = simplex[order[i]];
                    v2[i] = value[order[i]];
                }
                simplex = std::move(s2);
                value = std::move(v2);
            }

            double diameter = 0.0;
            for (std::size_t i = 1; i < m; ++i)
                for (std::size_t d = 0; d < k; ++d)
                    diameter = std::max(diameter, std::abs(simplex[i][d] - simplex[0][d]));
            if (diameter < opts.tol) break;

            std::vector<double> centroid(k, 0.0);
            for (std::size_t i = 0; i + 1 < m; ++i)
                for (std::size_t d = 0; d < k; ++d) centroid[d] += simplex[i][d] / (m - 1);

            const auto blend = [&](double w) {
                std::vector<double> p(k);
                for (std::size_t d = 0; d < k; ++d)
                    p[d] = centroid[d] + w * (centroid[d] - simplex[m - 1][d]);
                return clipped(std::move(p));
            };

            const std::vector<double> reflect = blend(1.0);
            const double f_reflect = f(reflect);
            if (f_reflect < value[0]) {
                const std::vector<double> expand = blend(2.0);
                const double f_expand = f(expand);
                if (f_expand < f_reflect) {
                    simplex[m - 1] = expand;
                    value[m - 1] = f_expand;
                } else {
                    simplex[m - 1] = reflect;
                    value[m - 1] = f_reflect;
                }
            } else if (f_reflect < value[m - 2]) {
                simplex[m - 1] = reflect;
                value[m - 1] = f_reflect;
            } else {
                const std::vector<double> contract = blend(-0.5);
                const double f_contract = f(contract);
                if (f_contract < value[m - 1]) {
                    simplex[m - 1] = contract;
                    value[m - 1] = f_contract;
                } else {
                    for (std::size_t i = 1; i < m; ++i) {  // shrink
                        for (std::size_t d = 0; d < k; ++d)
                            simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                        value[i] = f(simplex[i]);
                    }
                }
            }
        }

        std::size_t arg = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (value[i] < value[arg]) arg = i;
        if (value[arg] < best_value) {
            best_value = value[arg];
            best_point = simplex[arg];
        }
    }

    if (!(best_value < best_seed_value)) {
        res.improved = false;
        res.parameters = best_seed;
        res.l_bd = best_seed_value;
        return res;
    }
    res.parameters = best_point;
    res.l_bd = best_value;
    return res;
}

}  // namespace cdbound::optim
