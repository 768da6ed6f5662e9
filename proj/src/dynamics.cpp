#include "cdbound/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cdbound::dynamics {

namespace {

Operator2 load2(const Complex* p) { return {{p[0], p[1], p[2], p[3]}}; }

void store2(Complex* p, const Operator2& m) {
    p[0] = m.e[0];
    p[1] = m.e[1];
    p[2] = m.e[2];
    p[3] = m.e[3];
}

// ---------------------------- HEOM hierarchy --------------------------------

struct Hierarchy {
    int n_terms = 0;
    int n_ados = 1;
    std::vector<std::uint8_t> multi;   // n_ados x n_terms occupation table
    std::vector<Complex> damping;      // per ADO: sum_j n_j nu_j
    std::vector<std::int32_t> up;      // n_ados x n_terms, -1 beyond depth
    std::vector<std::int32_t> down;    // n_ados x n_terms, -1 when n_j = 0
    std::vector<Complex> down_left;    // n_j * amplitude_j
    std::vector<Complex> down_right;   // n_j * amplitude_conj_j
};

std::int64_t hierarchy_size(int n_terms, int depth) {
    // C(depth + n_terms, n_terms), saturating
    std::int64_t n = 1;
    for (int i = 1; i <= n_terms; ++i) {
        n = n * (depth + i) / i;
        if (n > (std::int64_t{1} << 40)) return n;
    }
    return n;
}

Hierarchy build_hierarchy(const bath::CorrelationDecomposition& dec, int depth, int max_ados) {
    const int nt = static_cast<int>(dec.terms.size());
    if (hierarchy_size(nt, depth) > max_ados)
        throw std::invalid_argument("heom: hierarchy would exceed the ADO budget (" +
                                    std::to_string(hierarchy_size(nt, depth)) + " > " +
                                    std::to_string(max_ados) + ")");

    Hierarchy h;
    h.n_terms = nt;

    // enumerate multi-indices with total occupation <= depth, lexicographically
    std::vector<std::vector<std::uint8_t>> all;
    std::vector<std::uint8_t> cur(nt, 0);
    const std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == nt) {
            all.push_back(cur);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            cur[pos] = static_cast<std::uint8_t>(k);
            rec(pos + 1, remaining - k);
        }
        cur[pos] = 0;
    };
    rec(0, depth);

    std::map<std::vector<std::uint8_t>, std::int32_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i]] = static_cast<std::int32_t>(i);

    h.n_ados = static_cast<int>(all.size());
    h.multi.resize(static_cast<std::size_t>(h.n_ados) * nt);
    h.damping.assign(h.n_ados, Complex{});
    h.up.assign(static_cast<std::size_t>(h.n_ados) * nt, -1);
    h.down.assign(static_cast<std::size_t>(h.n_ados) * nt, -1);
    h.down_left.assign(static_cast<std::size_t>(h.n_ados) * nt, Complex{});
    h.down_right.assign(static_cast<std::size_t>(h.n_ados) * nt, Complex{});

    for (int i = 0; i < h.n_ados; ++i) {
        const auto& n = all[i];
        int total = 0;
        for (int j = 0; j < nt; ++j) {
            h.multi[static_cast<std::size_t>(i) * nt + j] = n[j];
            h.damping[i] += static_cast<double>(n[j]) * dec.terms[j].rate;
            total += n[j];
        }
        auto probe = n;
        for (int j = 0; j < nt; ++j) {
            if (total < depth) {
                ++probe[j];
                h.up[static_cast<std::size_t>(i) * nt + j] = index.at(probe);
                --probe[j];
            }
            if (n[j] > 0) {
                --probe[j];
                const auto it = index.find(probe);
                h.down[static_cast<std::size_t>(i) * nt + j] = it->second;
                ++probe[j];
                h.down_left[static_cast<std::size_t>(i) * nt + j] =
                    static_cast<double>(n[j]) * dec.terms[j].amplitude;
                h.down_right[static_cast<std::size_t>(i) * nt + j] =
                    static_cast<double>(n[j]) * dec.terms[j].amplitude_conj;
            }
        }
    }
    return h;
}

// d(rho)/dt for the whole hierarchy; x and dx are flat 4-per-ADO buffers
void heom_rhs(const Hierarchy& h, const Operator2& ham, const Operator2& q,
              const std::vector<Complex>& x, std::vector<Complex>& dx) {
    const Complex mi(0.0, -1.0);
    const int nt = h.n_terms;
    for (int i = 0; i < h.n_ados; ++i) {
        const Operator2 rho = load2(&x[4 * static_cast<std::size_t>(i)]);
        Operator2 d = mi * commutator(ham, rho);
        d -= h.damping[i] * rho;
        const std::size_t row = static_cast<std::size_t>(i) * nt;
        for (int j = 0; j < nt; ++j) {
            const auto ui = h.up[row + j];
            if (ui >= 0) {
                const Operator2 ru = load2(&x[4 * static_cast<std::size_t>(ui)]);
                d += mi * commutator(q, ru);
            }
            const auto di = h.down[row + j];
            if (di >= 0) {
                const Operator2 rd = load2(&x[4 * static_cast<std::size_t>(di)]);
                d += mi * (h.down_left[row + j] * (q * rd) - h.down_right[row + j] * (rd * q));
            }
        }
        store2(&dx[4 * static_cast<std::size_t>(i)], d);
    }
}

// classic RK4 over a flat complex state
template <class Rhs>
void rk4_step(const Rhs& rhs, double t, double dt, std::vector<Complex>& x,
              std::array<std::vector<Complex>, 5>& work) {
    auto& [k1, k2, k3, k4, tmp] = work;
    const std::size_t n = x.size();
    rhs(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    rhs(t + dt, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

int step_count(double tau, double dt) {
    return std::max(2, static_cast<int>(std::ceil(tau / dt - 1e-12)));
}

double auto_dt_heom(const ProtocolSpec& spec, const bath::SpectralDensity& j,
                    const bath::CorrelationDecomposition& dec, int depth) {
    const double theta_scale = std::max(spec.max_theta_dot(), 1e-12);
    const double rate_scale = std::max(dec.max_rate() * depth, 1e-12);
    double dt = std::min({0.01 / j.reference_frequency, 0.01 / theta_scale, 0.5 / rate_scale,
                          spec.tau / 100.0});
    return dt;
}

}  // namespace

SimulationResult heom_propagate(const std::function<Operator2(double)>& hamiltonian,
                                const Operator2& coupling,
                                const bath::CorrelationDecomposition& decomposition,
                                const Operator2& rho0, double tau, double dt,
                                int hierarchy_depth, int max_ados,
                                const std::function<PureState2(double)>& target) {
    if (!(dt > 0.0)) throw std::invalid_argument("heom_propagate: dt must be > 0");
    if (hierarchy_depth < 1) throw std::invalid_argument("heom_propagate: depth must be >= 1");

    const Hierarchy h = build_hierarchy(decomposition, hierarchy_depth, max_ados);

    const int steps = step_count(tau, dt);
    const double h_dt = tau / steps;

    std::vector<Complex> x(4 * static_cast<std::size_t>(h.n_ados), Complex{});
    store2(&x[0], rho0);

    std::array<std::vector<Complex>, 5> work;
    for (auto& w : work) w.assign(x.size(), Complex{});

    const auto rhs = [&](double t, const std::vector<Complex>& in, std::vector<Complex>& out) {
        heom_rhs(h, hamiltonian(t), coupling, in, out);
    };

    SimulationResult r;
    r.convergence.hierarchy_depth = hierarchy_depth;
    r.convergence.matsubara = decomposition.matsubara_count;
    r.convergence.dt = h_dt;
    const int stride = std::max(1, steps / 2000);
    r.times.reserve(steps / stride + 2);

    const auto record = [&](double t) {
        const Operator2 rho = load2(&x[0]);
        r.times.push_back(t);
        r.states.push_back(rho);
        r.max_trace_error = std::max(r.max_trace_error, std::abs(rho.trace() - Complex(1.0)));
        r.max_hermiticity_error = std::max(r.max_hermiticity_error, rho.hermiticity_error());
        if (target) r.fidelities.push_back(fidelity(target(t), rho));
    };

    record(0.0);
    for (int s = 0; s < steps; ++s) {
        rk4_step(rhs, s * h_dt, h_dt, x, work);
        if ((s + 1) % stride == 0 || s + 1 == steps) record((s + 1) * h_dt);
    }
    r.final_fidelity = r.fidelities.empty() ? 0.0 : r.fidelities.back();
    return r;
}

SimulationResult run_heom(const ProtocolSpec& spec, const CouplingAngle& angle,
                          const bath::SpectralDensity& j, double beta, const HeomOptions& opts) {
    if (angle.is_sta())
        throw std::invalid_argument("run_heom: sta coupling is not supported (the hierarchy "
                                    "assumes a static coupling operator); use run_pseudomode");
    if (!spec.supports_dynamics())
        throw std::invalid_argument("run_heom: the quasi-step drive has a divergent CD field; "
                                    "it is usable with the bounds module only");

    const Operator2 q_op = coupling_operator_at_angle(angle.phi);
    const auto ham = [&spec](double t) { return spec.h_cd(t); };
    const auto target = [&spec](double t) { return ground_state(spec.q(t), spec.delta); };
    const Operator2 rho0 = density(ground_state(spec.q(0.0), spec.delta));

    const auto decomposed = [&](int k) {
        return bath::decompose_correlation(j, beta, k, spec.tau);
    };

    int depth = opts.hierarchy_depth;
    int matsu = opts.matsubara;
    auto dec = decomposed(matsu);

    double dt = opts.dt > 0.0 ? opts.dt : auto_dt_heom(spec, j, dec, depth);

    const auto propagate = [&](const bath::CorrelationDecomposition& d, int nc, double step) {
        return heom_propagate(ham, q_op, d, rho0, spec.tau, step, nc, opts.max_ados, target);
    };

    SimulationResult base = propagate(dec, depth, dt);
    ConvergenceReport conv;

    if (opts.dt_check) {
        for (int round = 0;; ++round) {
            SimulationResult half = propagate(dec, depth, dt / 2.0);
            conv.delta_dt = std::abs(half.final_fidelity - base.final_fidelity);
            if (conv.delta_dt < opts.dt_tol) break;
            if (round >= opts.max_escalations) {
                conv.converged = false;
                conv.detail += "dt halving did not settle (delta " +
                               std::to_string(conv.delta_dt) + "); ";
                break;
            }
            dt /= 2.0;
            base = std::move(half);
        }
    }

    if (opts.convergence_check) {
        for (int round = 0;; ++round) {
            bool depth_ok = true, matsu_ok = true;
            if (hierarchy_size(static_cast<int>(dec.terms.size()), depth + 1) <= opts.max_ados) {
                const SimulationResult probe = propagate(dec, depth + 1, dt);
                conv.delta_depth = std::abs(probe.final_fidelity - base.final_fidelity);
                depth_ok = conv.delta_depth < opts.convergence_tol;
            } else {
                conv.detail += "depth probe skipped (ADO budget); ";
            }
            {
                const auto dec_probe = decomposed(matsu + 1);
                const SimulationResult probe = propagate(dec_probe, depth, dt);
                conv.delta_matsubara = std::abs(probe.final_fidelity - base.final_fidelity);
                matsu_ok = conv.delta_matsubara < opts.convergence_tol;
            }
            if (depth_ok && matsu_ok) break;
            if (round >= opts.max_escalations) {
                conv.converged = false;
                conv.detail += "hierarchy not converged: delta_depth " +
                               std::to_string(conv.delta_depth) + ", delta_matsubara " +
                               std::to_string(conv.delta_matsubara) + "; ";
                break;
            }
            if (!depth_ok) depth *= 2;
            if (!matsu_ok) {
                matsu *= 2;
                dec = decomposed(matsu);
            }
            base = propagate(dec, depth, dt);
        }
    }

    if (!opts.dt_check && !opts.convergence_check)
        conv.detail += "convergence checks disabled; ";

    conv.hierarchy_depth = depth;
    conv.matsubara = matsu;
    conv.dt = base.convergence.dt;  // actual step after rounding to the horizon
    base.convergence = conv;
    return base;
}

// ------------------------------ pseudomode ----------------------------------

namespace {

using Mat = Eigen::MatrixXcd;

// 2x2 (system) x N (mode) Kronecker product, system-major row ordering
Mat kron_sys(const Operator2& a, const Mat& b) {
    const Eigen::Index n = b.rows();
    Mat out(2 * n, 2 * n);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) out.block(r * n, c * n, n, n) = a(r, c) * b;
    return out;
}

Operator2 partial_trace_mode(const Mat& rho, Eigen::Index n) {
    Operator2 s;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            Complex acc{};
            for (Eigen::Index k = 0; k < n; ++k) acc += rho(r * n + k, c * n + k);
            s(r, c) = acc;
        }
    return s;
}

double thermal_occupation(double beta, double omega0) {
    if (std::isinf(beta) || beta * omega0 > 700.0) return 0.0;
    return 1.0 / std::expm1(beta * omega0);
}

struct PseudomodeRun {
    SimulationResult result;
    double top_population = 0.0;
};

PseudomodeRun pseudomode_once(const ProtocolSpec& spec, const CouplingAngle& angle,
                              const bath::SpectralDensity& j, double beta, int n_f, double dt) {
    const Eigen::Index n = n_f;
    const double nbar = thermal_occupation(beta, j.omega0);
    const double kappa = j.lambda / std::sqrt(2.0 * j.omega0);

    Mat b = Mat::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Mat bdag = b.adjoint();
    const Mat x_mode = b + bdag;
    const Mat number = bdag * b;

    const Mat h_mode = kron_sys(Operator2::identity(), j.omega0 * number);
    const Mat l_down = kron_sys(Operator2::identity(), b);
    const Mat l_up = kron_sys(Operator2::identity(), bdag);
    const Mat n_full = kron_sys(Operator2::identity(), number);
    const Mat nn1_full = kron_sys(Operator2::identity(), b * bdag);
    const double g_down = j.gamma * (nbar + 1.0);
    const double g_up = j.gamma * nbar;

    const auto hamiltonian = [&](double t) -> Mat {
        Mat h = kron_sys(spec.h_cd(t), Mat::Identity(n, n)) + h_mode;
        h += kappa * kron_sys(coupling_operator(angle, spec, t), x_mode);
        return h;
    };

    // initial state: |psi_g(0)><psi_g(0)| x thermal mode (renormalized on the
    // truncated ladder)
    Mat rho_mode = Mat::Zero(n, n);
    if (nbar == 0.0) {
        rho_mode(0, 0) = 1.0;
    } else {
        double z = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) z += std::exp(-beta * j.omega0 * k);
        for (Eigen::Index k = 0; k < n; ++k)
            rho_mode(k, k) = std::exp(-beta * j.omega0 * k) / z;
    }
    Mat rho = kron_sys(density(ground_state(spec.q(0.0), spec.delta)), rho_mode);

    const auto rhs = [&](double t, const Mat& in) -> Mat {
        const Mat h = hamiltonian(t);
        Mat d = Complex(0.0, -1.0) * (h * in - in * h);
        d += g_down * (l_down * in * l_up - 0.5 * (n_full * in + in * n_full));
        if (g_up > 0.0)
            d += g_up * (l_up * in * l_down - 0.5 * (nn1_full * in + in * nn1_full));
        return d;
    };

    const int steps = step_count(spec.tau, dt);
    const double h_dt = spec.tau / steps;

    PseudomodeRun run;
    SimulationResult& r = run.result;
    r.convergence.fock_levels = n_f;
    r.convergence.dt = h_dt;
    const int stride = std::max(1, steps / 2000);

    const auto record = [&](double t) {
        const Operator2 rs = partial_trace_mode(rho, n);
        r.times.push_back(t);
        r.states.push_back(rs);
        r.max_trace_error = std::max(r.max_trace_error, std::abs(rs.trace() - Complex(1.0)));
        r.max_hermiticity_error = std::max(r.max_hermiticity_error, rs.hermiticity_error());
        r.fidelities.push_back(fidelity(ground_state(spec.q(t), spec.delta), rs));
        double top = 0.0;
        for (Eigen::Index k = std::max<Eigen::Index>(0, n - 2); k < n; ++k) {
            double p = 0.0;
            for (int s = 0; s < 2; ++s) p += rho(s * n + k, s * n + k).real();
            top = std::max(top, p);
        }
        run.top_population = std::max(run.top_population, top);
    };

    record(0.0);
    for (int s = 0; s < steps; ++s) {
        const double t = s * h_dt;
        const Mat k1 = rhs(t, rho);
        const Mat k2 = rhs(t + 0.5 * h_dt, rho + 0.5 * h_dt * k1);
        const Mat k3 = rhs(t + 0.5 * h_dt, rho + 0.5 * h_dt * k2);
        const Mat k4 = rhs(t + h_dt, rho + h_dt * k3);
        rho += h_dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((s + 1) % stride == 0 || s + 1 == steps) record((s + 1) * h_dt);
    }
    r.final_fidelity = r.fidelities.back();
    r.convergence.top_fock_population = run.top_population;
    return run;
}

}  // namespace

SimulationResult run_pseudomode(const ProtocolSpec& spec, const CouplingAngle& angle,
                                const bath::SpectralDensity& j, double beta,
                                const PseudomodeOptions& opts) {
    if (j.kind != bath::SpectralDensity::Kind::UnderdampedBrownian)
        throw std::invalid_argument("run_pseudomode: needs the underdamped Brownian spectral "
                                    "density (one damped mode)");
    if (opts.fock_levels < 4)
        throw std::invalid_argument("run_pseudomode: need at least 4 Fock levels");
    if (!spec.supports_dynamics())
        throw std::invalid_argument("run_pseudomode: the quasi-step drive has a divergent CD "
                                    "field; it is usable with the bounds module only");
    if (!(beta > 0.0) && !std::isinf(beta))
        throw std::domain_error("run_pseudomode: beta must be > 0 or infinity");

    int n_f = opts.fock_levels;
    const auto auto_dt = [&](int levels) {
        const double theta_scale = std::max(spec.max_theta_dot(), 1e-12);
        return std::min({0.01 / j.omega0, 0.01 / theta_scale, 0.5 / (j.omega0 * levels),
                         spec.tau / 100.0});
    };
    double dt = opts.dt > 0.0 ? opts.dt : auto_dt(n_f);

    PseudomodeRun run = pseudomode_once(spec, angle, j, beta, n_f, dt);
    ConvergenceReport conv;

    // Fock-cutoff escalation; the step shrinks with the growing mode dimension
    for (int round = 0; run.top_population >= opts.fock_tol; ++round) {
        if (round >= opts.max_escalations) {
            conv.converged = false;
            conv.detail += "Fock cutoff violated: top-level population " +
                           std::to_string(run.top_population) + " at N_f = " +
                           std::to_string(n_f) + "; ";
            break;
        }
        n_f += 4;
        if (opts.dt <= 0.0) dt = std::min(dt, auto_dt(n_f));
        run = pseudomode_once(spec, angle, j, beta, n_f, dt);
    }

    if (opts.dt_check) {
        for (int round = 0;; ++round) {
            PseudomodeRun half = pseudomode_once(spec, angle, j, beta, n_f, dt / 2.0);
            conv.delta_dt = std::abs(half.result.final_fidelity - run.result.final_fidelity);
            if (conv.delta_dt < opts.dt_tol) break;
            if (round >= opts.max_escalations) {
                conv.converged = false;
                conv.detail += "dt halving did not settle (delta " +
                               std::to_string(conv.delta_dt) + "); ";
                break;
            }
            dt /= 2.0;
            run = std::move(half);
        }
    }

    conv.fock_levels = n_f;
    conv.dt = run.result.convergence.dt;
    conv.top_fock_population = run.top_population;
    run.result.convergence = conv;
    return run.result;
}

// ------------------------------ unitary -------------------------------------

SimulationResult run_unitary_isolated(const ProtocolSpec& spec, const UnitaryOptions& opts) {
    if (!spec.supports_dynamics())
        throw std::invalid_argument("run_unitary_isolated: the quasi-step drive has a divergent "
                                    "CD field; it is usable with the bounds module only");

    double energy_scale = 0.0;
    for (int k = 0; k <= 200; ++k) {
        const double t = spec.tau * k / 200.0;
        const double q = spec.q(t);
        energy_scale = std::max(energy_scale,
                                0.5 * std::sqrt(q * q + spec.delta * spec.delta) +
                                    std::abs(spec.theta_dot_at(t)));
    }
    double dt = opts.dt > 0.0 ? opts.dt
                              : std::min(spec.tau / 2000.0, 0.05 / std::max(energy_scale, 1e-12));
    const int steps = step_count(spec.tau, dt);
    const double h_dt = spec.tau / steps;

    const auto ham = [&](double t) { return opts.with_cd ? spec.h_cd(t) : spec.h0(t); };
    const auto rhs = [&](double t, const PureState2& psi) {
        const PureState2 hp = apply(ham(t), psi);
        return PureState2{Complex(0.0, -1.0) * hp.up, Complex(0.0, -1.0) * hp.down};
    };

    PureState2 psi = ground_state(spec.q(0.0), spec.delta);

    SimulationResult r;
    r.convergence.dt = h_dt;
    const int stride = std::max(1, steps / 2000);
    const auto record = [&](double t) {
        const Operator2 rho = density(psi);
        r.times.push_back(t);
        r.states.push_back(rho);
        r.max_trace_error = std::max(r.max_trace_error, std::abs(rho.trace() - Complex(1.0)));
        r.fidelities.push_back(fidelity(ground_state(spec.q(t), spec.delta), rho));
    };

    record(0.0);
    for (int s = 0; s < steps; ++s) {
        const double t = s * h_dt;
        const PureState2 k1 = rhs(t, psi);
        const auto shift = [&](const PureState2& k, double w) {
            return PureState2{psi.up + w * k.up, psi.down + w * k.down};
        };
        const PureState2 k2 = rhs(t + 0.5 * h_dt, shift(k1, 0.5 * h_dt));
        const PureState2 k3 = rhs(t + 0.5 * h_dt, shift(k2, 0.5 * h_dt));
        const PureState2 k4 = rhs(t + h_dt, shift(k3, h_dt));
        psi.up += h_dt / 6.0 * (k1.up + 2.0 * k2.up + 2.0 * k3.up + k4.up);
        psi.down += h_dt / 6.0 * (k1.down + 2.0 * k2.down + 2.0 * k3.down + k4.down);
        if ((s + 1) % stride == 0 || s + 1 == steps) record((s + 1) * h_dt);
    }
    r.final_fidelity = r.fidelities.back();
    return r;
}

}  // namespace cdbound::dynamics
