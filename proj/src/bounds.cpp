#include "cdbound/bounds.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cdbound::bounds {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRichardsonRelTol = 1e-6;

using Fn = std::function<double(double)>;

// composite Simpson on [a, b] with n odd points
double simpson(const Fn& f, double a, double b, int n) {
    const double h = (b - a) / (n - 1);
    double acc = f(a) + f(b);
    for (int k = 1; k + 1 < n; ++k) acc += f(a + h * k) * (k % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// per-panel Simpson point allocation, proportional to length, odd, >= 3
std::vector<int> panel_points(const std::vector<double>& boundaries, int total_points) {
    const double span = boundaries.back() - boundaries.front();
    std::vector<int> n(boundaries.size() - 1, 0);
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
        const double len = boundaries[i + 1] - boundaries[i];
        n[i] = 2 * std::max(1, static_cast<int>(
                                   std::lround((total_points - 1) * len / span / 2.0))) +
               1;
    }
    return n;
}

double panel_simpson(const Fn& f, const std::vector<double>& boundaries,
                     const std::vector<int>& points, int refine = 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
        const double a = boundaries[i], b = boundaries[i + 1];
        if (!(b > a)) continue;
        const int n = refine * (points[i] - 1) + 1;
        acc += simpson(f, a, b, n);
    }
    return acc;
}

// Zeros of s(t) located by grid scan plus bisection (kinks of |sin(s)|).
std::vector<double> locate_sign_changes(const Fn& s, double a, double b, int scan_points) {
    std::vector<double> zeros;
    double t_prev = a;
    double s_prev = s(a);
    for (int k = 1; k < scan_points; ++k) {
        const double t = a + (b - a) * k / (scan_points - 1);
        const double v = s(t);
        if (v == 0.0) {
            zeros.push_back(t);
        } else if (s_prev != 0.0 && std::signbit(v) != std::signbit(s_prev)) {
            double lo = t_prev, hi = t;
            double s_lo = s_prev;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double s_mid = s(mid);
                if (s_mid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (std::signbit(s_mid) == std::signbit(s_lo)) {
                    lo = mid;
                    s_lo = s_mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push_back(0.5 * (lo + hi));
        }
        t_prev = t;
        s_prev = v;
    }
    return zeros;
}

struct TwoPass {
    double coarse = 0.0;
    double fine = 0.0;
};

// coarse pass plus a pass with every panel step halved (the halving is per
// panel so kink-pinned 3-point panels genuinely refine too)
TwoPass two_resolution(const Fn& f, const std::vector<double>& boundaries, int grid_points) {
    const auto points = panel_points(boundaries, grid_points);
    return {panel_simpson(f, boundaries, points), panel_simpson(f, boundaries, points, 2)};
}

BoundResult finish(double l_coarse, double l_fine, double bath_propagated,
                   std::vector<double> times, std::vector<double> integrand) {
    BoundResult r;
    r.l_bd = l_fine;
    const double diff = std::abs(l_fine - l_coarse);
    r.under_resolved = std::abs(l_fine) > 1e-14 && diff > kRichardsonRelTol * std::abs(l_fine);
    r.error_estimate = diff / 15.0 + bath_propagated;
    r.valid = r.l_bd <= kPi / 2.0;
    r.fidelity_lower_bound = r.valid ? std::cos(r.l_bd) * std::cos(r.l_bd) : 0.0;
    r.times = std::move(times);
    r.integrand = std::move(integrand);
    return r;
}

BoundResult exact_zero(double tau, int trace_points) {
    BoundResult r;
    r.l_bd = 0.0;
    r.valid = true;
    r.fidelity_lower_bound = 1.0;
    r.times.resize(trace_points);
    r.integrand.assign(trace_points, 0.0);
    for (int k = 0; k < trace_points; ++k) r.times[k] = tau * k / (trace_points - 1);
    return r;
}

void require_grid(int grid_points) {
    if (grid_points < 101 || grid_points % 2 == 0)
        throw std::invalid_argument("bounds: grid_points must be odd and >= 101");
}

}  // namespace

BoundResult l_bd_lz(const ProtocolSpec& spec, const CouplingAngle& angle,
                    const bath::BathFunctionals& bath, int grid_points) {
    require_grid(grid_points);
    if (bath.tau < spec.tau * (1.0 - 1e-12))
        throw std::domain_error("l_bd_lz: bath functionals tabulated on a shorter horizon "
                                "than the protocol duration");

    const int trace_points = std::min(grid_points, 2001);
    // exact-STA coupling or a decoupled bath: the integrand vanishes identically
    if (angle.is_sta() || bath.is_zero()) return exact_zero(spec.tau, trace_points);

    const double phi = angle.phi;
    const auto mismatch = [&](double t) { return spec.theta_at(t) - phi; };
    const auto integrand_with = [&](double S, double dX) {
        return [&spec, &bath, phi, S, dX](double t) {
            const double s = spec.theta_at(t) - phi;
            const double x = bath.X_at(t) + dX;
            const double c = std::cos(s);
            return std::abs(2.0 * std::sin(s)) * std::sqrt(S + c * c * x * x);
        };
    };
    const Fn f = integrand_with(bath.S, 0.0);

    std::vector<double> boundaries = locate_sign_changes(mismatch, 0.0, spec.tau, grid_points);
    boundaries.insert(boundaries.begin(), 0.0);
    boundaries.push_back(spec.tau);

    const auto points = panel_points(boundaries, grid_points);
    const double coarse = panel_simpson(f, boundaries, points);
    const double fine = panel_simpson(f, boundaries, points, 2);

    // propagate the bath-side uncertainty (quadrature + interpolation)
    const Fn f_pert = integrand_with(bath.S + bath.S_error, bath.X_error + bath.X_interp_error);
    const double bath_prop = std::abs(panel_simpson(f_pert, boundaries, points) - coarse);

    std::vector<double> times(trace_points), trace(trace_points);
    for (int k = 0; k < trace_points; ++k) {
        times[k] = spec.tau * k / (trace_points - 1);
        trace[k] = f(times[k]);
    }
    return finish(coarse, fine, bath_prop, std::move(times), std::move(trace));
}

FidelityBound fidelity_bound_from(double l_bd) {
    if (l_bd <= kPi / 2.0) {
        const double c = std::cos(l_bd);
        return {c * c, true};
    }
    return {0.0, false};  // vacuous: the Bures angle never exceeds pi/2
}

FidelityBound fidelity_bound(const BoundResult& r) { return fidelity_bound_from(r.l_bd); }

double weak_coupling_bound(const ProtocolSpec& spec, const CouplingAngle& angle,
                           const bath::SpectralDensity& j, double beta, int grid_points) {
    require_grid(grid_points);
    if (angle.is_sta()) return 1.0;  // the mismatch integral vanishes
    const double S = bath::compute_S(j, beta).value;
    if (S == 0.0) return 1.0;

    const double phi = angle.phi;
    const auto mismatch = [&](double t) { return spec.theta_at(t) - phi; };
    const Fn f = [&](double t) { return std::abs(std::sin(spec.theta_at(t) - phi)); };

    std::vector<double> boundaries = locate_sign_changes(mismatch, 0.0, spec.tau, grid_points);
    boundaries.insert(boundaries.begin(), 0.0);
    boundaries.push_back(spec.tau);
    const double integral =
        panel_simpson(f, boundaries, panel_points(boundaries, grid_points), 2);
    return 1.0 - 4.0 * S * integral * integral;
}

void GeneralSystemSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("general bound: dimension must be >= 1");
    if (couplings.empty()) throw std::invalid_argument("general bound: no coupling operators");
    if (baths.size() != couplings.size())
        throw std::invalid_argument("general bound: need one bath channel per coupling operator");
    if (!target_state) throw std::invalid_argument("general bound: missing target trajectory");
    for (const auto& a : couplings) {
        if (a.rows() != dim || a.cols() != dim)
            throw std::invalid_argument("general bound: coupling operator dimension mismatch");
        const double herm = (a - a.adjoint()).cwiseAbs().maxCoeff();
        if (herm > 1e-12)
            throw std::invalid_argument("general bound: coupling operator is not Hermitian "
                                        "(deviation " + std::to_string(herm) + ")");
    }
    for (const auto& b : baths)
        if (!b.X) throw std::invalid_argument("general bound: bath channel missing X_t");
}

BoundResult l_bd_general(const GeneralSystemSpec& sys, double tau, int grid_points) {
    require_grid(grid_points);
    if (!(tau > 0.0)) throw std::invalid_argument("l_bd_general: tau must be > 0");
    sys.validate();

    const std::size_t nb = sys.couplings.size();
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(sys.dim, sys.dim);

    const Fn sqrt_g = [&](double t) {
        const Eigen::VectorXcd psi = sys.target_state(t);
        if (psi.size() != sys.dim)
            throw std::runtime_error("l_bd_general: trajectory dimension mismatch");
        if (std::abs(psi.norm() - 1.0) > 1e-10)
            throw std::runtime_error("l_bd_general: trajectory state is not normalized at t = " +
                                     std::to_string(t));
        double g = 0.0;
        std::vector<Eigen::VectorXcd> a_psi(nb);
        std::vector<double> mean(nb);
        std::vector<double> x(nb);
        for (std::size_t i = 0; i < nb; ++i) {
            a_psi[i] = sys.couplings[i] * psi;
            mean[i] = psi.dot(a_psi[i]).real();
            x[i] = sys.baths[i].X(t);
            const Eigen::VectorXcd shifted = a_psi[i] + psi;  // (A_i + I)|psi>
            g += sys.baths[i].S * shifted.squaredNorm();
        }
        std::complex<double> cov_sum{};
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t k = 0; k < nb; ++k) {
                const std::complex<double> cov = a_psi[i].dot(a_psi[k]) - mean[i] * mean[k];
                cov_sum += cov * (x[i] * x[k]);
            }
        g += cov_sum.real();  // the ij-symmetrized imaginary parts cancel
        if (g < -1e-12)
            throw std::runtime_error("l_bd_general: negative variance g = " + std::to_string(g) +
                                     " (inconsistent couplings, baths, or trajectory)");
        return std::sqrt(std::max(0.0, g));
    };

    std::vector<double> boundaries{0.0, tau};
    const auto [coarse, fine] = two_resolution(sqrt_g, boundaries, grid_points);

    const int trace_points = std::min(grid_points, 2001);
    std::vector<double> times(trace_points), trace(trace_points);
    for (int k = 0; k < trace_points; ++k) {
        times[k] = tau * k / (trace_points - 1);
        trace[k] = sqrt_g(times[k]);
    }
    return finish(coarse, fine, 0.0, std::move(times), std::move(trace));
}

}  // namespace cdbound::bounds
