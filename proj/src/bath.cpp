#include "cdbound/bath.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "cdbound/csv_io.hpp"

namespace cdbound::bath {

namespace {

constexpr double kPi = std::numbers::pi;

bool beta_is_zero_temperature(double beta) { return std::isinf(beta); }

void require_beta(double beta) {
    if (std::isnan(beta) || beta <= 0.0)
        throw std::domain_error("bath: beta must be > 0 (or infinity for zero temperature)");
}

// coth(beta w / 2) with the zero-temperature limit folded in
double coth_half(double beta, double w) {
    if (beta_is_zero_temperature(beta)) return 1.0;
    const double x = 0.5 * beta * w;
    if (x > 19.0) return 1.0;
    return 1.0 / std::tanh(x);
}

// coth of a complex argument with Re z > 0, overflow-safe
Complex coth(Complex z) {
    const Complex e = std::exp(-2.0 * z);
    return (1.0 + e) / (1.0 - e);
}

// Oscillation-aligned panel boundaries: multiples of `step` in (lo, hi),
// capped; used to split (1 - cos w t) and cos/sin integrands.
std::vector<double> oscillation_seeds(double step, double lo, double hi, int cap) {
    std::vector<double> s;
    if (!(step > 0.0)) return s;
    const double k0 = std::floor(lo / step) + 1.0;
    for (int i = 0; i < cap; ++i) {
        const double w = (k0 + i) * step;
        if (w >= hi) break;
        s.push_back(w);
    }
    return s;
}

// peak-resolving splits around the resonance for the underdamped form
std::vector<double> peak_seeds(const SpectralDensity& j, double lo, double hi) {
    std::vector<double> s;
    if (j.kind != SpectralDensity::Kind::UnderdampedBrownian) return s;
    for (double k : {-5.0, -2.0, -0.5, 0.5, 2.0, 5.0}) {
        const double w = j.omega0 + k * j.gamma;
        if (w > lo && w < hi) s.push_back(w);
    }
    return s;
}

std::vector<double> to_tail_u(const std::vector<double>& omegas, double w_start) {
    std::vector<double> u;
    u.reserve(omegas.size());
    for (double w : omegas)
        if (w > w_start) u.push_back(1.0 - w_start / w);
    return u;
}

struct SplitQuadrature {
    quad::Result core;
    quad::Result tail;

    double value() const { return core.value + tail.value; }
    double error() const { return core.error + tail.error; }
};

// Integrates f over [lo, inf): adaptive on [lo, w_split], mapped tail beyond.
SplitQuadrature integrate_semi_infinite(const quad::Fn& f, double lo, double w_split,
                                        std::vector<double> core_seeds,
                                        std::vector<double> tail_u_seeds,
                                        const quad::Options& opt) {
    SplitQuadrature r;
    r.core = quad::integrate_seeded(f, lo, w_split, std::move(core_seeds), opt);
    r.tail = quad::integrate_tail(f, w_split, std::move(tail_u_seeds), opt);
    return r;
}

}  // namespace

SpectralDensity SpectralDensity::underdamped(double omega0, double gamma, double lambda) {
    if (!(omega0 > 0.0)) throw std::invalid_argument("spectral density: omega0 must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("spectral density: gamma must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("spectral density: lambda must be >= 0");
    SpectralDensity j;
    j.kind = Kind::UnderdampedBrownian;
    j.omega0 = omega0;
    j.gamma = gamma;
    j.lambda = lambda;
    j.reference_frequency = omega0;
    return j;
}

SpectralDensity SpectralDensity::custom_from(std::function<double(double)> jfn,
                                             double reference_frequency) {
    if (!(reference_frequency > 0.0))
        throw std::invalid_argument("spectral density: reference frequency must be > 0");
    SpectralDensity j;
    j.kind = Kind::Custom;
    j.custom = std::move(jfn);
    j.reference_frequency = reference_frequency;
    return j;
}

SpectralDensity SpectralDensity::from_csv(const std::string& path, double tail_exponent) {
    auto [w, jw] = read_two_column_csv(path);
    if (w.size() < 3) throw std::runtime_error(path + ": need at least 3 (w, J) rows");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0) throw std::runtime_error(path + ": negative frequency in table");
        if (jw[i] < 0.0) throw std::runtime_error(path + ": negative J(w) in table");
    }
    if (!(tail_exponent > 1.0))
        throw std::runtime_error("custom spectral density: tail exponent must be > 1 "
                                 "for an integrable J/w tail");
    // peak position sets the quadrature reference scale
    std::size_t peak = 0;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (jw[i] > jw[peak]) peak = i;
    const double ref = w[peak] > 0.0 ? w[peak] : w.back();

    auto spline = std::make_shared<CubicSpline>(w, jw);
    const double w_first = w.front(), w_last = w.back();
    const double j_first = jw.front(), j_last = jw.back();
    auto fn = [spline, w_first, w_last, j_first, j_last, tail_exponent](double omega) {
        if (omega <= 0.0) return 0.0;
        if (omega < w_first) return j_first * omega / w_first;  // anchored at J(0)=0
        if (omega > w_last) return j_last * std::pow(w_last / omega, tail_exponent);
        return std::max(0.0, spline->value(omega));
    };
    return custom_from(fn, ref);
}

double SpectralDensity::value(double omega) const {
    if (omega <= 0.0) return 0.0;
    if (kind == Kind::Custom) return custom(omega);
    const double d = omega * omega - omega0 * omega0;
    return gamma * lambda * lambda * omega / (d * d + gamma * gamma * omega * omega);
}

bool SpectralDensity::is_zero() const {
    if (kind == Kind::UnderdampedBrownian) return lambda == 0.0;
    for (double s : {1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0})
        if (value(s * reference_frequency) != 0.0) return false;
    return true;
}

QuadValue compute_S(const SpectralDensity& j, double beta) {
    require_beta(beta);
    if (j.is_zero()) return {0.0, 0.0};

    const double wref = j.reference_frequency;
    const double eps = 1e-6 * wref;
    const auto f = [&j, beta](double w) { return j.value(w) / kPi * coth_half(beta, w); };

    // [0, eps]: series patch around the coth singularity. The integrand tends
    // to the finite limit 2 J'(0)/(pi beta); trapezoid between the limit and
    // f(eps) is exact to O(eps^3).
    const double f_eps = f(eps);
    const double limit0 =
        beta_is_zero_temperature(beta) ? 0.0 : 2.0 * (j.value(eps) / eps) / (kPi * beta);
    const double patch = 0.5 * (limit0 + f_eps) * eps;
    const double patch_err = std::abs(f_eps - limit0) * eps;

    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-16 * std::max(f_eps * wref, 1e-30);
    auto r = integrate_semi_infinite(f, eps, wref, peak_seeds(j, eps, wref),
                                     to_tail_u({j.omega0 + 2.0 * j.gamma, j.omega0 + 5.0 * j.gamma,
                                                j.omega0 + 20.0 * j.gamma, 4.0 * wref, 16.0 * wref},
                                               wref),
                                     opt);
    quad::require_integrable(r.core, "compute_S");
    quad::require_integrable(r.tail, "compute_S");
    return {patch + r.value(), patch_err + r.error()};
}

QuadValue compute_X(const SpectralDensity& j, double t) {
    if (t < 0.0) throw std::domain_error("compute_X requires t >= 0");
    if (t == 0.0 || j.is_zero()) return {0.0, 0.0};

    const double wref = j.reference_frequency;
    // 1 - cos(w t) written as 2 sin^2(w t / 2): nonnegative, no cancellation
    const auto f = [&j, t](double w) {
        const double s = std::sin(0.5 * w * t);
        return 4.0 / (kPi * w) * j.value(w) * s * s;
    };

    const double period = 2.0 * kPi / t;
    auto core_seeds = oscillation_seeds(period, 0.0, wref, 128);
    {
        auto ps = peak_seeds(j, 0.0, wref);
        core_seeds.insert(core_seeds.end(), ps.begin(), ps.end());
    }
    std::vector<double> tail_omegas = oscillation_seeds(period, wref, wref + 512.0 * period, 512);
    for (double k : {2.0, 5.0, 20.0}) tail_omegas.push_back(j.omega0 + k * j.gamma);
    tail_omegas.push_back(4.0 * wref);
    tail_omegas.push_back(16.0 * wref);

    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-12;  // absolute floor: X vanishes at small t
    opt.max_panels = 40000;
    auto r = integrate_semi_infinite(f, 0.0, wref, std::move(core_seeds),
                                     to_tail_u(tail_omegas, wref), opt);
    quad::require_integrable(r.core, "compute_X");
    quad::require_integrable(r.tail, "compute_X");
    return {r.value(), r.error()};
}

QuadValue compute_X_limit(const SpectralDensity& j) {
    if (j.is_zero()) return {0.0, 0.0};
    const double wref = j.reference_frequency;
    const double eps = 1e-6 * wref;
    const auto f = [&j](double w) { return 2.0 / (kPi * w) * j.value(w); };
    const double patch = 0.5 * f(eps) * eps;  // integrand -> (2/pi) J'(0) at w -> 0

    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = 1e-16 * std::max(f(eps) * wref, 1e-30);
    auto r = integrate_semi_infinite(f, eps, wref, peak_seeds(j, eps, wref),
                                     to_tail_u({j.omega0 + 5.0 * j.gamma, 4.0 * wref, 16.0 * wref},
                                               wref),
                                     opt);
    quad::require_integrable(r.core, "compute_X_limit");
    quad::require_integrable(r.tail, "compute_X_limit");
    return {patch + r.value(), patch * (eps / wref) + r.error()};
}

Complex correlation_reference(const SpectralDensity& j, double beta, double t) {
    require_beta(beta);
    if (j.is_zero()) return {0.0, 0.0};
    const double wref = j.reference_frequency;
    const double eps = 1e-6 * wref;

    const auto real_part = [&j, beta, t](double w) {
        return j.value(w) / kPi * coth_half(beta, w) * std::cos(w * t);
    };
    const auto imag_part = [&j, t](double w) { return -j.value(w) / kPi * std::sin(w * t); };

    const double half_period = t > 0.0 ? kPi / t : 0.0;
    auto seeds = oscillation_seeds(half_period, eps, wref, 128);
    {
        auto ps = peak_seeds(j, eps, wref);
        seeds.insert(seeds.end(), ps.begin(), ps.end());
    }
    std::vector<double> tail_omegas =
        oscillation_seeds(half_period, wref, wref + 512.0 * std::max(half_period, wref), 512);
    for (double k : {2.0, 5.0, 20.0}) tail_omegas.push_back(j.omega0 + k * j.gamma);
    tail_omegas.push_back(4.0 * wref);

    quad::Options opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-13 * std::max(j.value(j.omega0) * wref, 1e-30);
    opt.max_panels = 40000;

    // the coth singularity patch (real part only; sin kills the imag one)
    const double limit0 =
        beta_is_zero_temperature(beta) ? 0.0 : 2.0 * (j.value(eps) / eps) / (kPi * beta);
    const double patch = 0.5 * (limit0 + real_part(eps)) * eps;

    auto re = integrate_semi_infinite(real_part, eps, wref, seeds, to_tail_u(tail_omegas, wref),
                                      opt);
    auto im = integrate_semi_infinite(imag_part, eps, wref, seeds, to_tail_u(tail_omegas, wref),
                                      opt);
    return {patch + re.value(), im.value()};
}

double BathFunctionals::X_at(double t) const {
    if (times.empty()) return 0.0;
    const double slack = 1e-9 * std::max(1.0, tau);
    if (t < -slack || t > tau + slack)
        throw std::domain_error("BathFunctionals: X queried outside the tabulated range");
    return std::max(0.0, X_spline.value(std::clamp(t, 0.0, tau)));
}

BathFunctionals BathFunctionals::tabulate(const SpectralDensity& j, double beta, double tau,
                                          int points) {
    require_beta(beta);
    if (!(tau > 0.0)) throw std::invalid_argument("BathFunctionals: tau must be > 0");
    if (points < 9) throw std::invalid_argument("BathFunctionals: need at least 9 grid points");

    BathFunctionals b;
    b.beta = beta;
    b.tau = tau;
    const auto s = compute_S(j, beta);
    b.S = s.value;
    b.S_error = s.error;

    b.times.resize(points);
    b.X_values.assign(points, 0.0);
    for (int k = 0; k < points; ++k) b.times[k] = tau * k / (points - 1);

    if (j.is_zero()) {
        b.X_spline = CubicSpline(b.times, b.X_values);
        return b;
    }

    for (int k = 0; k < points; ++k) {
        const auto x = compute_X(j, b.times[k]);
        b.X_values[k] = std::max(0.0, x.value);
        b.X_error = std::max(b.X_error, x.error);
    }
    b.X_spline = CubicSpline(b.times, b.X_values);

    // interpolation error probed at interval midpoints (every 4th interval)
    for (int k = 0; k + 1 < points; k += 4) {
        const double mid = 0.5 * (b.times[k] + b.times[k + 1]);
        const double exact = compute_X(j, mid).value;
        b.X_interp_error = std::max(b.X_interp_error, std::abs(b.X_spline.value(mid) - exact));
    }
    return b;
}

Complex CorrelationDecomposition::value(double t) const {
    Complex c{};
    for (const auto& term : terms) c += term.amplitude * std::exp(-term.rate * t);
    return c;
}

double CorrelationDecomposition::max_rate() const {
    double m = 0.0;
    for (const auto& term : terms) m = std::max(m, std::abs(term.rate));
    return m;
}

CorrelationDecomposition decompose_correlation(const SpectralDensity& j, double beta, int K,
                                               double horizon, double tolerance) {
    require_beta(beta);
    if (j.kind != SpectralDensity::Kind::UnderdampedBrownian)
        throw std::invalid_argument("decompose_correlation supports the underdamped Brownian "
                                    "spectral density only");
    if (K < 0) throw std::invalid_argument("decompose_correlation: K must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("decompose_correlation: horizon must be > 0");

    CorrelationDecomposition d;
    d.notes = "resonant pole pair + Matsubara terms; no low-temperature residual correction";
    if (j.lambda == 0.0) {
        d.notes = "zero coupling: empty decomposition";
        return d;
    }

    const double g_half = 0.5 * j.gamma;
    if (!(j.omega0 > g_half))
        throw std::invalid_argument("decompose_correlation: overdamped regime (omega0 <= gamma/2) "
                                    "is not supported");
    const double cap_omega = std::sqrt(j.omega0 * j.omega0 - g_half * g_half);
    const double pref = j.lambda * j.lambda / (4.0 * cap_omega);

    const bool zero_t = beta_is_zero_temperature(beta);
    const Complex z_plus(cap_omega, g_half);   // pole Omega + i Gamma
    const Complex z_minus(cap_omega, -g_half);
    const Complex coth_plus = zero_t ? Complex(1.0) : coth(0.5 * beta * z_plus);
    const Complex coth_minus = zero_t ? Complex(1.0) : coth(0.5 * beta * z_minus);

    CorrelationTerm plus;   // exponent exp(-(Gamma - i Omega) t)
    plus.rate = Complex(g_half, -cap_omega);
    plus.amplitude = pref * (coth_plus - 1.0);
    CorrelationTerm minus;  // exponent exp(-(Gamma + i Omega) t)
    minus.rate = Complex(g_half, cap_omega);
    minus.amplitude = pref * (coth_minus + 1.0);
    // conjugate-series coefficients: the two resonant exponents swap
    plus.amplitude_conj = std::conj(minus.amplitude);
    minus.amplitude_conj = std::conj(plus.amplitude);
    d.terms.push_back(plus);
    d.terms.push_back(minus);

    if (!zero_t) {
        for (int k = 1; k <= K; ++k) {
            const double nu = 2.0 * kPi * k / beta;
            const double denom = (nu * nu + j.omega0 * j.omega0) * (nu * nu + j.omega0 * j.omega0) -
                                 j.gamma * j.gamma * nu * nu;
            CorrelationTerm m;
            m.rate = Complex(nu, 0.0);
            m.amplitude = Complex(-2.0 * j.gamma * j.lambda * j.lambda / beta * nu / denom, 0.0);
            m.amplitude_conj = m.amplitude;  // real amplitude, real rate
            d.terms.push_back(m);
            ++d.matsubara_count;
        }
    } else {
        d.notes += "; zero temperature: Matsubara series vanishes termwise (branch-cut tail "
                   "left to the reconstruction error)";
    }

    // score the reconstruction against direct quadrature
    const int samples = 33;
    double err = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = horizon * i / (samples - 1);
        err = std::max(err, std::abs(d.value(t) - correlation_reference(j, beta, t)));
    }
    d.reconstruction_error = err;
    if (err > tolerance)
        throw std::runtime_error(
            "decompose_correlation: reconstruction error " + std::to_string(err) +
            " exceeds tolerance " + std::to_string(tolerance) +
            "; increase the Matsubara count K");
    return d;
}

}  // namespace cdbound::bath
