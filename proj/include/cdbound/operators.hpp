// operators.hpp — dense complex 2x2 operators, pure states, fidelity metrics
//
// Basis convention, used by every module: index 0 = |up>, index 1 = |down>,
// with sigma_z|up> = +|up>. The instantaneous Landau-Zener ground state in
// this ordering is psi_g = (-sin(theta), cos(theta)). Units: hbar = 1; all
// energies are O(1), so tolerances below are absolute.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace cdbound {

using Complex = std::complex<double>;

// absolute tolerances: closed-form identities vs integrator outputs
inline constexpr double kAlgebraicTol = 1e-12;
inline constexpr double kSolverTol = 1e-8;

struct Operator2 {
    std::array<Complex, 4> e{};  // row-major

    Complex& operator()(int r, int c) { return e[2 * r + c]; }
    const Complex& operator()(int r, int c) const { return e[2 * r + c]; }

    static Operator2 zero() { return {}; }
    static Operator2 identity() { return {{Complex(1), Complex(0), Complex(0), Complex(1)}}; }
    static Operator2 sigma_x() { return {{Complex(0), Complex(1), Complex(1), Complex(0)}}; }
    static Operator2 sigma_y() {
        return {{Complex(0), Complex(0, -1), Complex(0, 1), Complex(0)}};
    }
    static Operator2 sigma_z() { return {{Complex(1), Complex(0), Complex(0), Complex(-1)}}; }

    Complex trace() const { return e[0] + e[3]; }

    Operator2 adjoint() const {
        return {{std::conj(e[0]), std::conj(e[2]), std::conj(e[1]), std::conj(e[3])}};
    }

    double hermiticity_error() const {
        double m = 0.0;
        m = std::max(m, std::abs(e[0] - std::conj(e[0])));
        m = std::max(m, std::abs(e[3] - std::conj(e[3])));
        m = std::max(m, std::abs(e[1] - std::conj(e[2])));
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const auto& v : e) s += std::norm(v);
        return std::sqrt(s);
    }

    // eigenvalues of the Hermitian part, ascending
    std::array<double, 2> hermitian_eigenvalues() const {
        const double a = 0.5 * (e[0].real() + std::conj(e[0]).real());
        const double d = e[3].real();
        const Complex b = 0.5 * (e[1] + std::conj(e[2]));
        const double mean = 0.5 * (a + d);
        const double r = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
        return {mean - r, mean + r};
    }

    Operator2& operator+=(const Operator2& o) {
        for (int i = 0; i < 4; ++i) e[i] += o.e[i];
        return *this;
    }
    Operator2& operator-=(const Operator2& o) {
        for (int i = 0; i < 4; ++i) e[i] -= o.e[i];
        return *this;
    }
    Operator2& operator*=(Complex s) {
        for (auto& v : e) v *= s;
        return *this;
    }

    friend Operator2 operator+(Operator2 a, const Operator2& b) { return a += b; }
    friend Operator2 operator-(Operator2 a, const Operator2& b) { return a -= b; }
    friend Operator2 operator*(Complex s, Operator2 a) { return a *= s; }
    friend Operator2 operator*(double s, Operator2 a) { return a *= Complex(s); }

    friend Operator2 operator*(const Operator2& a, const Operator2& b) {
        return {{a.e[0] * b.e[0] + a.e[1] * b.e[2], a.e[0] * b.e[1] + a.e[1] * b.e[3],
                 a.e[2] * b.e[0] + a.e[3] * b.e[2], a.e[2] * b.e[1] + a.e[3] * b.e[3]}};
    }
};

inline Operator2 commutator(const Operator2& a, const Operator2& b) { return a * b - b * a; }

struct PureState2 {
    Complex up{};    // amplitude on |up>
    Complex down{};  // amplitude on |down>

    double norm() const { return std::sqrt(std::norm(up) + std::norm(down)); }

    static PureState2 up_state() { return {Complex(1), Complex(0)}; }
    static PureState2 down_state() { return {Complex(0), Complex(1)}; }

    static PureState2 normalized(Complex a, Complex b) {
        const double n = std::sqrt(std::norm(a) + std::norm(b));
        if (n == 0.0) throw std::invalid_argument("PureState2: cannot normalize the zero vector");
        return {a / n, b / n};
    }
};

inline PureState2 apply(const Operator2& a, const PureState2& s) {
    return {a.e[0] * s.up + a.e[1] * s.down, a.e[2] * s.up + a.e[3] * s.down};
}

inline Complex inner(const PureState2& a, const PureState2& b) {
    return std::conj(a.up) * b.up + std::conj(a.down) * b.down;
}

// |psi><psi|
inline Operator2 density(const PureState2& s) {
    return {{s.up * std::conj(s.up), s.up * std::conj(s.down), s.down * std::conj(s.up),
             s.down * std::conj(s.down)}};
}

inline Complex expectation(const PureState2& s, const Operator2& a) {
    return inner(s, apply(a, s));
}

inline void validate_density(const Operator2& rho, double tol, const char* who) {
    const double herm = rho.hermiticity_error();
    if (herm > tol)
        throw std::invalid_argument(std::string(who) +
                                    ": state is not Hermitian (max deviation " +
                                    std::to_string(herm) + ")");
    const double tr_dev = std::abs(rho.trace() - Complex(1.0));
    if (tr_dev > tol)
        throw std::invalid_argument(std::string(who) + ": state trace deviates from 1 by " +
                                    std::to_string(tr_dev));
}

// F = <target|rho|target>, clamped to [0,1]. `tol` bounds how far rho may
// deviate from a valid density matrix before rejection (integrator outputs
// carry up to kSolverTol of drift).
inline double fidelity(const PureState2& target, const Operator2& rho,
                       double tol = kSolverTol) {
    if (std::abs(target.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("fidelity: target state is not normalized");
    validate_density(rho, tol, "fidelity");
    const Complex f = inner(target, apply(rho, target));
    if (std::abs(f.imag()) >= 1e-10)
        throw std::invalid_argument("fidelity: <t|rho|t> has imaginary part " +
                                    std::to_string(f.imag()));
    return std::clamp(f.real(), 0.0, 1.0);
}

// Bures angle arccos(sqrt(F)), in [0, pi/2]
inline double bures_angle(const PureState2& target, const Operator2& rho,
                          double tol = kSolverTol) {
    return std::acos(std::sqrt(fidelity(target, rho, tol)));
}

// Instantaneous ground state of H0 = (q/2) sigma_z + (delta/2) sigma_x,
// eigenvalue -sqrt(delta^2+q^2)/2; theta = atan2(delta, q)/2.
inline PureState2 ground_state(double q, double delta) {
    if (!(delta > 0.0)) throw std::domain_error("ground_state requires delta > 0");
    const double theta = 0.5 * std::atan2(delta, q);
    return {Complex(-std::sin(theta)), Complex(std::cos(theta))};
}

}  // namespace cdbound
