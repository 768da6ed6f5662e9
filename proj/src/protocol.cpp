#include "cdbound/protocol.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cdbound/csv_io.hpp"

namespace cdbound {

namespace {
constexpr double kPi = std::numbers::pi;
}

double theta(double q, double delta) {
    if (!(delta > 0.0)) throw std::domain_error("theta requires delta > 0");
    return 0.5 * std::atan2(delta, q);
}

double theta_dot(double q, double qdot, double delta) {
    if (!(delta > 0.0)) throw std::domain_error("theta_dot requires delta > 0");
    return -qdot * delta / (2.0 * (delta * delta + q * q));
}

std::string family_name(DriveFamily f) {
    switch (f) {
        case DriveFamily::Linear: return "linear";
        case DriveFamily::Sinh: return "sinh";
        case DriveFamily::QuasiStep: return "quasi-step";
        case DriveFamily::Tabulated: return "tabulated";
    }
    return "?";
}

void ProtocolSpec::validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("protocol: delta must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("protocol: tau must be > 0");
    if (family == DriveFamily::Sinh) {
        if (!(steepness > 0.0)) throw std::invalid_argument("protocol: sinh steepness must be > 0");
        if (steepness * tau * 0.5 > 700.0)
            throw std::invalid_argument("protocol: sinh steepness overflows (a*tau/2 > 700)");
    }
    // theta continuity over a >=1000-point grid (no branch jumps)
    if (family != DriveFamily::QuasiStep) {
        const int m = 1001;
        double prev = theta_at(0.0);
        for (int k = 1; k < m; ++k) {
            const double th = theta_at(tau * k / (m - 1));
            if (std::abs(th - prev) >= kPi / 4.0)
                throw std::invalid_argument("protocol: theta_t jumps by more than pi/4 "
                                            "between grid neighbours; drive is too wild");
            prev = th;
        }
    }
}

ProtocolSpec ProtocolSpec::linear(double delta, double tau, double q_i, double q_f) {
    ProtocolSpec p;
    p.family = DriveFamily::Linear;
    p.delta = delta;
    p.tau = tau;
    p.q_i = q_i;
    p.q_f = q_f;
    p.validate();
    return p;
}

ProtocolSpec ProtocolSpec::sinh_drive(double delta, double tau, double q_i, double q_f,
                                      double steepness) {
    ProtocolSpec p;
    p.family = DriveFamily::Sinh;
    p.delta = delta;
    p.tau = tau;
    p.q_i = q_i;
    p.q_f = q_f;
    p.steepness = steepness;
    p.validate();
    return p;
}

ProtocolSpec ProtocolSpec::quasi_step(double delta, double tau, double q_i, double q_f,
                                      double plateau) {
    ProtocolSpec p;
    p.family = DriveFamily::QuasiStep;
    p.delta = delta;
    p.tau = tau;
    p.q_i = q_i;
    p.q_f = q_f;
    p.plateau = plateau;
    p.validate();
    return p;
}

ProtocolSpec ProtocolSpec::tabulated(double delta, std::vector<double> t, std::vector<double> q) {
    if (t.size() < 4)
        throw std::invalid_argument("tabulated protocol: need at least 4 (t, q) rows");
    if (std::abs(t.front()) > 1e-12)
        throw std::invalid_argument("tabulated protocol: first time must be 0");
    ProtocolSpec p;
    p.family = DriveFamily::Tabulated;
    p.delta = delta;
    p.tau = t.back();
    p.q_i = q.front();
    p.q_f = q.back();
    p.table = CubicSpline(std::move(t), std::move(q));
    p.validate();
    return p;
}

ProtocolSpec ProtocolSpec::tabulated_from_csv(double delta, const std::string& path) {
    auto [t, q] = read_two_column_csv(path);
    return tabulated(delta, std::move(t), std::move(q));
}

double ProtocolSpec::clamp_time(double t) const {
    const double slack = 1e-9 * std::max(1.0, tau);
    if (t < -slack || t > tau + slack)
        throw std::domain_error("protocol: time " + std::to_string(t) + " outside [0, " +
                                std::to_string(tau) + "]");
    return std::clamp(t, 0.0, tau);
}

double ProtocolSpec::q(double t) const {
    const double tc = clamp_time(t);
    switch (family) {
        case DriveFamily::Linear:
            return q_i + (q_f - q_i) * (tc / tau);
        case DriveFamily::Sinh: {
            const double mid = 0.5 * (q_i + q_f);
            const double half = 0.5 * (q_f - q_i);
            return mid + half * std::sinh(steepness * (tc - 0.5 * tau)) /
                             std::sinh(steepness * 0.5 * tau);
        }
        case DriveFamily::QuasiStep:
            if (tc == 0.0) return q_i;
            if (tc == tau) return q_f;
            return plateau;
        case DriveFamily::Tabulated:
            return table.value(tc);
    }
    return 0.0;
}

double ProtocolSpec::qdot(double t) const {
    const double tc = clamp_time(t);
    switch (family) {
        case DriveFamily::Linear:
            return (q_f - q_i) / tau;
        case DriveFamily::Sinh: {
            const double half = 0.5 * (q_f - q_i);
            return half * steepness * std::cosh(steepness * (tc - 0.5 * tau)) /
                   std::sinh(steepness * 0.5 * tau);
        }
        case DriveFamily::QuasiStep:
            throw std::logic_error("quasi-step drive has no finite derivative; "
                                   "it is usable with the bounds module only");
        case DriveFamily::Tabulated:
            return table.derivative(tc);
    }
    return 0.0;
}

Operator2 ProtocolSpec::h0(double t) const {
    const double qt = q(t);
    Operator2 h = 0.5 * qt * Operator2::sigma_z();
    h += 0.5 * delta * Operator2::sigma_x();
    return h;
}

Operator2 ProtocolSpec::h1(double t) const {
    return theta_dot_at(t) * Operator2::sigma_y();
}

Operator2 ProtocolSpec::h_cd(double t) const { return h0(t) + h1(t); }

double ProtocolSpec::max_theta_dot(int samples) const {
    double m = 0.0;
    for (int k = 0; k < samples; ++k)
        m = std::max(m, std::abs(theta_dot_at(tau * k / (samples - 1))));
    return m;
}

CouplingAngle CouplingAngle::fixed(double phi) {
    if (!(phi >= 0.0 && phi < kPi))
        throw std::invalid_argument("coupling angle phi must lie in [0, pi)");
    return {Mode::Static, phi};
}

CouplingAngle CouplingAngle::sta() { return {Mode::Sta, 0.0}; }

double CouplingAngle::angle_at(const ProtocolSpec& p, double t) const {
    return is_sta() ? p.theta_at(t) : phi;
}

Operator2 coupling_operator_at_angle(double phi) {
    Operator2 m = std::cos(2.0 * phi) * Operator2::sigma_z();
    m += std::sin(2.0 * phi) * Operator2::sigma_x();
    return m;
}

Operator2 coupling_operator(const CouplingAngle& angle, const ProtocolSpec& p, double t) {
    return coupling_operator_at_angle(angle.angle_at(p, t));
}

double q_optimal(double phi, double delta) {
    const double s = std::sin(2.0 * phi);
    if (std::abs(s) < 1e-12)
        throw std::domain_error("q_optimal: coupling is purely sigma_z (2 phi multiple of pi); "
                                "no finite plateau exists");
    return delta * std::cos(2.0 * phi) / s;
}

}  // namespace cdbound
