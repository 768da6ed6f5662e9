// protocol.hpp — drive families q(t), the mixing angle theta_t, and the
// time-dependent Hamiltonians of the counter-diabatically driven LZ model:
//   H0 = (q/2) sigma_z + (delta/2) sigma_x,  H1 = theta_dot sigma_y.
#pragma once

#include <string>
#include <vector>

#include "cdbound/operators.hpp"
#include "cdbound/spline.hpp"

namespace cdbound {

// Continuous arccot branch: theta = atan2(delta, q)/2, in (0, pi/2) for
// delta > 0. A raw arccot would jump at q = 0.
double theta(double q, double delta);

// d(theta)/dt = -qdot * delta / (2 (delta^2 + q^2))
double theta_dot(double q, double qdot, double delta);

enum class DriveFamily { Linear, Sinh, QuasiStep, Tabulated };

std::string family_name(DriveFamily f);

struct ProtocolSpec {
    DriveFamily family = DriveFamily::Sinh;
    double delta = 1.0;  // minimum gap, > 0
    double tau = 2.0;    // total duration, > 0
    double q_i = -1.0;
    double q_f = 1.0;
    double steepness = 3.0;  // sinh family parameter a
    double plateau = 0.0;    // quasi-step interior value
    CubicSpline table;       // tabulated family

    static ProtocolSpec linear(double delta, double tau, double q_i, double q_f);
    static ProtocolSpec sinh_drive(double delta, double tau, double q_i, double q_f,
                                   double steepness);
    // Interior plateau drive. Has no finite qdot at the jumps; usable with the
    // bounds module only (the CD field would diverge).
    static ProtocolSpec quasi_step(double delta, double tau, double q_i, double q_f,
                                   double plateau);
    static ProtocolSpec tabulated(double delta, std::vector<double> t, std::vector<double> q);
    static ProtocolSpec tabulated_from_csv(double delta, const std::string& path);

    double q(double t) const;
    double qdot(double t) const;  // throws for quasi-step
    double theta_at(double t) const { return theta(q(t), delta); }
    double theta_dot_at(double t) const { return theta_dot(q(t), qdot(t), delta); }

    Operator2 h0(double t) const;
    Operator2 h1(double t) const;
    Operator2 h_cd(double t) const;  // H0 + H1; throws for quasi-step

    // largest |theta_dot| over a uniform sample (CD field amplitude)
    double max_theta_dot(int samples = 2001) const;

    bool supports_dynamics() const { return family != DriveFamily::QuasiStep; }

  private:
    void validate() const;
    double clamp_time(double t) const;  // domain check with roundoff slack
};

struct CouplingAngle {
    enum class Mode { Static, Sta };
    Mode mode = Mode::Static;
    double phi = 0.0;  // static coupling angle, in [0, pi)

    static CouplingAngle fixed(double phi);
    static CouplingAngle sta();  // phi(t) = theta_t

    bool is_sta() const { return mode == Mode::Sta; }
    double angle_at(const ProtocolSpec& p, double t) const;
};

// System-side interaction factor cos(2 phi) sigma_z + sin(2 phi) sigma_x
// (eigenvalues +-1).
Operator2 coupling_operator(const CouplingAngle& angle, const ProtocolSpec& p, double t);
Operator2 coupling_operator_at_angle(double phi);

// Interior plateau of the l_BD-optimal quasi-step drive: q* = delta cot(2 phi).
// Throws for 2 phi a multiple of pi (purely sigma_z coupling; no finite q*).
double q_optimal(double phi, double delta);

}  // namespace cdbound
