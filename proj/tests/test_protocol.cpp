#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "cdbound/protocol.hpp"

using namespace cdbound;

namespace {
constexpr double kPi = std::numbers::pi;

ProtocolSpec fig2_sinh(double a) { return ProtocolSpec::sinh_drive(1.0, 2.0, -1.0, 1.0, a); }

double central_difference(const ProtocolSpec& p, double t, double h) {
    return (p.theta_at(t + h) - p.theta_at(t - h)) / (2.0 * h);
}
}  // namespace

TEST_CASE("theta hits the arccot reference points") {
    CHECK(theta(0.0, 1.0) == doctest::Approx(kPi / 4).epsilon(1e-14));
    CHECK(theta(1.0, 1.0) == doctest::Approx(kPi / 8).epsilon(1e-14));
    CHECK(theta(-1.0, 1.0) == doctest::Approx(3.0 * kPi / 8).epsilon(1e-14));
}

TEST_CASE("theta stays on the continuous branch across q = 0") {
    double prev = theta(-1e-3, 1.0);
    for (double q = -1e-3; q <= 1e-3; q += 1e-5) {
        const double th = theta(q, 1.0);
        CHECK(std::abs(th - prev) < 1e-2);
        CHECK(th > 0.0);
        CHECK(th < kPi / 2);
        prev = th;
    }
}

TEST_CASE("theta requires a positive gap") {
    CHECK_THROWS_AS(theta(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(theta_dot(1.0, 1.0, -2.0), std::domain_error);
}

TEST_CASE("theta_dot closed form") {
    CHECK(theta_dot(0.0, 1.0, 1.0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(theta_dot(3.7, 0.0, 1.2) == 0.0);
}

TEST_CASE("theta_dot matches a finite difference along the sinh drive") {
    const auto p = fig2_sinh(3.0);
    const double t = 1.0;
    const double fd = central_difference(p, t, 1e-5);
    CHECK(std::abs(p.theta_dot_at(t) - fd) < 1e-8);
}

TEST_CASE("theta_dot chain rule holds along every analytic family") {
    const auto linear = ProtocolSpec::linear(1.3, 2.0, -0.8, 1.4);
    const auto sinh3 = fig2_sinh(3.0);
    const auto sinh10 = fig2_sinh(10.0);
    for (const auto* p : {&linear, &sinh3, &sinh10})
        for (double t : {0.1, 0.4, 0.77, 1.0, 1.5, 1.9}) {
            const double fd = central_difference(*p, t, 1e-5);
            CHECK(std::abs(p->theta_dot_at(t) - fd) < 1e-7);
        }
}

TEST_CASE("drive endpoints are exact") {
    const auto lin = ProtocolSpec::linear(1.0, 2.0, -1.0, 1.0);
    CHECK(lin.q(0.0) == -1.0);
    CHECK(lin.q(2.0) == 1.0);
    const auto s = fig2_sinh(7.0);
    CHECK(s.q(0.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(s.q(2.0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto qs = ProtocolSpec::quasi_step(1.0, 2.0, -1.0, 1.0, 0.0);
    CHECK(qs.q(0.0) == -1.0);
    CHECK(qs.q(2.0) == 1.0);
    CHECK(qs.q(1.0) == 0.0);
}

TEST_CASE("sinh drive with a general endpoint pair") {
    const auto p = ProtocolSpec::sinh_drive(1.0, 2.0, 0.5, 2.5, 4.0);
    CHECK(p.q(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p.q(2.0) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(p.q(1.0) == doctest::Approx(1.5).epsilon(1e-14));  // midpoint = mean
}

TEST_CASE("rotated-frame identity: R^dag H_cd R - i R^dag dR/dt = E sigma_z") {
    const auto p = fig2_sinh(3.0);
    for (int k = 0; k <= 100; ++k) {
        const double t = 2.0 * k / 100.0;
        const double th = p.theta_at(t);
        const double thd = p.theta_dot_at(t);
        const double c = std::cos(th), s = std::sin(th);
        const Operator2 r{{Complex(c), Complex(-s), Complex(s), Complex(c)}};  // exp(-i th sy)
        // -i R^dag dR/dt = -theta_dot sigma_y
        Operator2 rotated = r.adjoint() * p.h_cd(t) * r;
        rotated -= thd * Operator2::sigma_y();
        const double q = p.q(t);
        Operator2 expected = 0.5 * std::sqrt(q * q + 1.0) * Operator2::sigma_z();
        const Operator2 diff = rotated - expected;
        CHECK(diff.frobenius_norm() < 1e-10);
    }
}

TEST_CASE("constant drive has no CD term") {
    const auto p = ProtocolSpec::linear(1.0, 2.0, 0.7, 0.7);
    for (double t : {0.0, 0.5, 1.7}) {
        const Operator2 diff = p.h_cd(t) - p.h0(t);
        CHECK(diff.frobenius_norm() < 1e-15);
    }
}

TEST_CASE("sinh CD component at t = 0 matches the closed-form derivative") {
    const double a = 3.0, tau = 2.0;
    const auto p = fig2_sinh(a);
    const double qdot0 = a * std::cosh(a * tau / 2.0) / std::sinh(a * tau / 2.0);
    const double expected = theta_dot(-1.0, qdot0, 1.0);
    const Operator2 h1 = p.h1(0.0);
    CHECK(std::abs(h1(0, 1) - expected * Complex(0, -1)) < 1e-12);
    CHECK(std::abs(p.qdot(0.0) - qdot0) < 1e-12);
}

TEST_CASE("hamiltonians reject times outside the protocol window") {
    const auto p = fig2_sinh(3.0);
    CHECK_THROWS_AS(p.h_cd(-0.1), std::domain_error);
    CHECK_THROWS_AS(p.h_cd(2.1), std::domain_error);
    CHECK_NOTHROW(p.h_cd(2.0 + 1e-12));  // integrator roundoff slack
}

TEST_CASE("quasi-step drives cannot be differentiated or simulated") {
    const auto qs = ProtocolSpec::quasi_step(1.0, 2.0, -1.0, 1.0, 0.0);
    CHECK_THROWS_AS(qs.qdot(1.0), std::logic_error);
    CHECK_THROWS_AS(qs.h_cd(1.0), std::logic_error);
    CHECK_FALSE(qs.supports_dynamics());
}

TEST_CASE("coupling operator reference angles") {
    const auto p = fig2_sinh(3.0);
    const Operator2 x = coupling_operator(CouplingAngle::fixed(kPi / 4), p, 0.3);
    CHECK((x - Operator2::sigma_x()).frobenius_norm() < 1e-14);
    const Operator2 z = coupling_operator(CouplingAngle::fixed(0.0), p, 0.3);
    CHECK((z - Operator2::sigma_z()).frobenius_norm() < 1e-14);
}

TEST_CASE("coupling operator has unit spectral norm") {
    for (double phi : {0.1, 0.5, 1.1, 2.6}) {
        const Operator2 m = coupling_operator_at_angle(phi);
        const auto ev = m.hermitian_eigenvalues();
        CHECK(ev[0] == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("sta coupling at q = 0 gives sigma_x and annihilates the ground state") {
    // symmetric point: theta = pi/4, so the operator sits at angle 2 theta = pi/2
    const auto p = ProtocolSpec::linear(1.0, 2.0, 0.0, 0.0);
    const Operator2 m = coupling_operator(CouplingAngle::sta(), p, 1.0);
    CHECK((m - Operator2::sigma_x()).frobenius_norm() < 1e-14);

    const auto g = ground_state(0.0, 1.0);
    const PureState2 mg = apply(m, g);
    CHECK(std::abs(mg.up + g.up) < 1e-12);
    CHECK(std::abs(mg.down + g.down) < 1e-12);
}

TEST_CASE("sta coupling annihilation property along a full drive") {
    const auto p = fig2_sinh(5.0);
    for (double t : {0.0, 0.3, 0.9, 1.0, 1.4, 2.0}) {
        const Operator2 m = coupling_operator(CouplingAngle::sta(), p, t);
        const auto g = ground_state(p.q(t), p.delta);
        const PureState2 mg = apply(m, g);
        CHECK(std::sqrt(std::norm(mg.up + g.up) + std::norm(mg.down + g.down)) < 1e-12);
    }
}

TEST_CASE("optimal plateau values") {
    CHECK(std::abs(q_optimal(kPi / 4, 1.0)) < 1e-12);
    CHECK(q_optimal(kPi / 8, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(q_optimal(kPi / 4, 2.0)) < 1e-12);
    CHECK_THROWS_AS(q_optimal(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(q_optimal(kPi / 2, 1.0), std::domain_error);
}

TEST_CASE("theta stays inside (0, pi/2) for every analytic family") {
    const auto lin = ProtocolSpec::linear(0.3, 2.0, -5.0, 7.0);
    const auto s = ProtocolSpec::sinh_drive(0.3, 2.0, -5.0, 7.0, 12.0);
    for (const auto* p : {&lin, &s})
        for (int k = 0; k <= 500; ++k) {
            const double th = p->theta_at(2.0 * k / 500.0);
            CHECK(th > 0.0);
            CHECK(th < kPi / 2);
        }
}

TEST_CASE("large-steepness sinh approaches the quasi-step away from the jumps") {
    // the sinh ramp width scales as ln(1/0.05)/a, so the interior margin 0.2
    // suffices for a >= 20 on tau = 2
    const auto qs = ProtocolSpec::quasi_step(1.0, 2.0, -1.0, 1.0, 0.0);
    for (double a : {20.0, 40.0}) {
        const auto s = fig2_sinh(a);
        double sup = 0.0;
        for (int k = 0; k <= 400; ++k) {
            const double t = 0.2 + (2.0 - 0.4) * k / 400.0;
            sup = std::max(sup, std::abs(s.q(t) - qs.q(t)));
        }
        CHECK(sup < 0.05);
    }
}

TEST_CASE("tabulated protocols reproduce their source and its derivative") {
    const auto src = fig2_sinh(3.0);
    std::vector<double> t, q;
    for (int k = 0; k <= 64; ++k) {
        t.push_back(2.0 * k / 64.0);
        q.push_back(src.q(t.back()));
    }
    const auto tab = ProtocolSpec::tabulated(1.0, t, q);
    CHECK(tab.q(0.0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(tab.q(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double tm : {0.11, 0.53, 1.0, 1.47, 1.93}) {
        CHECK(std::abs(tab.q(tm) - src.q(tm)) < 1e-4);
        CHECK(std::abs(tab.qdot(tm) - src.qdot(tm)) < 1e-2);
        const double fd = central_difference(tab, tm, 1e-6);
        CHECK(std::abs(tab.theta_dot_at(tm) - fd) < 1e-7);
    }
}

TEST_CASE("tabulated protocols load from two-column CSV") {
    const std::string path = "protocol_roundtrip.csv";
    {
        std::ofstream out(path);
        out << "# t, q\n";
        const auto src = fig2_sinh(2.0);
        for (int k = 0; k <= 32; ++k) {
            const double t = 2.0 * k / 32.0;
            out << t << "," << src.q(t) << "\n";
        }
    }
    const auto tab = ProtocolSpec::tabulated_from_csv(1.0, path);
    CHECK(tab.tau == doctest::Approx(2.0));
    CHECK(tab.q_i == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(tab.q_f == doctest::Approx(1.0).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("protocol validation rejects malformed inputs") {
    CHECK_THROWS_AS(ProtocolSpec::sinh_drive(0.0, 2.0, -1.0, 1.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(ProtocolSpec::sinh_drive(1.0, -2.0, -1.0, 1.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(ProtocolSpec::sinh_drive(1.0, 2.0, -1.0, 1.0, 800.0), std::invalid_argument);
    CHECK_THROWS_AS(ProtocolSpec::tabulated(1.0, {0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CouplingAngle::fixed(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(CouplingAngle::fixed(3.15), std::invalid_argument);
}
