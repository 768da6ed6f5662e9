// bounds.hpp — performance bounds for counter-diabatic driving against a
// dissipative bath: the Bures-angle bound
//   l_BD = int_0^tau dt |2 sin(theta_t - phi)| sqrt(S + cos^2(theta_t - phi) X_t^2),
// its fidelity form cos^2(l_BD), the weak-coupling expansion, and the
// multi-bath generalization l_BD = int_0^tau dt sqrt(g) with
//   g = sum_i <(A_i+I)^2> S_i + sum_ij Cov(A_i, A_j) X^i_t X^j_t.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cdbound/bath.hpp"
#include "cdbound/protocol.hpp"

namespace cdbound::bounds {

struct BoundResult {
    double l_bd = 0.0;
    bool valid = true;                   // l_bd <= pi/2
    double fidelity_lower_bound = 1.0;   // cos^2(l_bd) when valid, 0 when vacuous
    bool under_resolved = false;         // grid-doubling check disagreed
    double error_estimate = 0.0;         // quadrature + bath-input propagation
    std::vector<double> times;           // integrand trace for diagnostics
    std::vector<double> integrand;
};

// Landau-Zener bound, Simpson on `grid_points` (odd, >= 101) with kink-aligned
// panels where theta_t crosses phi, validated by grid doubling.
BoundResult l_bd_lz(const ProtocolSpec& spec, const CouplingAngle& angle,
                    const bath::BathFunctionals& bath, int grid_points = 1001);

struct FidelityBound {
    double value = 1.0;
    bool valid = true;
};

// cos^2(l_BD) when l_BD <= pi/2; vacuous (0, valid=false) beyond.
FidelityBound fidelity_bound(const BoundResult& r);
FidelityBound fidelity_bound_from(double l_bd);

// O(lambda^2) expansion of the fidelity bound: 1 - 4 S [int |sin(theta-phi)|]^2.
double weak_coupling_bound(const ProtocolSpec& spec, const CouplingAngle& angle,
                           const bath::SpectralDensity& j, double beta, int grid_points = 2001);

struct BathChannel {
    double S = 0.0;
    std::function<double(double)> X;  // X_t for this bath
};

struct GeneralSystemSpec {
    Eigen::Index dim = 2;
    std::vector<Eigen::MatrixXcd> couplings;                  // A_i, Hermitian
    std::function<Eigen::VectorXcd(double)> target_state;     // |psi_n(t)>, normalized
    std::vector<BathChannel> baths;                           // one per coupling

    void validate() const;
};

// Generalized bound for arbitrary dimension / multiple baths. Plain composite
// Simpson (the abstract integrand offers no kink structure to exploit), with
// grid-doubling validation.
BoundResult l_bd_general(const GeneralSystemSpec& sys, double tau, int grid_points = 1001);

}  // namespace cdbound::bounds
