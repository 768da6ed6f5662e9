// bath.hpp — spectral densities, the bath functionals S and X_t, and the
// exponential decomposition of the bath correlation function used by HEOM.
//
// Conventions (hbar = 1):
//   S   = int_0^inf dw (J(w)/pi) coth(beta w / 2)        [= C(0), real part]
//   X_t = int_0^inf dw (2 / pi w) J(w) (1 - cos(w t))
//   C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w/2) cos(w t) - i sin(w t)]
// beta = +infinity selects the zero-temperature limit (coth -> 1).
#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "cdbound/quadrature.hpp"
#include "cdbound/spline.hpp"

namespace cdbound::bath {

using Complex = std::complex<double>;

struct SpectralDensity {
    enum class Kind { UnderdampedBrownian, Custom };
    Kind kind = Kind::UnderdampedBrownian;

    // underdamped Brownian: J(w) = gamma lambda^2 w / [(w^2-w0^2)^2 + gamma^2 w^2]
    double omega0 = 1.0;  // resonance frequency, > 0
    double gamma = 0.1;   // width, > 0
    double lambda = 0.1;  // coupling strength, >= 0

    std::function<double(double)> custom;  // J(w) for w >= 0
    double reference_frequency = 1.0;      // scale used for quadrature splits

    static SpectralDensity underdamped(double omega0, double gamma, double lambda);
    static SpectralDensity custom_from(std::function<double(double)> j,
                                       double reference_frequency);
    // Tabulated (w, J) CSV with a power-law tail J ~ J_end (w_end/w)^p beyond
    // the last row; below the first row the table is anchored at J(0) = 0.
    static SpectralDensity from_csv(const std::string& path, double tail_exponent);

    double value(double omega) const;
    bool is_zero() const;
};

struct QuadValue {
    double value = 0.0;
    double error = 0.0;
};

// Bath correlation at zero time delay; error estimate is absolute.
QuadValue compute_S(const SpectralDensity& j, double beta);

// Shifted-bath position expectation at time t >= 0.
QuadValue compute_X(const SpectralDensity& j, double t);

// Long-time limit of X_t (Riemann-Lebesgue): (2/pi) int dw J/w.
QuadValue compute_X_limit(const SpectralDensity& j);

// Reference C(t) by direct quadrature (used to score decompositions).
Complex correlation_reference(const SpectralDensity& j, double beta, double t);

// S plus X tabulated on [0, tau], with spline interpolation between nodes.
struct BathFunctionals {
    double S = 0.0;
    double S_error = 0.0;
    double beta = 1.0;
    double tau = 0.0;
    std::vector<double> times;     // tabulation grid
    std::vector<double> X_values;  // X at the grid nodes
    double X_error = 0.0;          // max quadrature error over the grid
    double X_interp_error = 0.0;   // estimated spline interpolation error
    CubicSpline X_spline;

    double X_at(double t) const;
    bool is_zero() const { return S == 0.0 && X_error == 0.0 && X_interp_error == 0.0; }

    static BathFunctionals tabulate(const SpectralDensity& j, double beta, double tau,
                                    int points = 201);
};

// One term of C(t) = sum_j amplitude_j exp(-rate_j t). `amplitude_conj` is the
// coefficient of exp(-rate_j t) in C*(t); the pole set is closed under
// conjugation, so this is well defined.
struct CorrelationTerm {
    Complex amplitude{};
    Complex amplitude_conj{};
    Complex rate{};
};

struct CorrelationDecomposition {
    std::vector<CorrelationTerm> terms;  // resonant pair first, then Matsubara
    int matsubara_count = 0;
    double reconstruction_error = 0.0;  // max |reconstructed - quadrature C(t)| on [0, horizon]
    std::string notes;                  // metadata (residual-correction policy etc.)

    Complex value(double t) const;
    double max_rate() const;
};

// Residue-sum decomposition for the underdamped Brownian density with K
// Matsubara terms, validated against correlation_reference on [0, horizon].
// Throws for overdamped parameters (needs omega0 > gamma/2) and when the
// reconstruction error exceeds `tolerance` (insufficient K).
CorrelationDecomposition decompose_correlation(const SpectralDensity& j, double beta, int K,
                                               double horizon, double tolerance = 1e-3);

}  // namespace cdbound::bath
