#include "cdbound/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdbound {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3) throw std::invalid_argument("CubicSpline: need at least 3 points");
    if (y_.size() != n) throw std::invalid_argument("CubicSpline: x/y size mismatch");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("CubicSpline: abscissae must be strictly increasing");

    // Solve the tridiagonal system for second derivatives (natural BCs).
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

    std::vector<double> diag(n, 1.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
        upper[i] = h[i];
    }
    std::vector<double> m(n, 0.0);  // second derivatives
    // Thomas algorithm; first and last rows are identity (natural ends).
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    cp[0] = 0.0;
    dp[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double lower = h[i - 1];
        const double denom = diag[i] - lower * cp[i - 1];
        cp[i] = upper[i] / denom;
        dp[i] = (rhs[i] - lower * dp[i - 1]) / denom;
    }
    m[n - 1] = 0.0;
    for (std::size_t i = n - 2; i >= 1; --i) m[i] = dp[i] - cp[i] * m[i + 1];

    b_.resize(n - 1);
    c_.resize(n - 1);
    d_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        b_[i] = (y_[i + 1] - y_[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
        c_[i] = 0.5 * m[i];
        d_[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
    }
}

std::size_t CubicSpline::interval(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double CubicSpline::value(double x) const {
    const std::size_t i = interval(x);
    const double dx = x - x_[i];
    return y_[i] + dx * (b_[i] + dx * (c_[i] + dx * d_[i]));
}

double CubicSpline::derivative(double x) const {
    const std::size_t i = interval(x);
    const double dx = x - x_[i];
    return b_[i] + dx * (2.0 * c_[i] + dx * 3.0 * d_[i]);
}

}  // namespace cdbound
