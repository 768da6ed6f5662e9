// spline.hpp — natural cubic spline interpolation with derivative evaluation
#pragma once

#include <vector>

namespace cdbound {

// Natural cubic spline through strictly increasing abscissae. Evaluation
// outside [x.front(), x.back()] is clamped to the boundary polynomial.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double value(double x) const;
    double derivative(double x) const;

    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

  private:
    std::size_t interval(double x) const;

    std::vector<double> x_, y_;
    std::vector<double> b_, c_, d_;  // piecewise y + b dx + c dx^2 + d dx^3
};

}  // namespace cdbound
