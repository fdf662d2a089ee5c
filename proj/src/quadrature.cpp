#include "skorolab/quadrature.hpp"

namespace skorolab {

std::vector<double> log_breakpoints(double a, double b, double factor) {
    if (!(a > 0.0) || !(b > a) || !(factor > 1.0))
        throw std::invalid_argument("log_breakpoints: need 0 < a < b and factor > 1");
    std::vector<double> pts{a};
    for (double x = a * factor; x < b; x *= factor) pts.push_back(x);
    pts.push_back(b);
    return pts;
}

}  // namespace skorolab
