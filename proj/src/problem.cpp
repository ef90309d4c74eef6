#include "blowup/problem.hpp"

#include <cmath>

namespace blowup {

void Problem::rhs(double t, std::span<const double> u, std::span<double> out) const {
    f(t, u, out);
    for (double v : out) {
        if (!std::isfinite(v)) {
            throw NumericOverflow("F(t, u) is not finite");
        }
    }
}

Problem make_power_square(double u0) {
    if (!(u0 > 0.0)) {
        throw std::invalid_argument("make_power_square: u0 must be positive");
    }
    Problem p;
    p.name = "power2";
    p.dim = 1;
    p.u0 = {u0};
    p.f = [](double, std::span<const double> u, std::span<double> out) { out[0] = u[0] * u[0]; };
    p.lip = [](double, double a, double b) { return a + b; };
    p.exact = [u0](double t) { return Vec{u0 / (1.0 - u0 * t)}; };
    p.t_blowup = 1.0 / u0;
    return p;
}

Problem make_exponential(double u0) {
    Problem p;
    p.name = "exp";
    p.dim = 1;
    p.u0 = {u0};
    p.f = [](double, std::span<const double> u, std::span<double> out) { out[0] = std::exp(u[0]); };
    p.lip = [](double, double a, double b) { return 0.5 * (std::exp(a) + std::exp(b)); };
    const double eu0 = std::exp(u0);
    p.exact = [u0, eu0](double t) { return Vec{u0 - std::log1p(-eu0 * t)}; };
    p.t_blowup = std::exp(-u0);
    return p;
}

Problem make_linear(double lambda, Vec u0) {
    if (u0.empty()) {
        throw std::invalid_argument("make_linear: u0 must be nonempty");
    }
    Problem p;
    p.name = "linear";
    p.dim = static_cast<int>(u0.size());
    p.u0 = u0;
    p.f = [lambda](double, std::span<const double> u, std::span<double> out) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            out[i] = lambda * u[i];
        }
    };
    const double abs_lambda = std::abs(lambda);
    p.lip = [abs_lambda](double, double, double) { return abs_lambda; };
    p.exact = [lambda, u0](double t) {
        Vec v = u0;
        const double g = std::exp(lambda * t);
        for (double& x : v) {
            x *= g;
        }
        return v;
    };
    return p;
}

double lip_integral(const Problem& p, const Interval& iv,
                    const std::function<double(double)>& a_fn,
                    const std::function<double(double)>& b_fn, const QuadRule& quad) {
    double sum = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
        const double s = iv.to_time(quad.nodes[q]);
        const double v = p.lip(s, a_fn(s), b_fn(s));
        if (!std::isfinite(v)) {
            throw NumericOverflow("Lipschitz envelope is not finite");
        }
        sum += quad.weights[q] * v;
    }
    sum *= 0.5 * iv.length();
    if (!std::isfinite(sum)) {
        throw NumericOverflow("Lipschitz integral is not finite");
    }
    return sum;
}

}  // namespace blowup
