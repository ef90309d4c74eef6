#include "blowup/poly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blowup {

Interval::Interval(double t_start, double t_end) : t_start_(t_start), t_end_(t_end) {
    if (!std::isfinite(t_start) || !std::isfinite(t_end)) {
        throw std::invalid_argument("Interval: end points must be finite");
    }
    if (!(t_end > t_start)) {
        throw std::invalid_argument("Interval: requires t_end > t_start");
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

QuadRule gauss_legendre(int n) {
    if (n < 1 || n > 64) {
        throw std::invalid_argument("gauss_legendre: n must lie in [1, 64], got " +
                                    std::to_string(n));
    }
    QuadRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton on P_n starting from the asymptotic root estimate.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16) {
                break;
            }
        }
        // Recompute derivative at the converged root.
        {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    }
    return rule;
}

const QuadRule& cached_rule(int n) {
    static const std::array<QuadRule, 65> table = [] {
        std::array<QuadRule, 65> t{};
        for (int i = 1; i <= 64; ++i) {
            t[static_cast<std::size_t>(i)] = gauss_legendre(i);
        }
        return t;
    }();
    if (n < 1 || n > 64) {
        throw std::invalid_argument("cached_rule: n must lie in [1, 64], got " +
                                    std::to_string(n));
    }
    return table[static_cast<std::size_t>(n)];
}

void legendre_values(double x, std::span<double> out) noexcept {
    const std::size_t n = out.size();
    if (n == 0) {
        return;
    }
    out[0] = 1.0;
    if (n == 1) {
        return;
    }
    out[1] = x;
    for (std::size_t k = 2; k < n; ++k) {
        const double kd = static_cast<double>(k);
        out[k] = ((2.0 * kd - 1.0) * x * out[k - 1] - (kd - 1.0) * out[k - 2]) / kd;
    }
}

// ---------------------------------------------------------------------------
// LocalPoly
// ---------------------------------------------------------------------------

LocalPoly::LocalPoly(Interval iv, int degree, int dim)
    : iv_(iv), degree_(degree), dim_(dim) {
    if (degree < 0) {
        throw std::invalid_argument("LocalPoly: negative degree");
    }
    if (dim < 1) {
        throw std::invalid_argument("LocalPoly: dimension must be positive");
    }
    coeffs_.assign(static_cast<std::size_t>(degree + 1) * static_cast<std::size_t>(dim), 0.0);
}

LocalPoly::LocalPoly(Interval iv, int degree, int dim, Vec coeffs) : LocalPoly(iv, degree, dim) {
    if (coeffs.size() != coeffs_.size()) {
        throw std::invalid_argument("LocalPoly: expected " + std::to_string(coeffs_.size()) +
                                    " coefficients, got " + std::to_string(coeffs.size()));
    }
    coeffs_ = std::move(coeffs);
}

LocalPoly LocalPoly::constant(Interval iv, std::span<const double> value) {
    LocalPoly p(iv, 0, static_cast<int>(value.size()));
    std::copy(value.begin(), value.end(), p.coeffs_.begin());
    return p;
}

void LocalPoly::eval_reference(double x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    // Forward recurrence, accumulating as we go.
    double p0 = 1.0;
    double p1 = x;
    for (int i = 0; i <= degree_; ++i) {
        double pi;
        if (i == 0) {
            pi = 1.0;
        } else if (i == 1) {
            pi = x;
        } else {
            pi = ((2.0 * i - 1.0) * x * p1 - (i - 1.0) * p0) / i;
            p0 = p1;
            p1 = pi;
        }
        for (int j = 0; j < dim_; ++j) {
            out[static_cast<std::size_t>(j)] += coeffs_[idx(i, j)] * pi;
        }
    }
}

Vec LocalPoly::eval_reference(double x) const {
    Vec out(static_cast<std::size_t>(dim_));
    eval_reference(x, out);
    return out;
}

Vec LocalPoly::right_value() const {
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i <= degree_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            out[static_cast<std::size_t>(j)] += coeffs_[idx(i, j)];
        }
    }
    return out;
}

Vec LocalPoly::left_value() const {
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i <= degree_; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        for (int j = 0; j < dim_; ++j) {
            out[static_cast<std::size_t>(j)] += sign * coeffs_[idx(i, j)];
        }
    }
    return out;
}

Vec eval(const LocalPoly& p, double t) {
    const Interval& iv = p.interval();
    const double scale = std::max({std::abs(iv.t_start()), std::abs(iv.t_end()), iv.length()});
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * scale;
    if (!(t >= iv.t_start() - slack && t <= iv.t_end() + slack)) {
        throw std::invalid_argument("eval: t outside the closed interval");
    }
    if (t <= iv.t_start()) {
        return p.left_value();
    }
    if (t >= iv.t_end()) {
        return p.right_value();
    }
    return p.eval_reference(iv.to_reference(t));
}

LocalPoly derivative(const LocalPoly& p) {
    const int r = p.degree();
    const int d = p.dim();
    if (r == 0) {
        return LocalPoly(p.interval(), 0, d);
    }
    // d/dx sum c_n P_n = sum_j b_j P_j with
    // b_{j} = (2j+1) (c_{j+1} + b_{j+2} / (2j+5)).
    LocalPoly q(p.interval(), r - 1, d);
    const double chain = 2.0 / p.interval().length();
    for (int comp = 0; comp < d; ++comp) {
        Vec b(static_cast<std::size_t>(r + 2), 0.0);
        for (int j = r - 1; j >= 0; --j) {
            const double tail = b[static_cast<std::size_t>(j + 2)] / (2.0 * j + 5.0);
            b[static_cast<std::size_t>(j)] = (2.0 * j + 1.0) * (p.coeff(j + 1, comp) + tail);
        }
        for (int j = 0; j <= r - 1; ++j) {
            q.coeff(j, comp) = chain * b[static_cast<std::size_t>(j)];
        }
    }
    return q;
}

LocalPoly antiderivative(const LocalPoly& p, std::span<const double> left_value) {
    const int r = p.degree();
    const int d = p.dim();
    if (static_cast<int>(left_value.size()) != d) {
        throw std::invalid_argument("antiderivative: left value has wrong dimension");
    }
    // int P_0 = P_1 + const, int P_n = (P_{n+1} - P_{n-1}) / (2n + 1).
    LocalPoly q(p.interval(), r + 1, d);
    const double half_k = 0.5 * p.interval().length();
    for (int comp = 0; comp < d; ++comp) {
        for (int n = 0; n <= r; ++n) {
            const double c = half_k * p.coeff(n, comp);
            if (n == 0) {
                q.coeff(1, comp) += c;
            } else {
                const double s = c / (2.0 * n + 1.0);
                q.coeff(n + 1, comp) += s;
                q.coeff(n - 1, comp) -= s;
            }
        }
        double at_left = 0.0;
        for (int i = 1; i <= r + 1; ++i) {
            at_left += ((i % 2 == 0) ? 1.0 : -1.0) * q.coeff(i, comp);
        }
        q.coeff(0, comp) = left_value[static_cast<std::size_t>(comp)] - at_left;
    }
    return q;
}

LocalPoly project_samples(std::span<const double> samples, int dim, const Interval& iv, int r,
                          const QuadRule& quad) {
    if (r < 0) {
        throw std::invalid_argument("l2_project: negative degree");
    }
    if (quad.size() < static_cast<std::size_t>(r + 1)) {
        throw std::invalid_argument("l2_project: quadrature with " + std::to_string(quad.size()) +
                                    " points cannot resolve degree " + std::to_string(r));
    }
    const auto du = static_cast<std::size_t>(dim);
    if (samples.size() != quad.size() * du) {
        throw std::invalid_argument("l2_project: sample count mismatch");
    }
    LocalPoly p(iv, r, dim);
    Vec leg(static_cast<std::size_t>(r + 1));
    for (std::size_t q = 0; q < quad.size(); ++q) {
        legendre_values(quad.nodes[q], leg);
        const double w = quad.weights[q];
        for (int i = 0; i <= r; ++i) {
            const double wp = w * leg[static_cast<std::size_t>(i)];
            for (int j = 0; j < dim; ++j) {
                p.coeff(i, j) += wp * samples[q * du + static_cast<std::size_t>(j)];
            }
        }
    }
    for (int i = 0; i <= r; ++i) {
        const double scale = (2.0 * i + 1.0) / 2.0;
        for (int j = 0; j < dim; ++j) {
            p.coeff(i, j) *= scale;
        }
    }
    return p;
}

LocalPoly l2_project(const TimeFunction& f, int dim, const Interval& iv, int r,
                     const QuadRule& quad) {
    if (quad.size() < static_cast<std::size_t>(r + 1)) {
        throw std::invalid_argument("l2_project: quadrature with " + std::to_string(quad.size()) +
                                    " points cannot resolve degree " + std::to_string(r));
    }
    const auto du = static_cast<std::size_t>(dim);
    Vec samples(quad.size() * du);
    for (std::size_t q = 0; q < quad.size(); ++q) {
        f(iv.to_time(quad.nodes[q]), std::span<double>(samples).subspan(q * du, du));
    }
    return project_samples(samples, dim, iv, r, quad);
}

Vec linf_sample_points(int n) {
    Vec xs;
    xs.reserve(static_cast<std::size_t>(n + 2));
    xs.push_back(-1.0);
    for (int j = n - 1; j >= 0; --j) {
        xs.push_back(std::cos(std::numbers::pi * (j + 0.5) / n));
    }
    xs.push_back(1.0);
    return xs;
}

double linf_norm(const LocalPoly& p, int n_samples) {
    Vec v(static_cast<std::size_t>(p.dim()));
    double best = 0.0;
    for (double x : linf_sample_points(n_samples)) {
        p.eval_reference(x, v);
        double s = 0.0;
        for (double c : v) {
            s += c * c;
        }
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

namespace {

double parseval_l2(const LocalPoly& p) {
    double s = 0.0;
    for (int i = 0; i <= p.degree(); ++i) {
        double ci = 0.0;
        for (int j = 0; j < p.dim(); ++j) {
            ci += p.coeff(i, j) * p.coeff(i, j);
        }
        s += ci * 2.0 / (2.0 * i + 1.0);
    }
    return std::sqrt(0.5 * p.interval().length() * s);
}

}  // namespace

Norms norms(const LocalPoly& p) {
    Norms n;
    n.l2 = parseval_l2(p);
    n.h1_semi = p.degree() == 0 ? 0.0 : parseval_l2(derivative(p));
    n.linf = linf_norm(p, linf_samples(p.degree()));
    return n;
}

}  // namespace blowup
