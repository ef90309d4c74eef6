#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace blowup {

using Vec = std::vector<double>;

/// Open time interval (t_start, t_end) with k = t_end - t_start > 0.
class Interval {
public:
    Interval(double t_start, double t_end);

    [[nodiscard]] double t_start() const noexcept { return t_start_; }
    [[nodiscard]] double t_end() const noexcept { return t_end_; }
    [[nodiscard]] double length() const noexcept { return t_end_ - t_start_; }

    /// Affine map from the reference interval [-1, 1].
    [[nodiscard]] double to_time(double x) const noexcept {
        return t_start_ + 0.5 * (x + 1.0) * length();
    }
    [[nodiscard]] double to_reference(double t) const noexcept {
        return 2.0 * (t - t_start_) / length() - 1.0;
    }

private:
    double t_start_;
    double t_end_;
};

/// Gauss-Legendre rule on [-1, 1].
struct QuadRule {
    Vec nodes;
    Vec weights;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule, 1 <= n <= 64. Nodes strictly increasing.
[[nodiscard]] QuadRule gauss_legendre(int n);

/// Shared, precomputed copy of gauss_legendre(n).
[[nodiscard]] const QuadRule& cached_rule(int n);

/// Writes P_0(x), ..., P_{out.size()-1}(x).
void legendre_values(double x, std::span<double> out) noexcept;

/// Polynomial of degree r on an interval with values in R^d, stored as
/// coefficients of the Legendre polynomials mapped onto the interval.
/// coeff(i, j) multiplies P_i for solution component j.
class LocalPoly {
public:
    LocalPoly(Interval iv, int degree, int dim);
    LocalPoly(Interval iv, int degree, int dim, Vec coeffs);

    static LocalPoly constant(Interval iv, std::span<const double> value);

    [[nodiscard]] const Interval& interval() const noexcept { return iv_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }

    [[nodiscard]] double coeff(int i, int j) const { return coeffs_[idx(i, j)]; }
    double& coeff(int i, int j) { return coeffs_[idx(i, j)]; }
    [[nodiscard]] std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> coeffs() noexcept { return coeffs_; }

    /// Value at reference coordinate x in [-1, 1], no range check.
    void eval_reference(double x, std::span<double> out) const;
    [[nodiscard]] Vec eval_reference(double x) const;

    /// Value at the right end point, i.e. the one-sided limit U(t_end^-).
    [[nodiscard]] Vec right_value() const;
    [[nodiscard]] Vec left_value() const;

private:
    [[nodiscard]] std::size_t idx(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(dim_) +
               static_cast<std::size_t>(j);
    }

    Interval iv_;
    int degree_;
    int dim_;
    Vec coeffs_;
};

/// Value of p at t; throws std::invalid_argument if t lies outside the
/// closed interval of p.
[[nodiscard]] Vec eval(const LocalPoly& p, double t);

/// p' as a polynomial of degree max(r - 1, 0).
[[nodiscard]] LocalPoly derivative(const LocalPoly& p);

/// Degree r + 1 polynomial q with q' = p and q(t_start) = left_value.
[[nodiscard]] LocalPoly antiderivative(const LocalPoly& p, std::span<const double> left_value);

/// Function of time with values in R^d, written into the output span.
using TimeFunction = std::function<void(double t, std::span<double> out)>;

/// Quadrature-discrete L2 projection onto polynomials of degree r.
/// Requires quad.size() >= r + 1.
[[nodiscard]] LocalPoly l2_project(const TimeFunction& f, int dim, const Interval& iv, int r,
                                   const QuadRule& quad);

/// Projection from samples already taken at the mapped quadrature nodes.
/// samples is laid out node-major: samples[q * dim + j].
[[nodiscard]] LocalPoly project_samples(std::span<const double> samples, int dim,
                                        const Interval& iv, int r, const QuadRule& quad);

struct Norms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double linf = 0.0;
};

/// Number of Chebyshev sample points used for sup norms of degree-r data.
[[nodiscard]] inline int linf_samples(int r) noexcept { return 8 * (r + 2); }

/// Reference coordinates for sampled sup norms: Chebyshev points plus both
/// end points.
[[nodiscard]] Vec linf_sample_points(int n);

/// sup over the interval of the Euclidean norm, sampled.
[[nodiscard]] double linf_norm(const LocalPoly& p, int n_samples);

/// Exact L2 and H1-seminorms via Parseval; sampled L-infinity norm.
[[nodiscard]] Norms norms(const LocalPoly& p);

}  // namespace blowup
