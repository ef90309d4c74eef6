#include "blowup/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "blowup/galerkin.hpp"

namespace blowup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(x) overflows for x above log(DBL_MAX) ~ 709.78.
constexpr double kMaxExponent = 709.0;

int capped_points(int n) { return std::clamp(n, 1, 64); }

double euclid(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

// phi with |U_hat| cached at the quadrature nodes.
class PhiEvaluator {
public:
    PhiEvaluator(const Problem& p, const Interval& iv, const LocalPoly& u_hat, double psi,
                 const QuadRule& quad)
        : p_(p), psi_(psi), half_k_(0.5 * iv.length()) {
        Vec v(static_cast<std::size_t>(u_hat.dim()));
        times_.reserve(quad.size());
        for (std::size_t q = 0; q < quad.size(); ++q) {
            times_.push_back(iv.to_time(quad.nodes[q]));
            u_hat.eval_reference(quad.nodes[q], v);
            norms_.push_back(euclid(v));
        }
        weights_ = quad.weights;
    }

    double operator()(double delta) const {
        double integral = 0.0;
        for (std::size_t q = 0; q < times_.size(); ++q) {
            const double l = p_.lip(times_[q], delta * psi_ + norms_[q], norms_[q]);
            if (!std::isfinite(l)) {
                return kInf;
            }
            integral += weights_[q] * l;
        }
        integral *= half_k_;
        if (!(integral <= kMaxExponent)) {
            return kInf;
        }
        return std::exp(integral) - delta;
    }

private:
    const Problem& p_;
    double psi_;
    double half_k_;
    Vec times_;
    Vec norms_;
    Vec weights_;
};

bool within_tol(double value, double delta, const DeltaSolverConfig& cfg) {
    return std::abs(value) <= cfg.newton_tol * std::max(1.0, delta);
}

bool is_left_crossing(const PhiEvaluator& f, double delta, const DeltaSolverConfig& cfg) {
    if (!(f(delta * (1.0 + cfg.verify_eps)) < 0.0)) {
        return false;
    }
    const double left = delta * (1.0 - cfg.verify_eps);
    return left < 1.0 || f(left) > 0.0;
}

std::optional<double> newton(const PhiEvaluator& f, double start, const DeltaSolverConfig& cfg) {
    double delta = std::max(start, 1.0);
    for (std::size_t it = 0; it < cfg.max_newton; ++it) {
        const double value = f(delta);
        if (!std::isfinite(value)) {
            return std::nullopt;
        }
        if (within_tol(value, delta, cfg)) {
            return delta;
        }
        const double h = cfg.fd_step * delta;
        const double slope = (f(delta + h) - value) / h;
        if (!std::isfinite(slope) || slope >= 0.0) {
            // Right of the minimum of phi: Newton would head for the wrong root.
            return std::nullopt;
        }
        double next = delta - value / slope;
        if (next < 1.0) {
            next = 1.0 + 0.5 * (delta - 1.0);
        }
        if (next > cfg.delta_max) {
            return std::nullopt;
        }
        delta = next;
    }
    return std::nullopt;
}

// a has phi >= 0, b has phi < 0. Returns a point on the negative side.
double bisect(const PhiEvaluator& f, double a, double b, const DeltaSolverConfig& cfg) {
    double fb = f(b);
    for (int it = 0; it < 400; ++it) {
        const double width = b - a;
        if (width <= 0.5 * cfg.verify_eps * a && within_tol(fb, b, cfg)) {
            break;
        }
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * b) {
            break;
        }
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if (fm < 0.0) {
            b = mid;
            fb = fm;
        } else {
            a = mid;
        }
    }
    return b;
}

}  // namespace

LocalPoly residual_polynomial(const Problem& p, const LocalPoly& u_hat, const QuadRule& quad) {
    const int rq = residual_projection_degree(u_hat.degree());
    if (quad.size() < static_cast<std::size_t>(rq + 1)) {
        throw std::invalid_argument("residual_estimator: quadrature too weak");
    }
    const Vec samples = sample_rhs(p, u_hat, quad);
    const LocalPoly proj = project_samples(samples, p.dim, u_hat.interval(), rq, quad);
    const Vec zero(static_cast<std::size_t>(p.dim), 0.0);
    LocalPoly r = antiderivative(proj, zero);
    // Subtract U_hat - U_hat(t_{m-1}); deg U_hat <= deg R.
    const Vec left = u_hat.left_value();
    for (int i = 0; i <= u_hat.degree(); ++i) {
        for (int j = 0; j < p.dim; ++j) {
            r.coeff(i, j) -= u_hat.coeff(i, j);
        }
    }
    for (int j = 0; j < p.dim; ++j) {
        r.coeff(0, j) += left[static_cast<std::size_t>(j)];
    }
    return r;
}

double residual_estimator(const Problem& p, const LocalPoly& u_hat, std::span<const double>,
                          const QuadRule& quad) {
    const LocalPoly r = residual_polynomial(p, u_hat, quad);
    return linf_norm(r, linf_samples(r.degree()));
}

double residual_estimator(const Problem& p, const LocalPoly& u_hat,
                          std::span<const double> u_left) {
    const int rq = residual_projection_degree(u_hat.degree());
    return residual_estimator(p, u_hat, u_left, cached_rule(capped_points(rq + 6)));
}

double projection_estimator(std::span<const double> u_right_minus, const Projector& projector) {
    if (!projector) {
        return 0.0;
    }
    const Vec projected = projector(u_right_minus);
    if (projected.size() != u_right_minus.size()) {
        throw std::invalid_argument("projection_estimator: projector changed the dimension");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < projected.size(); ++i) {
        const double d = u_right_minus[i] - projected[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double psi_update(const std::optional<StepEstimate>& prev, double eta_proj_prev, double eta_res) {
    if (!prev) {
        return eta_proj_prev + eta_res;
    }
    if (!prev->delta) {
        throw std::logic_error("psi_update: previous interval has no delta");
    }
    return *prev->delta * prev->psi + eta_proj_prev + eta_res;
}

const QuadRule& phi_rule(int recon_degree) { return cached_rule(capped_points(recon_degree + 8)); }

double phi(const Problem& p, const Interval& iv, const LocalPoly& u_hat, double psi, double delta,
           const QuadRule& quad) {
    if (delta < 1.0) {
        throw std::invalid_argument("phi: delta must be >= 1");
    }
    return PhiEvaluator(p, iv, u_hat, psi, quad)(delta);
}

DeltaResult solve_delta(const Problem& p, const Interval& iv, const LocalPoly& u_hat, double psi,
                        std::optional<double> prev_delta, const DeltaSolverConfig& cfg,
                        const QuadRule& quad) {
    if (!(psi >= 0.0)) {
        throw std::invalid_argument("solve_delta: psi must be nonnegative");
    }
    const PhiEvaluator f(p, iv, u_hat, psi, quad);

    const double at_one = f(1.0);
    if (at_one < 0.0) {
        throw std::logic_error("solve_delta: phi(1) < 0 violates exp(x) >= 1 for x >= 0");
    }
    if (within_tol(at_one, 1.0, cfg) && f(1.0 + cfg.verify_eps) < 0.0) {
        return 1.0;
    }

    const double start = prev_delta ? std::max(*prev_delta, 1.0 + 1e-6) : 1.0 + 1e-6;
    if (auto d = newton(f, start, cfg); d && is_left_crossing(f, *d, cfg)) {
        return *d;
    }

    // Geometric scan of [1, delta_max] for the first sign change.
    const std::size_t n = std::max<std::size_t>(cfg.scan_points, 2);
    const double ratio = std::pow(cfg.delta_max, 1.0 / static_cast<double>(n - 1));
    double prev = 1.0;
    double min_phi = at_one;
    double argmin = 1.0;
    std::size_t argmin_idx = 0;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = (i + 1 == n) ? cfg.delta_max : std::pow(ratio, static_cast<double>(i));
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double delta = grid[i];
        const double value = f(delta);
        if (value < 0.0) {
            return bisect(f, prev, delta, cfg);
        }
        if (value < min_phi) {
            min_phi = value;
            argmin = delta;
            argmin_idx = i;
        }
        prev = delta;
    }

    // A narrow negative dip can fall between grid points; golden-section
    // search for the minimum on the bracketing cell pair.
    double lo = grid[argmin_idx == 0 ? 0 : argmin_idx - 1];
    double hi = grid[std::min(argmin_idx + 1, n - 1)];
    const double left_bracket = lo;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
        if (f1 < 0.0 || f2 < 0.0) {
            break;
        }
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if (f1 < 0.0) {
        return bisect(f, left_bracket, x1, cfg);
    }
    if (f2 < 0.0) {
        return bisect(f, left_bracket, x2, cfg);
    }
    if (f1 < min_phi) {
        min_phi = f1;
        argmin = x1;
    }
    if (f2 < min_phi) {
        min_phi = f2;
        argmin = x2;
    }
    return DeltaNotFound{min_phi, argmin};
}

double error_bound(double delta, double psi) {
    if (delta < 1.0) {
        throw std::invalid_argument("error_bound: delta must be >= 1");
    }
    return delta * psi;
}

double full_error_bound(double delta, double psi, const LocalPoly& u, const LocalPoly& u_hat) {
    const int n = linf_samples(std::max(u.degree(), u_hat.degree()));
    Vec a(static_cast<std::size_t>(u.dim()));
    Vec b(static_cast<std::size_t>(u.dim()));
    double gap = 0.0;
    for (double x : linf_sample_points(n)) {
        u.eval_reference(x, a);
        u_hat.eval_reference(x, b);
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            s += (a[j] - b[j]) * (a[j] - b[j]);
        }
        gap = std::max(gap, std::sqrt(s));
    }
    return error_bound(delta, psi) + gap;
}

double sampled_error(const ExactSolution& exact, const LocalPoly& v, int n_samples) {
    const Interval& iv = v.interval();
    Vec val(static_cast<std::size_t>(v.dim()));
    double worst = 0.0;
    for (double x : linf_sample_points(n_samples)) {
        v.eval_reference(x, val);
        const Vec u = exact(iv.to_time(x));
        double s = 0.0;
        for (std::size_t j = 0; j < val.size(); ++j) {
            s += (u[j] - val[j]) * (u[j] - val[j]);
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

double effectivity_ratio(double bound, double max_recon_error) {
    if (max_recon_error <= 0.0) {
        return kInf;
    }
    return bound / max_recon_error;
}

double effectivity(double bound, const Problem& p, std::span<const LocalPoly> reconstructions) {
    if (!p.exact) {
        throw std::invalid_argument("effectivity: problem has no exact solution");
    }
    double worst = 0.0;
    for (const LocalPoly& rec : reconstructions) {
        worst = std::max(worst, sampled_error(*p.exact, rec, linf_samples(rec.degree())));
    }
    return effectivity_ratio(bound, worst);
}

}  // namespace blowup
