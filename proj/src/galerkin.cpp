#include "blowup/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace blowup {

Vec sample_rhs(const Problem& p, const LocalPoly& v, const QuadRule& quad) {
    const auto d = static_cast<std::size_t>(v.dim());
    Vec samples(quad.size() * d);
    Vec val(d);
    const Interval& iv = v.interval();
    for (std::size_t q = 0; q < quad.size(); ++q) {
        v.eval_reference(quad.nodes[q], val);
        p.rhs(iv.to_time(quad.nodes[q]), val, std::span<double>(samples).subspan(q * d, d));
    }
    return samples;
}

namespace {

void validate(const Problem& p, const StepInput& in, const QuadRule& quad) {
    if (static_cast<int>(in.u_left.size()) != p.dim) {
        throw std::invalid_argument("step: u_left has wrong dimension");
    }
    if (in.scheme == Scheme::CG && in.r < 1) {
        throw std::invalid_argument("step: cG requires r >= 1");
    }
    if (in.r < 0) {
        throw std::invalid_argument("step: negative degree");
    }
    if (quad.size() < static_cast<std::size_t>(in.r + 1)) {
        throw std::invalid_argument("step: quadrature with " + std::to_string(quad.size()) +
                                    " points is too weak for degree " + std::to_string(in.r));
    }
}

// One application of the fixed-point map.
LocalPoly picard_map(const Problem& p, const StepInput& in, const LocalPoly& u,
                     const QuadRule& quad) {
    const Vec samples = sample_rhs(p, u, quad);
    if (in.scheme == Scheme::CG) {
        const LocalPoly proj = project_samples(samples, p.dim, in.iv, in.r - 1, quad);
        return antiderivative(proj, in.u_left);
    }
    const LocalPoly proj = project_samples(samples, p.dim, in.iv, in.r, quad);
    const LocalPoly w = antiderivative(proj, in.u_left);
    // Fold the top mode of W into P_r: same moments up to degree r-1 and the
    // same value at t_m, since P_r(1) = P_{r+1}(1) = 1.
    LocalPoly next(in.iv, in.r, p.dim);
    for (int i = 0; i <= in.r; ++i) {
        for (int j = 0; j < p.dim; ++j) {
            next.coeff(i, j) = w.coeff(i, j);
        }
    }
    for (int j = 0; j < p.dim; ++j) {
        next.coeff(in.r, j) += w.coeff(in.r + 1, j);
    }
    return next;
}

double abs_sum_bound(const LocalPoly& u) {
    // sup |u| <= sum |c_i| because |P_i| <= 1 on [-1, 1].
    double s = 0.0;
    for (int i = 0; i <= u.degree(); ++i) {
        double ci = 0.0;
        for (int j = 0; j < u.dim(); ++j) {
            ci += u.coeff(i, j) * u.coeff(i, j);
        }
        s += std::sqrt(ci);
    }
    return s;
}

}  // namespace

StepResult step(const Problem& p, const StepInput& in, const PicardConfig& cfg,
                const QuadRule& quad) {
    validate(p, in, quad);

    LocalPoly u(in.iv, in.r, p.dim);
    for (int j = 0; j < p.dim; ++j) {
        u.coeff(0, j) = in.u_left[static_cast<std::size_t>(j)];
    }

    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        std::optional<LocalPoly> mapped;
        try {
            mapped = picard_map(p, in, u, quad);
        } catch (const NumericOverflow&) {
            return NoConvergence{NoConvergence::Reason::Overflow, it};
        }
        LocalPoly next = std::move(*mapped);

        if (abs_sum_bound(next) > cfg.divergence_cap &&
            linf_norm(next, linf_samples(next.degree())) > cfg.divergence_cap) {
            return NoConvergence{NoConvergence::Reason::Diverged, it};
        }

        double change = 0.0;
        double scale = 1.0;
        const auto old_c = u.coeffs();
        const auto new_c = next.coeffs();
        for (std::size_t i = 0; i < new_c.size(); ++i) {
            if (!std::isfinite(new_c[i])) {
                return NoConvergence{NoConvergence::Reason::Overflow, it};
            }
            change = std::max(change, std::abs(new_c[i] - old_c[i]));
            scale = std::max(scale, std::abs(new_c[i]));
        }
        u = std::move(next);
        if (change <= cfg.fp_tol * scale) {
            return StepOutput{std::move(u), it, true};
        }
    }
    return NoConvergence{NoConvergence::Reason::MaxIters, cfg.max_iters};
}

StepResult step(const Problem& p, const StepInput& in, const PicardConfig& cfg) {
    const int r = std::max(in.r, 0);
    return step(p, in, cfg, cached_rule(default_quad_points(r)));
}

LocalPoly reconstruct(const Problem& p, const StepInput& in, const LocalPoly& u,
                      const QuadRule& quad) {
    const Vec samples = sample_rhs(p, u, quad);
    const LocalPoly proj = project_samples(samples, p.dim, in.iv, in.r, quad);
    return antiderivative(proj, in.u_left);
}

LocalPoly reconstruct(const Problem& p, const StepInput& in, const LocalPoly& u) {
    return reconstruct(p, in, u, cached_rule(default_quad_points(std::max(in.r, 0))));
}

}  // namespace blowup
