#pragma once

#include <cstddef>
#include <variant>

#include "blowup/poly.hpp"
#include "blowup/problem.hpp"

namespace blowup {

enum class Scheme { CG, DG };

struct StepInput {
    Interval iv;
    int r;       // local degree r_m
    Vec u_left;  // U(t_{m-1}^-), or u0 on the first interval
    Scheme scheme;
};

/// Stopping rule for the fixed-point iteration.
struct PicardConfig {
    /// Max Legendre-coefficient update, relative to max(1, max |coeff|).
    double fp_tol = 1e-12;
    std::size_t max_iters = 100;
    /// Iterates whose sup norm exceeds this are treated as divergent.
    double divergence_cap = 1e8;
};

struct StepOutput {
    LocalPoly u;
    std::size_t picard_iters = 0;
    bool converged = false;
};

struct NoConvergence {
    enum class Reason { MaxIters, Diverged, Overflow };
    Reason reason;
    std::size_t iters = 0;
};

using StepResult = std::variant<StepOutput, NoConvergence>;

/// Quadrature size used for the nonlinear integrands of a degree-r step.
[[nodiscard]] inline int default_quad_points(int r) noexcept { return r + 6; }

/// Solves one hp-cG or hp-dG step by Picard iteration on the integrated form
///
///   W(t) = u_left + int_{t_{m-1}}^t Pi[F(s, U)] ds,
///
/// with Pi the L2 projection onto degree r-1 (cG) or r (dG). cG takes U = W.
/// dG takes the degree-r polynomial that matches W at t_m and agrees with W
/// in all moments against degree r-1, which is exactly the dG weak form.
/// Throws std::invalid_argument on an invalid degree or a weak rule.
[[nodiscard]] StepResult step(const Problem& p, const StepInput& in, const PicardConfig& cfg,
                              const QuadRule& quad);

/// Convenience overload using cached_rule(default_quad_points(r)).
[[nodiscard]] StepResult step(const Problem& p, const StepInput& in,
                              const PicardConfig& cfg = {});

/// Reconstruction u_left + int Pi^r F(s, U) ds, a degree r + 1 polynomial.
/// Throws NumericOverflow if F overflows along U.
[[nodiscard]] LocalPoly reconstruct(const Problem& p, const StepInput& in, const LocalPoly& u,
                                    const QuadRule& quad);
[[nodiscard]] LocalPoly reconstruct(const Problem& p, const StepInput& in, const LocalPoly& u);

/// Samples F(t, v(t)) at the mapped quadrature nodes (node-major layout).
[[nodiscard]] Vec sample_rhs(const Problem& p, const LocalPoly& v, const QuadRule& quad);

}  // namespace blowup
