#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "blowup/poly.hpp"
#include "blowup/problem.hpp"

namespace blowup {

/// Per-interval estimator state.
struct StepEstimate {
    double eta_res = 0.0;
    double eta_proj = 0.0;  // eta^proj_{m-1}; zero while the projector is the identity
    double psi = 0.0;
    std::optional<double> delta;
    double bound = 0.0;  // delta * psi
    double delta_hat = 1.0;
    std::optional<double> effectivity;
};

struct DeltaSolverConfig {
    double newton_tol = 1e-10;
    std::size_t max_newton = 50;
    double fd_step = 1e-7;
    double delta_max = 1e6;
    std::size_t scan_points = 200;
    double verify_eps = 1e-8;
};

/// Polynomial degree used to resolve F(s, U_hat) inside the residual.
[[nodiscard]] inline int residual_projection_degree(int recon_degree) noexcept {
    return recon_degree + 4;
}

/// Residual polynomial R(t) = int_{t_{m-1}}^t F(s, U_hat) ds - (U_hat(t) - U_hat(t_{m-1})),
/// with F(s, U_hat) projected onto degree deg(U_hat) + 4.
[[nodiscard]] LocalPoly residual_polynomial(const Problem& p, const LocalPoly& u_hat,
                                            const QuadRule& quad);

/// eta^res = sampled sup norm of the residual. Throws NumericOverflow.
[[nodiscard]] double residual_estimator(const Problem& p, const LocalPoly& u_hat,
                                        std::span<const double> u_left, const QuadRule& quad);
[[nodiscard]] double residual_estimator(const Problem& p, const LocalPoly& u_hat,
                                        std::span<const double> u_left);

using Projector = std::function<Vec(std::span<const double>)>;

/// ||v - P v||; with no projector (P = identity) this is 0.
[[nodiscard]] double projection_estimator(std::span<const double> u_right_minus,
                                          const Projector& projector = {});

/// psi_1 = eta^proj_0 + eta^res_1, psi_m = delta_{m-1} psi_{m-1} + eta^proj_{m-1} + eta^res_m.
/// Throws std::logic_error if prev is given without a delta.
[[nodiscard]] double psi_update(const std::optional<StepEstimate>& prev, double eta_proj_prev,
                                double eta_res);

/// phi(delta) = exp(int L(s, delta psi + |U_hat|, |U_hat|) ds) - delta.
/// Returns +infinity when the exponent or the envelope overflows.
[[nodiscard]] double phi(const Problem& p, const Interval& iv, const LocalPoly& u_hat, double psi,
                         double delta, const QuadRule& quad);

/// Quadrature used for phi on a reconstruction of the given degree.
[[nodiscard]] const QuadRule& phi_rule(int recon_degree);

struct DeltaNotFound {
    double min_phi;
    double argmin;
};

using DeltaResult = std::variant<double, DeltaNotFound>;

/// Leftmost root delta >= 1 of phi, i.e. inf{delta > 1 : phi(delta) < 0}.
///
/// Finite-difference Newton from prev_delta (or 1 + 1e-6) first. The result
/// is accepted only if |phi| is within newton_tol (scaled by delta) and
/// phi(delta (1 + verify_eps)) < 0. Otherwise a geometric scan of
/// [1, delta_max] looks for the first sign change and bisects it; when the
/// scan finds none, the minimum is refined by golden-section search before
/// DeltaNotFound is reported.
[[nodiscard]] DeltaResult solve_delta(const Problem& p, const Interval& iv, const LocalPoly& u_hat,
                                      double psi, std::optional<double> prev_delta,
                                      const DeltaSolverConfig& cfg, const QuadRule& quad);

/// Reconstruction error bound delta * psi.
[[nodiscard]] double error_bound(double delta, double psi);

/// Bound on the error of U itself: delta psi + ||U - U_hat||_inf (sampled).
[[nodiscard]] double full_error_bound(double delta, double psi, const LocalPoly& u,
                                      const LocalPoly& u_hat);

/// Sampled sup over the interval of ||exact(t) - v(t)||.
[[nodiscard]] double sampled_error(const ExactSolution& exact, const LocalPoly& v,
                                   int n_samples);

/// bound / max_k ||u - U_hat_k||, the maximum taken over the supplied
/// reconstructions. Requires p.exact; returns +infinity for a zero denominator.
[[nodiscard]] double effectivity(double bound, const Problem& p,
                                 std::span<const LocalPoly> reconstructions);

/// Same ratio from an already-known maximal reconstruction error.
[[nodiscard]] double effectivity_ratio(double bound, double max_recon_error);

}  // namespace blowup
