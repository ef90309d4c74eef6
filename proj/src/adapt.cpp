#include "blowup/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace blowup {

const char* to_string(Scheme s) noexcept { return s == Scheme::CG ? "cg" : "dg"; }

const char* to_string(Mode m) noexcept { return m == Mode::H ? "h" : "hp"; }

const char* to_string(Termination t) noexcept {
    switch (t) {
        case Termination::DeltaNotFound: return "DeltaNotFound";
        case Termination::KMinReached: return "KMinReached";
        case Termination::MaxIntervals: return "MaxIntervals";
    }
    return "unknown";
}

void AdaptConfig::validate() const {
    const int r_floor = (scheme == Scheme::CG || mode == Mode::HP) ? 1 : 0;
    if (r_init < r_floor) {
        throw std::invalid_argument("r_init: must be >= " + std::to_string(r_floor) +
                                    " for this scheme and mode");
    }
    if (mode == Mode::HP && r_max < r_init) {
        throw std::invalid_argument("r_max: must be >= r_init");
    }
    const int r_top = mode == Mode::HP ? r_max : r_init;
    if (residual_projection_degree(r_top + 1) + 6 > 64) {
        throw std::invalid_argument(std::string(mode == Mode::HP ? "r_max" : "r_init") +
                                    ": too large for the quadrature table (max 53)");
    }
    if (!(k_init > 0.0) || !std::isfinite(k_init)) {
        throw std::invalid_argument("k_init: must be positive");
    }
    if (!(tol_star > 0.0)) {
        throw std::invalid_argument("tol: must be positive");
    }
    if (!(theta_star > 0.0 && theta_star < 1.0)) {
        throw std::invalid_argument("theta_star: must lie in (0, 1)");
    }
    if (!(k_min > 0.0)) {
        throw std::invalid_argument("k_min: must be positive");
    }
    if (max_intervals == 0) {
        throw std::invalid_argument("max_intervals: must be positive");
    }
    if (!(delta.newton_tol > 0.0 && delta.fd_step > 0.0 && delta.delta_max > 1.0 &&
          delta.verify_eps > 0.0 && delta.max_newton > 0 && delta.scan_points > 1)) {
        throw std::invalid_argument("delta: solver settings must be positive");
    }
    if (!(picard.fp_tol > 0.0 && picard.divergence_cap > 0.0 && picard.max_iters > 0)) {
        throw std::invalid_argument("picard: settings must be positive");
    }
}

SmoothnessReport smoothness(const LocalPoly& u, int r, double theta_star) {
    if (r < 1) {
        throw std::invalid_argument("smoothness: requires r >= 1");
    }
    LocalPoly w = u;
    for (int i = 0; i < r - 1; ++i) {
        w = derivative(w);
    }
    double u_scale = 0.0;
    for (double c : u.coeffs()) {
        u_scale = std::max(u_scale, std::abs(c));
    }
    double w_scale = 0.0;
    for (double c : w.coeffs()) {
        w_scale = std::max(w_scale, std::abs(c));
    }
    SmoothnessReport rep;
    if (w_scale <= 1e-14 * u_scale || w_scale == 0.0) {
        rep.theta = 1.0;
    } else {
        const Norms n = norms(w);
        const double k = w.interval().length();
        const double denom = n.l2 / std::sqrt(k) + std::sqrt(k) * n.h1_semi / std::sqrt(2.0);
        rep.theta = std::clamp(n.linf / denom, 0.0, 1.0);
    }
    rep.smooth = rep.theta >= theta_star;
    return rep;
}

std::size_t dof_count(std::span<const int> degrees, Scheme scheme, int dim) {
    std::size_t total = 0;
    for (int r : degrees) {
        const int local = scheme == Scheme::CG ? r : r + 1;
        total += static_cast<std::size_t>(local) * static_cast<std::size_t>(dim);
    }
    return total;
}

std::size_t dof_count(const RunResult& result) {
    std::vector<int> degrees;
    degrees.reserve(result.intervals.size());
    for (const auto& rec : result.intervals) {
        degrees.push_back(rec.r);
    }
    return dof_count(degrees, result.scheme, result.dim);
}

namespace {

struct Candidate {
    StepOutput step;
    LocalPoly reconstruction;
    double eta_res;
};

class Driver {
public:
    Driver(const Problem& p, const AdaptConfig& cfg) : p_(p), cfg_(cfg) {}

    RunResult run() {
        RunResult result;
        result.scheme = cfg_.scheme;
        result.dim = p_.dim;

        double t = 0.0;
        Vec u_left = p_.u0;
        double k = cfg_.k_init;
        int r = cfg_.r_init;
        double delta_hat = 1.0;
        std::optional<StepEstimate> prev;
        double max_recon_error = 0.0;

        while (true) {
            if (result.intervals.size() >= cfg_.max_intervals) {
                result.termination = Termination::MaxIntervals;
                break;
            }
            std::string refinements;
            std::size_t attempts = 0;
            bool k_min_hit = false;

            // Existence: halve k until U exists.
            auto existing = [&]() -> std::optional<Candidate> {
                while (true) {
                    if (k < cfg_.k_min || t + k == t) {
                        k_min_hit = true;
                        return std::nullopt;
                    }
                    ++attempts;
                    if (auto c = attempt(t, k, r, u_left)) {
                        return c;
                    }
                    k *= 0.5;
                    refinements.push_back('e');
                }
            };

            std::optional<Candidate> cand = existing();
            const double tol = cfg_.tol_star * delta_hat;
            while (cand && cand->eta_res > tol) {
                if (cfg_.mode == Mode::HP && r < cfg_.r_max &&
                    smoothness(cand->step.u, r, cfg_.theta_star).smooth) {
                    ++r;
                    refinements.push_back('p');
                } else {
                    k *= 0.5;
                    refinements.push_back('h');
                }
                cand = existing();
            }
            result.total_attempts += attempts;
            if (!cand || k_min_hit) {
                result.termination = Termination::KMinReached;
                break;
            }

            const Interval iv(t, t + k);
            StepEstimate est;
            est.eta_res = cand->eta_res;
            est.eta_proj = projection_estimator(u_left);
            est.psi = psi_update(prev, est.eta_proj, est.eta_res);

            const LocalPoly& rec = cand->reconstruction;
            const std::optional<double> prev_delta =
                prev ? prev->delta : std::optional<double>{};
            const DeltaResult dres =
                solve_delta(p_, iv, rec, est.psi, prev_delta, cfg_.delta, phi_rule(rec.degree()));
            if (const auto* nf = std::get_if<DeltaNotFound>(&dres)) {
                result.final_delta = *nf;
                result.termination = Termination::DeltaNotFound;
                break;
            }
            const double delta = std::get<double>(dres);
            est.delta = delta;
            est.bound = error_bound(delta, est.psi);
            delta_hat *= delta;
            est.delta_hat = delta_hat;

            IntervalRecord record{iv, r, cand->step, cand->reconstruction, est, std::nullopt,
                                  std::nullopt, std::move(refinements), attempts};
            if (r >= 1) {
                record.theta = smoothness(cand->step.u, r, cfg_.theta_star).theta;
            }
            if (p_.exact && (!p_.t_blowup || iv.t_end() < *p_.t_blowup)) {
                const double err = sampled_error(*p_.exact, rec, linf_samples(rec.degree()));
                record.recon_error = err;
                max_recon_error = std::max(max_recon_error, err);
                record.estimate.effectivity = effectivity_ratio(est.bound, max_recon_error);
            }
            result.tol_trace.push_back(tol);

            t = iv.t_end();
            u_left = cand->step.u.right_value();
            prev = record.estimate;
            result.intervals.push_back(std::move(record));
        }

        result.T = t;
        result.M = result.intervals.size();
        result.dofs = dof_count(result);
        return result;
    }

private:
    std::optional<Candidate> attempt(double t, double k, int r, const Vec& u_left) const {
        const Interval iv(t, t + k);
        const StepInput in{iv, r, u_left, cfg_.scheme};
        StepResult res = step(p_, in, cfg_.picard);
        auto* out = std::get_if<StepOutput>(&res);
        if (out == nullptr) {
            return std::nullopt;
        }
        try {
            LocalPoly rec = reconstruct(p_, in, out->u);
            const double eta = residual_estimator(p_, rec, u_left);
            if (!std::isfinite(eta)) {
                return std::nullopt;
            }
            return Candidate{std::move(*out), std::move(rec), eta};
        } catch (const NumericOverflow&) {
            return std::nullopt;
        }
    }

    const Problem& p_;
    const AdaptConfig& cfg_;
};

}  // namespace

RunResult h_adapt(const Problem& p, const AdaptConfig& cfg) {
    if (cfg.mode != Mode::H) {
        throw std::invalid_argument("h_adapt: mode must be h");
    }
    cfg.validate();
    return Driver(p, cfg).run();
}

RunResult hp_adapt(const Problem& p, const AdaptConfig& cfg) {
    if (cfg.mode != Mode::HP) {
        throw std::invalid_argument("hp_adapt: mode must be hp");
    }
    cfg.validate();
    return Driver(p, cfg).run();
}

RunResult adapt(const Problem& p, const AdaptConfig& cfg) {
    return cfg.mode == Mode::H ? h_adapt(p, cfg) : hp_adapt(p, cfg);
}

}  // namespace blowup
