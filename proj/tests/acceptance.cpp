// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "blowup/adapt.hpp"
#include "blowup/estimator.hpp"
#include "blowup/experiment.hpp"
#include "blowup/galerkin.hpp"
#include "blowup/poly.hpp"
#include "blowup/problem.hpp"

using namespace blowup;

namespace {

// Sweep protocol shared by criteria 1, 2, 3, 5 and 7.
constexpr double kInitialStep = 0.125;
constexpr int kHpSkip = 3;

std::vector<double> tolerance_list() {
    std::vector<double> tols;
    for (int i = 0; i <= 10; ++i) {
        tols.push_back(std::pow(10.0, -2.0 - 0.5 * i));
    }
    return tols;
}

struct SweepKey {
    int example;
    Scheme scheme;
    Mode mode;
    int r;
    bool operator<(const SweepKey& o) const {
        return std::tie(example, scheme, mode, r) < std::tie(o.example, o.scheme, o.mode, o.r);
    }
};

RunConfig sweep_config(const SweepKey& key) {
    RunConfig c;
    c.problem.name = key.example == 1 ? "power2" : "exp";
    c.problem.u0 = {1.0};
    c.adapt.scheme = key.scheme;
    c.adapt.mode = key.mode;
    c.adapt.r_init = key.r;
    c.adapt.k_init = kInitialStep;
    c.tol_list = tolerance_list();
    return c;
}

int failures = 0;

void report(int id, bool ok, const std::string& what) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!ok) {
        ++failures;
    }
}

std::string label(const SweepKey& k) {
    char buf[64];
    if (k.mode == Mode::H) {
        std::snprintf(buf, sizeof buf, "ex%d %s h r=%d", k.example, to_string(k.scheme), k.r);
    } else {
        std::snprintf(buf, sizeof buf, "ex%d %s hp", k.example, to_string(k.scheme));
    }
    return buf;
}

bool algebraic_rates(const std::map<SweepKey, SweepOutput>& sweeps, int example) {
    bool ok = true;
    for (Scheme s : {Scheme::CG, Scheme::DG}) {
        for (int r = 1; r <= 4; ++r) {
            const SweepKey key{example, s, Mode::H, r};
            const FitResult f = fit(sweeps.at(key).rows, FitModel::Algebraic);
            const bool good = std::abs(f.slope + (r + 1)) <= 0.5 && f.r_squared >= 0.9;
            ok = ok && good;
            std::printf("    %-16s slope %7.3f (target %d) R^2 %.4f  %s\n", label(key).c_str(),
                        f.slope, -(r + 1), f.r_squared, good ? "ok" : "out of range");
        }
    }
    return ok;
}

// log-log interpolation of an H sweep's error at `dofs`; nullopt outside its range.
std::optional<double> h_error_at(const SweepOutput& h, double dofs) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : h.rows) {
        if (!row.aborted && row.blowup_err > 0.0) {
            pts.emplace_back(std::log(static_cast<double>(row.dofs)), std::log(row.blowup_err));
        }
    }
    std::sort(pts.begin(), pts.end());
    // Equal DoF counts: keep the smaller error.
    std::vector<std::pair<double, double>> uniq;
    for (const auto& pt : pts) {
        if (!uniq.empty() && uniq.back().first == pt.first) {
            uniq.back().second = std::min(uniq.back().second, pt.second);
        } else {
            uniq.push_back(pt);
        }
    }
    const double x = std::log(dofs);
    if (uniq.empty() || x < uniq.front().first || x > uniq.back().first) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        if (x <= uniq[i + 1].first) {
            const double w = (x - uniq[i].first) / (uniq[i + 1].first - uniq[i].first);
            return std::exp((1.0 - w) * uniq[i].second + w * uniq[i + 1].second);
        }
    }
    return std::exp(uniq.back().second);
}

bool exponential_rates(const std::map<SweepKey, SweepOutput>& sweeps) {
    bool ok = true;
    for (int ex : {1, 2}) {
        for (Scheme s : {Scheme::CG, Scheme::DG}) {
            const SweepKey key{ex, s, Mode::HP, 1};
            const SweepOutput& hp = sweeps.at(key);
            const FitResult f = fit(hp.rows, FitModel::Exponential);
            const bool fit_ok = f.r_squared >= 0.9 && f.b && *f.b > 0.0;
            int compared = 0;
            int lost = 0;
            int tied = 0;
            for (std::size_t i = kHpSkip; i < hp.rows.size(); ++i) {
                const SweepRow& row = hp.rows[i];
                for (int r = 1; r <= 4; ++r) {
                    const auto e_h =
                        h_error_at(sweeps.at({ex, s, Mode::H, r}), static_cast<double>(row.dofs));
                    if (!e_h) {
                        continue;
                    }
                    ++compared;
                    if (!(row.blowup_err < *e_h)) {
                        ++lost;
                        const bool tie = std::abs(row.blowup_err - *e_h) <= 1e-12 * *e_h;
                        tied += tie ? 1 : 0;
                        std::printf("    %-16s dofs %zu err %.3e %s h r=%d (%.3e)\n",
                                    label(key).c_str(), row.dofs, row.blowup_err,
                                    tie ? "ties" : "above", r, *e_h);
                    }
                }
            }
            const bool good = fit_ok && lost == 0 && compared > 0;
            ok = ok && good;
            std::printf("    %-16s sqrt-dofs slope %7.3f b %.3f R^2 %.4f, beats h in %d/%d "
                        "comparisons (%d ties)  %s\n",
                        label(key).c_str(), f.slope, f.b.value_or(0.0), f.r_squared,
                        compared - lost, compared, tied, good ? "ok" : "not met");
        }
    }
    return ok;
}

bool bound_validity(const std::map<SweepKey, SweepOutput>& sweeps) {
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
    for (const auto& [key, out] : sweeps) {
        for (std::size_t i = 0; i < out.runs.size(); ++i) {
            for (const auto& rec : out.runs[i].intervals) {
                if (!rec.recon_error) {
                    continue;
                }
                ++checked;
                const double ratio = *rec.recon_error / rec.estimate.bound;
                if (ratio > worst) {
                    worst = ratio;
                    where = label(key) + " tol " + format_double(out.rows[i].tol_star);
                }
            }
        }
    }
    std::printf("    %zu intervals checked, max error/bound %.6f (%s)\n", checked, worst,
                where.c_str());
    return checked > 0 && worst <= 1.0 + 1e-6;
}

bool delta_hat_growth_rates(const std::map<SweepKey, SweepOutput>& sweeps) {
    bool ok = true;
    for (int ex : {1, 2}) {
        const double target = ex == 1 ? 2.0 : 1.0;
        const Problem p = ex == 1 ? make_power_square(1.0) : make_exponential(1.0);
        for (Scheme s : {Scheme::CG, Scheme::DG}) {
            const SweepKey key{ex, s, Mode::HP, 1};
            const RunResult& finest = sweeps.at(key).runs.back();
            const auto pts = trace(finest, p);
            const FitResult g = delta_hat_growth(pts, 20);
            const bool good = std::abs(g.slope - target) <= 0.5;
            ok = ok && good;
            std::printf("    %-16s M %zu, slope %.3f (target %.0f) R^2 %.4f  %s\n",
                        label(key).c_str(), finest.M, g.slope, target, g.r_squared,
                        good ? "ok" : "out of range");
        }
    }
    return ok;
}

bool effectivity_magnitude(const std::map<SweepKey, SweepOutput>& sweeps) {
    bool ok = true;
    double best_overall = std::numeric_limits<double>::infinity();
    for (Scheme s : {Scheme::CG, Scheme::DG}) {
        const SweepKey key{1, s, Mode::HP, 1};
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const auto& row : sweeps.at(key).rows) {
            lo = std::min(lo, row.best_effectivity);
            hi = std::max(hi, row.best_effectivity);
        }
        const bool good = lo >= 1.0 && hi <= 1e4;
        ok = ok && good;
        best_overall = std::min(best_overall, lo);
        std::printf("    %-16s best effectivity per run in [%.3f, %.3f]  %s\n",
                    label(key).c_str(), lo, hi, good ? "ok" : "out of range");
    }
    return ok && best_overall <= 200.0;
}

bool lipschitz_closed_form() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double L = 5.0 * (1.0 - unit(rng));  // (0, 5]
        const double k = 1.0 - unit(rng);          // (0, 1]
        const Problem p = make_linear(L, {1.0});
        const Interval iv(0.0, k);
        LocalPoly u_hat(iv, 2, 1);
        u_hat.coeff(0, 0) = 1.0 + unit(rng);
        u_hat.coeff(1, 0) = 0.1 * unit(rng);
        const double psi = std::pow(10.0, -8.0 * unit(rng));
        const DeltaResult res =
            solve_delta(p, iv, u_hat, psi, std::nullopt, DeltaSolverConfig{}, phi_rule(2));
        const double* d = std::get_if<double>(&res);
        const double err = d ? std::abs(*d - std::exp(L * k)) : INFINITY;
        worst = std::max(worst, err);
    }
    std::printf("    50 random (L, k): max |delta - exp(Lk)| = %.3e\n", worst);
    return worst <= 1e-8;
}

// Compact versions of the property suites; the unit tests cover them in more depth.
bool property_suites() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool ok = true;
    auto check = [&](bool cond, const char* name, double value) {
        std::printf("    %-44s %.3e  %s\n", name, value, cond ? "ok" : "violated");
        ok = ok && cond;
    };

    // Quadrature exactness on monomials.
    double quad_err = 0.0;
    for (int n = 1; n <= 20; ++n) {
        const QuadRule& q = cached_rule(n);
        for (int j = 0; j <= 2 * n - 1; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                s += q.weights[i] * std::pow(q.nodes[i], j);
            }
            const double exact = j % 2 == 0 ? 2.0 / (j + 1) : 0.0;
            quad_err = std::max(quad_err, std::abs(s - exact) / std::max(1.0, std::abs(exact)));
        }
    }
    check(quad_err <= 1e-12, "quadrature exactness, n <= 20", quad_err);

    // Projection idempotence and Parseval.
    double idem = 0.0;
    double parseval = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int r = static_cast<int>(unit(rng) * 9);
        const int d = 1 + static_cast<int>(unit(rng) * 4);
        const double a = 4.0 * sym(rng);
        const Interval iv(a, a + 0.01 + 3.0 * unit(rng));
        LocalPoly p(iv, r, d);
        for (int i = 0; i <= r; ++i) {
            for (int j = 0; j < d; ++j) {
                p.coeff(i, j) = sym(rng);
            }
        }
        const LocalPoly q = l2_project(
            [&](double t, std::span<double> out) {
                const Vec v = eval(p, t);
                std::copy(v.begin(), v.end(), out.begin());
            },
            d, iv, r, cached_rule(r + 1));
        double sum = 0.0;
        for (int i = 0; i <= r; ++i) {
            for (int j = 0; j < d; ++j) {
                idem = std::max(idem, std::abs(q.coeff(i, j) - p.coeff(i, j)));
                sum += iv.length() / (2.0 * i + 1.0) * p.coeff(i, j) * p.coeff(i, j);
            }
        }
        const double l2 = norms(p).l2;
        parseval = std::max(parseval, std::abs(l2 * l2 - sum) / std::max(1.0, sum));
    }
    check(idem <= 1e-12, "projection idempotence", idem);
    check(parseval <= 1e-12, "Parseval identity", parseval);

    // Nodal identity on random converged steps.
    double nodal = 0.0;
    int steps = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int which = trial % 3;
        const Problem p = which == 0   ? make_power_square(1.0)
                          : which == 1 ? make_exponential(1.0)
                                       : make_linear(-2.0, {1.0, 0.5});
        const Scheme s = trial % 2 == 0 ? Scheme::CG : Scheme::DG;
        const int r = (s == Scheme::CG ? 1 : 0) + static_cast<int>(unit(rng) * 5);
        Vec u_left = p.u0;
        for (double& x : u_left) {
            x *= 0.5 + unit(rng);
        }
        const StepInput in{Interval(0.0, 0.01 + 0.1 * unit(rng)), r, u_left, s};
        const StepResult res = step(p, in);
        if (const auto* out = std::get_if<StepOutput>(&res)) {
            const LocalPoly rec = reconstruct(p, in, out->u);
            const Vec a = rec.right_value();
            const Vec b = out->u.right_value();
            for (std::size_t j = 0; j < a.size(); ++j) {
                nodal = std::max(nodal, std::abs(a[j] - b[j]));
            }
            ++steps;
        }
    }
    check(steps > 0 && nodal <= 1e-10, "nodal identity U_hat(t_m) = U(t_m^-)", nodal);

    // dG(0) reproduces implicit Euler.
    double euler = 0.0;
    {
        const double lambda = -3.0;
        const double k = 0.05;
        const Problem p = make_linear(lambda, {1.0});
        Vec u{1.0};
        for (int m = 1; m <= 40; ++m) {
            const StepInput in{Interval((m - 1) * k, m * k), 0, u, Scheme::DG};
            const auto out = std::get<StepOutput>(step(p, in));
            u = out.u.right_value();
            euler = std::max(euler, std::abs(u[0] - std::pow(1.0 - lambda * k, -m)));
        }
    }
    check(euler <= 1e-10, "dG(0) equals implicit Euler", euler);

    // Residual estimator against a brute-force oracle.
    double oracle_rel = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Problem p = trial % 2 == 0 ? make_power_square(1.0) : make_exponential(1.0);
        const Scheme s = trial % 4 < 2 ? Scheme::CG : Scheme::DG;
        const int r = 1 + trial % 3;
        const Vec u_left{0.5 + 0.5 * unit(rng)};
        const double k = 0.05 + 0.15 * unit(rng);
        const StepInput in{Interval(0.0, k), r, u_left, s};
        const auto out = std::get<StepOutput>(step(p, in));
        const LocalPoly rec = reconstruct(p, in, out.u);
        const double eta = residual_estimator(p, rec, u_left);
        const QuadRule& q64 = cached_rule(64);
        const double t0 = rec.interval().t_start();
        double sup = 0.0;
        Vec fv(1);
        for (int i = 1; i <= 10000; ++i) {
            const double t = t0 + k * i / 10000.0;
            double integral = 0.0;
            for (std::size_t j = 0; j < q64.size(); ++j) {
                const double s_j = t0 + 0.5 * (t - t0) * (q64.nodes[j] + 1.0);
                const Vec v = eval(rec, s_j);
                p.rhs(s_j, v, fv);
                integral += 0.5 * (t - t0) * q64.weights[j] * fv[0];
            }
            const double R = integral - (eval(rec, t)[0] - eval(rec, t0)[0]);
            sup = std::max(sup, std::abs(R));
        }
        oracle_rel = std::max(oracle_rel, std::abs(eta - sup) / sup);
    }
    check(oracle_rel <= 0.01, "residual estimator vs 1e4-sample oracle", oracle_rel);

    // psi recursion and tolerance ledger on an adaptive run.
    {
        AdaptConfig cfg;
        cfg.tol_star = 1e-5;
        const Problem p = make_power_square(1.0);
        const RunResult r = adapt(p, cfg);
        double psi_err = 0.0;
        bool ledger = true;
        double delta_hat = 1.0;
        for (std::size_t m = 0; m < r.intervals.size(); ++m) {
            const StepEstimate& e = r.intervals[m].estimate;
            const double expected = m == 0 ? e.eta_proj + e.eta_res
                                           : *r.intervals[m - 1].estimate.delta *
                                                     r.intervals[m - 1].estimate.psi +
                                                 e.eta_proj + e.eta_res;
            psi_err = std::max(psi_err, std::abs(e.psi - expected) / expected);
            ledger = ledger && r.tol_trace[m] == cfg.tol_star * delta_hat &&
                     e.eta_res <= r.tol_trace[m];
            delta_hat *= *e.delta;
            ledger = ledger && e.delta_hat == delta_hat;
        }
        check(psi_err == 0.0, "psi recursion", psi_err);
        check(ledger, "tolerance ledger tol = tol* delta_hat", ledger ? 0.0 : 1.0);
    }

    // Smoothness indicator analytic cases.
    {
        const Interval iv(0.0, 1.0);
        LocalPoly c(iv, 2, 1);
        c.coeff(0, 0) = 3.0;
        const double th_const = smoothness(c, 1).theta;
        LocalPoly t(iv, 1, 1);
        t.coeff(0, 0) = 0.5;
        t.coeff(1, 0) = 0.5;
        const double th_t = smoothness(t, 1).theta;
        const double expected = 1.0 / (1.0 / std::sqrt(3.0) + 1.0 / std::sqrt(2.0));
        check(th_const == 1.0, "theta of a constant is 1", std::abs(th_const - 1.0));
        check(std::abs(th_t - 0.778) <= 1e-3, "theta of w(t) = t on (0,1) near 0.778",
              std::abs(th_t - expected));
    }
    return ok;
}

bool unconditional_linear() {
    const Problem p = make_linear(1.0, {1.0});
    bool ok = true;
    for (Scheme s : {Scheme::CG, Scheme::DG}) {
        for (Mode mode : {Mode::H, Mode::HP}) {
            AdaptConfig cfg;
            cfg.scheme = s;
            cfg.mode = mode;
            cfg.tol_star = 1e-6;
            cfg.max_intervals = 100;
            const RunResult r = adapt(p, cfg);
            double delta_dev = 0.0;
            for (const auto& rec : r.intervals) {
                delta_dev = std::max(delta_dev,
                                     std::abs(*rec.estimate.delta - std::exp(rec.iv.length())));
            }
            const bool good = r.termination == Termination::MaxIntervals && r.M == 100;
            ok = ok && good;
            std::printf("    %s %s: %s after M=%zu, T=%.4f, max |delta - e^k| %.2e\n",
                        to_string(s), to_string(mode), to_string(r.termination), r.M, r.T,
                        delta_dev);
        }
    }
    return ok;
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();

    std::map<SweepKey, SweepOutput> sweeps;
    for (int ex : {1, 2}) {
        for (Scheme s : {Scheme::CG, Scheme::DG}) {
            for (int r = 1; r <= 4; ++r) {
                const SweepKey key{ex, s, Mode::H, r};
                sweeps.emplace(key, sweep(sweep_config(key)));
            }
            const SweepKey key{ex, s, Mode::HP, 1};
            sweeps.emplace(key, sweep(sweep_config(key)));
        }
    }
    const std::chrono::duration<double> sweep_time = std::chrono::steady_clock::now() - start;
    std::printf("sweeps: k_init %.3f, tol* = 10^-2 ... 10^-7 in half decades, %.2f s\n",
                kInitialStep, sweep_time.count());

    report(1, algebraic_rates(sweeps, 1), "algebraic rates, example 1 (u' = u^2)");
    report(2, algebraic_rates(sweeps, 2), "algebraic rates, example 2 (u' = e^u)");
    report(3, exponential_rates(sweeps), "exponential rates of hp runs, beat h at equal DoFs");
    report(4, lipschitz_closed_form(), "delta = exp(Lk) for a constant envelope");
    report(5, bound_validity(sweeps), "error <= delta psi on every accepted interval");
    report(6, delta_hat_growth_rates(sweeps), "delta_hat growth against 1/eps");
    report(7, effectivity_magnitude(sweeps), "effectivity magnitude, example 1 hp");
    report(8, property_suites(), "property suites");
    report(9, unconditional_linear(), "globally Lipschitz problem never stops on delta");

    const std::chrono::duration<double> total = std::chrono::steady_clock::now() - start;
    std::printf("%d of 9 criteria failed, %.2f s\n", failures, total.count());
    return failures == 0 ? 0 : 1;
}
