#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "blowup/estimator.hpp"
#include "blowup/galerkin.hpp"
#include "blowup/poly.hpp"
#include "blowup/problem.hpp"

namespace blowup {

enum class Mode { H, HP };

enum class Termination { DeltaNotFound, KMinReached, MaxIntervals };

[[nodiscard]] const char* to_string(Scheme s) noexcept;
[[nodiscard]] const char* to_string(Mode m) noexcept;
[[nodiscard]] const char* to_string(Termination t) noexcept;

struct AdaptConfig {
    Scheme scheme = Scheme::CG;
    Mode mode = Mode::H;
    int r_init = 1;
    int r_max = 30;
    double k_init = 0.1;
    double tol_star = 1e-3;
    double theta_star = 0.85;
    double k_min = 1e-14;
    std::size_t max_intervals = 1000000;
    DeltaSolverConfig delta;
    PicardConfig picard;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct SmoothnessReport {
    double theta = 1.0;
    bool smooth = true;
};

/// theta[w] = ||w||_inf / (k^{-1/2} ||w||_2 + k^{1/2} ||w'||_2 / sqrt(2)) applied to
/// w = d^{r-1}u/dt^{r-1}; theta = 1 when w vanishes. Requires r >= 1.
[[nodiscard]] SmoothnessReport smoothness(const LocalPoly& u, int r, double theta_star = 0.85);

/// One accepted interval I_m.
struct IntervalRecord {
    Interval iv;
    int r;
    StepOutput step;
    LocalPoly reconstruction;
    StepEstimate estimate;
    std::optional<double> theta;      // smoothness of the accepted U (r >= 1)
    std::optional<double> recon_error;  // sampled ||u - U_hat_m||, when u is known
    std::string refinements;          // 'e' existence halving, 'h' accuracy halving, 'p' degree raise
    std::size_t attempts = 0;         // step() calls spent on this interval
};

struct RunResult {
    Scheme scheme = Scheme::CG;
    int dim = 1;
    std::vector<IntervalRecord> intervals;
    double T = 0.0;
    std::size_t M = 0;
    std::size_t dofs = 0;
    Termination termination = Termination::DeltaNotFound;
    std::vector<double> tol_trace;  // tolerance in force when each interval was accepted
    std::optional<DeltaNotFound> final_delta;  // diagnostics of the terminating phi scan
    std::size_t total_attempts = 0;
};

/// Algorithm with fixed degree: halve k until the step exists and until
/// eta^res <= tol, accept, then scale the tolerance by delta_m. Stops when
/// delta no longer exists.
[[nodiscard]] RunResult h_adapt(const Problem& p, const AdaptConfig& cfg);

/// As h_adapt, but accuracy refinement raises r when U is smooth and halves k
/// otherwise. Existence failures always halve k.
[[nodiscard]] RunResult hp_adapt(const Problem& p, const AdaptConfig& cfg);

/// Dispatches on cfg.mode.
[[nodiscard]] RunResult adapt(const Problem& p, const AdaptConfig& cfg);

/// Sum over accepted intervals of d * r_m (cG) or d * (r_m + 1) (dG).
[[nodiscard]] std::size_t dof_count(const RunResult& result);
[[nodiscard]] std::size_t dof_count(std::span<const int> degrees, Scheme scheme, int dim);

}  // namespace blowup
