#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "blowup/adapt.hpp"
#include "blowup/problem.hpp"

namespace blowup {

/// Malformed or invalid configuration. The message starts with the offending key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ProblemSpec {
    std::string name = "power2";  // power2 | exp | linear
    Vec u0{1.0};
    double lambda = 1.0;  // linear only
};

/// Everything needed to reproduce a run or a sweep.
struct RunConfig {
    ProblemSpec problem;
    AdaptConfig adapt;
    std::vector<double> tol_list;  // sweep only; nonempty and strictly decreasing
};

/// Parses a JSON config. Unknown keys are rejected. Throws ConfigError.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j);
[[nodiscard]] RunConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(config_to_json(c)) reproduces c.
[[nodiscard]] nlohmann::json config_to_json(const RunConfig& c);

/// Builds the named problem. Throws ConfigError("unknown problem ...").
[[nodiscard]] Problem make_problem(const ProblemSpec& spec);

/// Self-contained report: the canonical config, the run summary and one
/// trace entry per accepted interval. Contains no timing information.
[[nodiscard]] nlohmann::json run_report(const RunConfig& c, const Problem& p,
                                        const RunResult& r);

/// One line of a tolerance sweep.
struct SweepRow {
    double tol_star = 0.0;
    std::size_t M = 0;
    std::size_t dofs = 0;
    double T = 0.0;
    double blowup_err = 0.0;  // |T - T_inf|, NaN when T_inf is unknown
    double delta_hat = 1.0;   // delta_hat of the last accepted interval
    double best_effectivity = 0.0;  // smallest effectivity of the run, NaN without an exact solution
    double wall_time_s = 0.0;
    bool aborted = false;  // KMinReached
};

[[nodiscard]] SweepRow summarize(double tol_star, const Problem& p, const RunResult& r,
                                 double wall_time_s);

struct SweepOutput {
    std::vector<SweepRow> rows;
    std::vector<RunResult> runs;
};

/// One run per entry of c.tol_list, optionally on separate threads.
/// Rows and runs come back in tol_list order. Throws ConfigError on an
/// empty or non-decreasing tol_list.
[[nodiscard]] SweepOutput sweep(const RunConfig& c, bool parallel = true);

extern const char* const kCsvHeader;

void write_csv(std::ostream& os, std::span<const SweepRow> rows);
/// Throws std::invalid_argument on a wrong header or a malformed line.
[[nodiscard]] std::vector<SweepRow> read_csv(std::istream& is);

/// printf("%.17g"); parses back to the same double.
[[nodiscard]] std::string format_double(double x);

enum class FitModel { Algebraic, Exponential };

[[nodiscard]] FitModel parse_fit_model(const std::string& s);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    std::size_t n = 0;
    /// Exponential model only: b with err ~ exp(-sqrt(b dofs)), i.e. slope^2 when slope < 0.
    std::optional<double> b;
};

/// Ordinary least squares y = intercept + slope x. R^2 is 1 when y is constant.
/// Throws std::invalid_argument for fewer than two points or constant x.
[[nodiscard]] FitResult least_squares(std::span<const double> x, std::span<const double> y);

/// Algebraic: log(err) against log(dofs). Exponential: log(err) against sqrt(dofs).
/// Uses rows that are not aborted and have a positive finite error; at least three
/// are required, otherwise std::invalid_argument.
[[nodiscard]] FitResult fit(std::span<const SweepRow> rows, FitModel model);

struct TracePoint {
    double inv_eps;  // 1 / |t_m - T_inf|
    double delta_hat;
    double effectivity;  // NaN when not recorded
};

/// Trace of accepted intervals against the distance to blow-up.
/// Throws std::invalid_argument when the problem has no known blow-up time.
[[nodiscard]] std::vector<TracePoint> trace(const RunResult& r, const Problem& p);
[[nodiscard]] std::vector<TracePoint> trace(const nlohmann::json& report);

/// Fit of log delta_hat against log inv_eps over the last `tail` points.
[[nodiscard]] FitResult delta_hat_growth(std::span<const TracePoint> pts, std::size_t tail = 20);

}  // namespace blowup
