#include "blowup/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <initializer_list>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace blowup {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
}

void check_keys(const json& j, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        fail(prefix.empty() ? "config" : prefix, "expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return key == a; });
        if (!known) {
            fail(prefix.empty() ? key : prefix + "." + key, "unknown key");
        }
    }
}

double get_number(const json& j, const char* key, const std::string& path, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        fail(path, "expected a number");
    }
    return v.get<double>();
}

template <class Int>
Int get_count(const json& j, const char* key, const std::string& path, Int fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
        fail(path, "expected an integer");
    }
    if constexpr (std::is_unsigned_v<Int>) {
        if (v.get<long long>() < 0) {
            fail(path, "must be non-negative");
        }
    }
    return v.get<Int>();
}

std::string get_string(const json& j, const char* key, const std::string& path,
                       const std::string& fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        fail(path, "expected a string");
    }
    return v.get<std::string>();
}

ProblemSpec parse_problem(const json& j) {
    ProblemSpec spec;
    if (j.is_string()) {
        spec.name = j.get<std::string>();
        return spec;
    }
    check_keys(j, "problem", {"name", "u0", "lambda"});
    if (!j.contains("name")) {
        fail("problem.name", "missing");
    }
    spec.name = get_string(j, "name", "problem.name", "");
    if (j.contains("u0")) {
        const json& u0 = j.at("u0");
        if (u0.is_number()) {
            spec.u0 = {u0.get<double>()};
        } else if (u0.is_array() && !u0.empty()) {
            spec.u0.clear();
            for (const auto& x : u0) {
                if (!x.is_number()) {
                    fail("problem.u0", "expected numbers");
                }
                spec.u0.push_back(x.get<double>());
            }
        } else {
            fail("problem.u0", "expected a number or a nonempty array");
        }
    }
    spec.lambda = get_number(j, "lambda", "problem.lambda", spec.lambda);
    if (spec.name != "linear" && spec.u0.size() != 1) {
        fail("problem.u0", "must be a scalar for " + spec.name);
    }
    return spec;
}

void check_tol_list(const std::vector<double>& tols) {
    if (tols.empty()) {
        fail("tol_list", "must be nonempty");
    }
    for (std::size_t i = 0; i < tols.size(); ++i) {
        if (!(tols[i] > 0.0) || !std::isfinite(tols[i])) {
            fail("tol_list", "entries must be positive");
        }
        if (i > 0 && !(tols[i] < tols[i - 1])) {
            fail("tol_list", "must be strictly decreasing");
        }
    }
}

}  // namespace

RunConfig parse_config(const json& j) {
    check_keys(j, "",
               {"problem", "scheme", "mode", "r", "r_init", "r_max", "k_init", "tol", "tol_list",
                "theta_star", "k_min", "max_intervals", "delta", "picard"});
    RunConfig c;
    if (j.contains("problem")) {
        c.problem = parse_problem(j.at("problem"));
    }
    static_cast<void>(make_problem(c.problem));

    AdaptConfig& a = c.adapt;
    const std::string scheme = get_string(j, "scheme", "scheme", "cg");
    if (scheme == "cg") {
        a.scheme = Scheme::CG;
    } else if (scheme == "dg") {
        a.scheme = Scheme::DG;
    } else {
        fail("scheme", "expected \"cg\" or \"dg\"");
    }
    const std::string mode = get_string(j, "mode", "mode", "h");
    if (mode == "h") {
        a.mode = Mode::H;
    } else if (mode == "hp") {
        a.mode = Mode::HP;
    } else {
        fail("mode", "expected \"h\" or \"hp\"");
    }
    if (j.contains("r") && j.contains("r_init")) {
        fail("r", "give either r or r_init");
    }
    a.r_init = get_count(j, "r", "r", a.r_init);
    a.r_init = get_count(j, "r_init", "r_init", a.r_init);
    a.r_max = get_count(j, "r_max", "r_max", a.r_max);
    a.k_init = get_number(j, "k_init", "k_init", a.k_init);
    a.tol_star = get_number(j, "tol", "tol", a.tol_star);
    a.theta_star = get_number(j, "theta_star", "theta_star", a.theta_star);
    a.k_min = get_number(j, "k_min", "k_min", a.k_min);
    a.max_intervals = get_count(j, "max_intervals", "max_intervals", a.max_intervals);

    if (j.contains("delta")) {
        const json& d = j.at("delta");
        check_keys(d, "delta",
                   {"newton_tol", "max_newton", "fd_step", "delta_max", "scan_points", "verify_eps"});
        DeltaSolverConfig& s = a.delta;
        s.newton_tol = get_number(d, "newton_tol", "delta.newton_tol", s.newton_tol);
        s.max_newton = get_count(d, "max_newton", "delta.max_newton", s.max_newton);
        s.fd_step = get_number(d, "fd_step", "delta.fd_step", s.fd_step);
        s.delta_max = get_number(d, "delta_max", "delta.delta_max", s.delta_max);
        s.scan_points = get_count(d, "scan_points", "delta.scan_points", s.scan_points);
        s.verify_eps = get_number(d, "verify_eps", "delta.verify_eps", s.verify_eps);
    }
    if (j.contains("picard")) {
        const json& pc = j.at("picard");
        check_keys(pc, "picard", {"fp_tol", "max_iters", "divergence_cap"});
        PicardConfig& s = a.picard;
        s.fp_tol = get_number(pc, "fp_tol", "picard.fp_tol", s.fp_tol);
        s.max_iters = get_count(pc, "max_iters", "picard.max_iters", s.max_iters);
        s.divergence_cap = get_number(pc, "divergence_cap", "picard.divergence_cap",
                                      s.divergence_cap);
    }
    if (j.contains("tol_list")) {
        const json& tl = j.at("tol_list");
        if (!tl.is_array()) {
            fail("tol_list", "expected an array");
        }
        for (const auto& x : tl) {
            if (!x.is_number()) {
                fail("tol_list", "expected numbers");
            }
            c.tol_list.push_back(x.get<double>());
        }
        check_tol_list(c.tol_list);
    }
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

json config_to_json(const RunConfig& c) {
    const AdaptConfig& a = c.adapt;
    json problem{{"name", c.problem.name}};
    if (c.problem.name == "linear") {
        problem["lambda"] = c.problem.lambda;
        problem["u0"] = c.problem.u0;
    } else {
        problem["u0"] = c.problem.u0.front();
    }
    json j{
        {"problem", problem},
        {"scheme", to_string(a.scheme)},
        {"mode", to_string(a.mode)},
        {"r_init", a.r_init},
        {"r_max", a.r_max},
        {"k_init", a.k_init},
        {"tol", a.tol_star},
        {"theta_star", a.theta_star},
        {"k_min", a.k_min},
        {"max_intervals", a.max_intervals},
        {"delta",
         {{"newton_tol", a.delta.newton_tol},
          {"max_newton", a.delta.max_newton},
          {"fd_step", a.delta.fd_step},
          {"delta_max", a.delta.delta_max},
          {"scan_points", a.delta.scan_points},
          {"verify_eps", a.delta.verify_eps}}},
        {"picard",
         {{"fp_tol", a.picard.fp_tol},
          {"max_iters", a.picard.max_iters},
          {"divergence_cap", a.picard.divergence_cap}}},
    };
    if (!c.tol_list.empty()) {
        j["tol_list"] = c.tol_list;
    }
    return j;
}

Problem make_problem(const ProblemSpec& spec) {
    try {
        if (spec.name == "power2") {
            return make_power_square(spec.u0.at(0));
        }
        if (spec.name == "exp") {
            return make_exponential(spec.u0.at(0));
        }
        if (spec.name == "linear") {
            return make_linear(spec.lambda, spec.u0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }
    throw ConfigError("problem.name: unknown problem \"" + spec.name + "\"");
}

namespace {

json optional_number(const std::optional<double>& x) {
    return x && std::isfinite(*x) ? json(*x) : json(nullptr);
}

}  // namespace

json run_report(const RunConfig& c, const Problem& p, const RunResult& r) {
    json summary{
        {"termination", to_string(r.termination)},
        {"T", r.T},
        {"M", r.M},
        {"dofs", r.dofs},
        {"total_attempts", r.total_attempts},
        {"t_blowup", optional_number(p.t_blowup)},
        {"blowup_err", p.t_blowup ? json(std::abs(r.T - *p.t_blowup)) : json(nullptr)},
    };
    if (r.final_delta) {
        summary["final_phi_min"] = r.final_delta->min_phi;
        summary["final_phi_argmin"] = r.final_delta->argmin;
    }
    json intervals = json::array();
    for (std::size_t m = 0; m < r.intervals.size(); ++m) {
        const IntervalRecord& rec = r.intervals[m];
        const StepEstimate& e = rec.estimate;
        intervals.push_back({
            {"t_start", rec.iv.t_start()},
            {"t_end", rec.iv.t_end()},
            {"k", rec.iv.length()},
            {"r", rec.r},
            {"tol", r.tol_trace[m]},
            {"eta_res", e.eta_res},
            {"eta_proj", e.eta_proj},
            {"psi", e.psi},
            {"delta", optional_number(e.delta)},
            {"delta_hat", e.delta_hat},
            {"bound", e.bound},
            {"theta", optional_number(rec.theta)},
            {"recon_error", optional_number(rec.recon_error)},
            {"effectivity", optional_number(e.effectivity)},
            {"refinements", rec.refinements},
            {"attempts", rec.attempts},
            {"picard_iters", rec.step.picard_iters},
        });
    }
    return json{{"config", config_to_json(c)}, {"summary", summary}, {"intervals", intervals}};
}

SweepRow summarize(double tol_star, const Problem& p, const RunResult& r, double wall_time_s) {
    SweepRow row;
    row.tol_star = tol_star;
    row.M = r.M;
    row.dofs = r.dofs;
    row.T = r.T;
    row.blowup_err = p.t_blowup ? std::abs(r.T - *p.t_blowup) : kNaN;
    row.delta_hat = r.intervals.empty() ? 1.0 : r.intervals.back().estimate.delta_hat;
    row.best_effectivity = kNaN;
    for (const auto& rec : r.intervals) {
        if (rec.estimate.effectivity && std::isfinite(*rec.estimate.effectivity)) {
            const double eff = *rec.estimate.effectivity;
            row.best_effectivity =
                std::isnan(row.best_effectivity) ? eff : std::min(row.best_effectivity, eff);
        }
    }
    row.wall_time_s = wall_time_s;
    row.aborted = r.termination == Termination::KMinReached;
    return row;
}

SweepOutput sweep(const RunConfig& c, bool parallel) {
    check_tol_list(c.tol_list);
    const Problem p = make_problem(c.problem);

    auto one = [&](double tol) {
        AdaptConfig a = c.adapt;
        a.tol_star = tol;
        const auto start = std::chrono::steady_clock::now();
        RunResult r = adapt(p, a);
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
        SweepRow row = summarize(tol, p, r, wall.count());
        return std::make_pair(std::move(row), std::move(r));
    };

    SweepOutput out;
    std::vector<std::future<std::pair<SweepRow, RunResult>>> jobs;
    for (double tol : c.tol_list) {
        jobs.push_back(std::async(parallel ? std::launch::async : std::launch::deferred, one, tol));
    }
    for (auto& job : jobs) {
        auto [row, run] = job.get();
        out.rows.push_back(row);
        out.runs.push_back(std::move(run));
    }
    return out;
}

const char* const kCsvHeader =
    "tol_star,M,dofs,T,blowup_err,delta_hat,best_effectivity,wall_time_s,aborted";

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << kCsvHeader << '\n';
    for (const SweepRow& r : rows) {
        os << format_double(r.tol_star) << ',' << r.M << ',' << r.dofs << ','
           << format_double(r.T) << ',' << format_double(r.blowup_err) << ','
           << format_double(r.delta_hat) << ',' << format_double(r.best_effectivity) << ','
           << format_double(r.wall_time_s) << ',' << (r.aborted ? 1 : 0) << '\n';
    }
}

namespace {

double parse_field(const std::string& s, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw std::invalid_argument("csv line " + std::to_string(line) + ": bad number \"" + s +
                                    "\"");
    }
    return v;
}

}  // namespace

std::vector<SweepRow> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) {
        throw std::invalid_argument("csv: missing or unexpected header");
    }
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 9) {
            throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                        ": expected 9 fields");
        }
        SweepRow r;
        r.tol_star = parse_field(f[0], lineno);
        r.M = static_cast<std::size_t>(parse_field(f[1], lineno));
        r.dofs = static_cast<std::size_t>(parse_field(f[2], lineno));
        r.T = parse_field(f[3], lineno);
        r.blowup_err = parse_field(f[4], lineno);
        r.delta_hat = parse_field(f[5], lineno);
        r.best_effectivity = parse_field(f[6], lineno);
        r.wall_time_s = parse_field(f[7], lineno);
        r.aborted = parse_field(f[8], lineno) != 0.0;
        rows.push_back(r);
    }
    return rows;
}

FitModel parse_fit_model(const std::string& s) {
    if (s == "algebraic") {
        return FitModel::Algebraic;
    }
    if (s == "exponential") {
        return FitModel::Exponential;
    }
    throw std::invalid_argument("model: expected \"algebraic\" or \"exponential\"");
}

FitResult least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least_squares: need at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("least_squares: abscissae are all equal");
    }
    FitResult f;
    f.n = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        ssr += e * e;
    }
    f.r_squared = syy == 0.0 ? 1.0 : 1.0 - ssr / syy;
    return f;
}

FitResult fit(std::span<const SweepRow> rows, FitModel model) {
    std::vector<double> x;
    std::vector<double> y;
    for (const SweepRow& r : rows) {
        if (r.aborted || !(r.blowup_err > 0.0) || !std::isfinite(r.blowup_err) || r.dofs == 0) {
            continue;
        }
        const double dofs = static_cast<double>(r.dofs);
        x.push_back(model == FitModel::Algebraic ? std::log(dofs) : std::sqrt(dofs));
        y.push_back(std::log(r.blowup_err));
    }
    if (x.size() < 3) {
        throw std::invalid_argument("fit: need at least 3 usable rows, got " +
                                    std::to_string(x.size()));
    }
    FitResult f = least_squares(x, y);
    if (model == FitModel::Exponential) {
        f.b = f.slope < 0.0 ? f.slope * f.slope : 0.0;
    }
    return f;
}

std::vector<TracePoint> trace(const RunResult& r, const Problem& p) {
    if (!p.t_blowup) {
        throw std::invalid_argument("trace: problem " + p.name + " has no known blow-up time");
    }
    std::vector<TracePoint> pts;
    for (const auto& rec : r.intervals) {
        const double eps = std::abs(rec.iv.t_end() - *p.t_blowup);
        if (eps == 0.0) {
            continue;
        }
        pts.push_back({1.0 / eps, rec.estimate.delta_hat,
                       rec.estimate.effectivity ? *rec.estimate.effectivity : kNaN});
    }
    return pts;
}

std::vector<TracePoint> trace(const json& report) {
    if (!report.is_object() || !report.contains("config") || !report.contains("intervals")) {
        throw std::invalid_argument("trace: not a run report");
    }
    const Problem p = make_problem(parse_config(report.at("config")).problem);
    if (!p.t_blowup) {
        throw std::invalid_argument("trace: problem " + p.name + " has no known blow-up time");
    }
    std::vector<TracePoint> pts;
    for (const auto& iv : report.at("intervals")) {
        const double eps = std::abs(iv.at("t_end").get<double>() - *p.t_blowup);
        if (eps == 0.0) {
            continue;
        }
        const json& eff = iv.at("effectivity");
        pts.push_back({1.0 / eps, iv.at("delta_hat").get<double>(),
                       eff.is_number() ? eff.get<double>() : kNaN});
    }
    return pts;
}

FitResult delta_hat_growth(std::span<const TracePoint> pts, std::size_t tail) {
    const std::size_t n = std::min(tail, pts.size());
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = pts.size() - n; i < pts.size(); ++i) {
        x.push_back(std::log(pts[i].inv_eps));
        y.push_back(std::log(pts[i].delta_hat));
    }
    return least_squares(x, y);
}

}  // namespace blowup
