// Experiment runner: single runs, tolerance sweeps, rate fits and delta_hat traces.
//
//   blowup run   --config run.json   [--out report.json]
//   blowup sweep --config sweep.json [--out rows.csv] [--serial]
//   blowup fit   rows.csv --model algebraic|exponential [--out fit.json]
//   blowup trace report.json [--out trace.csv]
//
// Exit status: 0 success, 2 bad config or input, 3 a run stopped at k_min.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "blowup/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kAborted = 3;

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path);
    if (!os) {
        throw std::invalid_argument("out: cannot write " + out_path);
    }
    os << text;
}

int cmd_run(const std::string& config, const std::string& out) {
    const blowup::RunConfig c = blowup::load_config(config);
    const blowup::Problem p = blowup::make_problem(c.problem);
    const blowup::RunResult r = blowup::adapt(p, c.adapt);
    emit(out, blowup::run_report(c, p, r).dump(2) + "\n");
    std::fprintf(stderr, "%s: T=%.17g M=%zu dofs=%zu\n", blowup::to_string(r.termination), r.T,
                 r.M, r.dofs);
    return r.termination == blowup::Termination::KMinReached ? kAborted : kOk;
}

int cmd_sweep(const std::string& config, const std::string& out, bool serial) {
    const blowup::RunConfig c = blowup::load_config(config);
    if (c.tol_list.empty()) {
        throw blowup::ConfigError("tol_list: required for sweep");
    }
    const blowup::SweepOutput s = blowup::sweep(c, !serial);
    std::ostringstream os;
    blowup::write_csv(os, s.rows);
    emit(out, os.str());
    for (const auto& row : s.rows) {
        if (row.aborted) {
            return kAborted;
        }
    }
    return kOk;
}

int cmd_fit(const std::string& input, const std::string& model, const std::string& out) {
    const blowup::FitModel m = blowup::parse_fit_model(model);
    std::ifstream is(input);
    if (!is) {
        throw std::invalid_argument("input: cannot open " + input);
    }
    const auto rows = blowup::read_csv(is);
    const blowup::FitResult f = blowup::fit(rows, m);
    nlohmann::json j{{"model", model},
                     {"slope", f.slope},
                     {"intercept", f.intercept},
                     {"r_squared", f.r_squared},
                     {"n", f.n}};
    if (f.b) {
        j["b"] = *f.b;
    }
    emit(out, j.dump(2) + "\n");
    return kOk;
}

int cmd_trace(const std::string& input, const std::string& out) {
    std::ifstream is(input);
    if (!is) {
        throw std::invalid_argument("input: cannot open " + input);
    }
    nlohmann::json report;
    try {
        report = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("input: ") + e.what());
    }
    const auto pts = blowup::trace(report);
    std::ostringstream os;
    os << "inv_eps,delta_hat,effectivity\n";
    for (const auto& pt : pts) {
        os << blowup::format_double(pt.inv_eps) << ',' << blowup::format_double(pt.delta_hat)
           << ',' << blowup::format_double(pt.effectivity) << '\n';
    }
    emit(out, os.str());
    if (pts.size() >= 2) {
        const auto g = blowup::delta_hat_growth(pts);
        std::fprintf(stderr, "delta_hat growth over last %zu points: slope %.4f (R^2 %.4f)\n", g.n,
                     g.slope, g.r_squared);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hp Galerkin time stepping with blow-up detection"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string input;
    std::string model = "algebraic";
    bool serial = false;

    auto* run = app.add_subcommand("run", "single adaptive run, JSON report");
    run->add_option("--config", config, "JSON config")->required();
    run->add_option("--out", out, "report path (default stdout)");

    auto* sw = app.add_subcommand("sweep", "one run per tol_list entry, CSV rows");
    sw->add_option("--config", config, "JSON config with tol_list")->required();
    sw->add_option("--out", out, "CSV path (default stdout)");
    sw->add_flag("--serial", serial, "run the tolerances one after another");

    auto* ft = app.add_subcommand("fit", "least-squares rate fit of a sweep CSV");
    ft->add_option("input", input, "sweep CSV")->required();
    ft->add_option("--model", model, "algebraic or exponential")
        ->check(CLI::IsMember({"algebraic", "exponential"}));
    ft->add_option("--out", out, "JSON path (default stdout)");

    auto* tr = app.add_subcommand("trace", "delta_hat and effectivity against 1/eps");
    tr->add_option("input", input, "run report JSON")->required();
    tr->add_option("--out", out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (*run) {
            return cmd_run(config, out);
        }
        if (*sw) {
            return cmd_sweep(config, out, serial);
        }
        if (*ft) {
            return cmd_fit(input, model, out);
        }
        return cmd_trace(input, out);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
