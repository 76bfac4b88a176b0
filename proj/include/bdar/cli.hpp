#pragma once

#include <exception>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdar/workflow.hpp"

namespace bdar::cli {

namespace detail {

inline void add_options(CLI::App& app, workflow::RunConfig& c) {
    app.add_option("-i,--input", c.input, "Input CSV (raw values with a rule, otherwise ordinal states)");
    app.add_option("--col1", c.col1, "Column of series 1 (default y1 with a rule, z1 without)");
    app.add_option("--col2", c.col2, "Column of series 2 (default y2 with a rule, z2 without)");
    app.add_option("--time-col", c.time_col, "Time label column");
    app.add_option("--rule", c.rule, "Breakpoints 'b0,b1,...' or 'quantiles:k' for both series");
    app.add_option("--rule1", c.rule1, "Rule for series 1 only");
    app.add_option("--rule2", c.rule2, "Rule for series 2 only");
    app.add_option("--variants", c.variants, "Variants among M1..M5")->delimiter(',')->capture_default_str();
    app.add_option("--alpha-family", c.alpha_family, "Mechanism copula: gumbel or frank")->capture_default_str();
    app.add_option("--eps-family", c.eps_family, "Innovation copula: gumbel or frank")->capture_default_str();
    app.add_option("--max-iterations", c.max_iterations)->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--gradient-tolerance", c.gradient_tolerance)->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--restarts", c.n_restarts, "Extra jittered starting points")->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--min-length", c.min_length, "Shortest series accepted for fitting")->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
    app.add_option("--n-sims", c.n_sims, "Forecast trajectories")->capture_default_str();
    app.add_option("--horizon", c.horizon, "Forecast steps")->capture_default_str();
    app.add_option("--last-state", c.last_state, "Forecast origin 'i,j' (default: last input row)");
    app.add_option("--params", c.params, "Params JSON (or a fit report JSON)");
    app.add_option("-o,--output", c.output, "Output directory")->capture_default_str();
    app.add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--length", c.length, "Simulated length")->capture_default_str();
    app.add_option("--burn-in", c.burn_in, "Steps discarded before the simulated path")->capture_default_str();
    app.add_option("--time-start", c.time_start, "Quarter label of the first simulated row, e.g. 1998Q1");
    app.add_flag("--emit-raw", c.emit_raw, "Also write raw values drawn within the rule intervals");
    app.add_option("--lengths", c.lengths, "Series lengths for the replicate study")->delimiter(',')
        ->capture_default_str();
    app.add_option("--replicates", c.replicates, "Replicates per length")->capture_default_str();
}

inline void run_ingest(const workflow::RunConfig& cfg, std::ostream& out) {
    if (cfg.input.empty()) throw std::invalid_argument("no input file given");
    const auto raw = io::ingest(cfg.input, cfg.col1.empty() ? "y1" : cfg.col1, cfg.col2.empty() ? "y2" : cfg.col2,
                                cfg.time_col);
    workflow::detail::write_output(cfg, "ingested.csv", io::raw_csv(raw));
    auto range = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return "[" + io::format_sig(*lo, 6) + ", " + io::format_sig(*hi, 6) + "]";
    };
    out << raw.length() << " rows; " << raw.name1 << " in " << range(raw.y1) << ", " << raw.name2 << " in "
        << range(raw.y2) << "\n";
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Bivariate DAR(1) models for ordinal time series"};
    app.set_config("--config", "", "key = value file; command-line options take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    workflow::RunConfig cfg;
    detail::add_options(app, cfg);

    struct Command {
        const char* name;
        const char* help;
        void (*run)(const workflow::RunConfig&, std::ostream&);
    };
    const std::vector<Command> commands{
        {"ingest", "Read and validate a raw bivariate CSV", [](const auto& c, auto& o) { detail::run_ingest(c, o); }},
        {"discretize", "Map raw values to ordinal states", [](const auto& c, auto& o) { workflow::run_discretize(c, o); }},
        {"diagnose", "Kendall tau and state frequencies", [](const auto& c, auto& o) { workflow::run_diagnostics(c, o); }},
        {"fit", "Fit one variant", [](const auto& c, auto& o) { workflow::run_fit(c, o); }},
        {"compare", "Fit several variants and select one", [](const auto& c, auto& o) { workflow::run_compare(c, o); }},
        {"simulate", "Simulate a path from a params file", [](const auto& c, auto& o) { workflow::run_simulate(c, o); }},
        {"forecast", "Monte-Carlo forecast", [](const auto& c, auto& o) { workflow::run_forecast(c, o); }},
        {"replicate-study", "Simulate-and-refit study",
         [](const auto& c, auto& o) { workflow::run_replicate_study(c, o); }},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    try {
        for (const auto& c : commands)
            if (app.got_subcommand(c.name)) c.run(cfg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace bdar::cli
