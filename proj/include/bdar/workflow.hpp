#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bdar/forecast.hpp"
#include "bdar/inference.hpp"
#include "bdar/io.hpp"
#include "bdar/kendall.hpp"
#include "bdar/serialization.hpp"

namespace bdar::workflow {

/// Settings shared by all commands. Empty strings mean "not given".
struct RunConfig {
    std::string input;
    std::string col1;
    std::string col2;
    std::string time_col;
    /// Breakpoints "b1,...,bm" or "quantiles:k" for both series; rule1 / rule2 override per series.
    std::string rule;
    std::string rule1;
    std::string rule2;
    std::vector<std::string> variants{"M1", "M2", "M3", "M4", "M5"};
    std::string alpha_family = "frank";
    std::string eps_family = "frank";
    int max_iterations = 500;
    double gradient_tolerance = 1e-7;
    int n_restarts = 5;
    std::size_t min_length = 20;
    std::uint64_t seed = 1;
    std::size_t n_sims = 10000;
    std::size_t horizon = 12;
    /// "i,j"; defaults to the last observed pair of the input.
    std::string last_state;
    std::string params;
    std::string output = "bdar_out";
    unsigned workers = 1;
    std::size_t length = 104;
    std::size_t burn_in = 100;
    /// Quarterly label of the first simulated row, e.g. 1998Q1; integer index when empty.
    std::string time_start;
    bool emit_raw = false;
    std::vector<std::size_t> lengths{100, 1000};
    std::size_t replicates = 100;
};

/// Ordinal data plus whatever raw data and rules produced it.
struct LoadedData {
    BivariateOrdinalSeries series;
    std::vector<std::string> time;
    std::optional<io::RawSeries> raw;
    std::optional<io::DiscretizationRule> rule1;
    std::optional<io::DiscretizationRule> rule2;
};

namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output);
    return std::filesystem::path(cfg.output) / name;
}

inline void write_output(const RunConfig& cfg, const std::string& name, const std::string& text) {
    io::write_text(out_path(cfg, name).string(), text);
}

inline bool has_rule(const RunConfig& cfg) { return !cfg.rule.empty() || !cfg.rule1.empty() || !cfg.rule2.empty(); }

inline std::pair<int, int> parse_pair(const std::string& s) {
    const auto f = io::detail::split_csv_line(s);
    if (f.size() != 2) throw std::invalid_argument("expected a pair 'i,j', got '" + s + "'");
    return {io::parse_int(f[0]), io::parse_int(f[1])};
}

inline FitOptions fit_options(const RunConfig& cfg) {
    FitOptions o;
    o.max_iterations = cfg.max_iterations;
    o.gradient_tolerance = cfg.gradient_tolerance;
    o.min_length = cfg.min_length;
    o.n_restarts = cfg.n_restarts;
    o.seed = substream_seed(cfg.seed, "fit");
    return o;
}

inline std::vector<Variant> variants(const RunConfig& cfg) {
    std::vector<Variant> out;
    for (const auto& v : cfg.variants) out.push_back(parse_variant(v));
    if (out.empty()) throw std::invalid_argument("no variants requested");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/**
 * @brief Reads the configured input.
 *
 * With a discretization rule the input columns are raw values (default
 * names y1, y2); without one they already hold states 1..d (default z1, z2).
 */
inline LoadedData load_data(const RunConfig& cfg) {
    if (cfg.input.empty()) throw std::invalid_argument("no input file given");
    LoadedData d;
    if (detail::has_rule(cfg)) {
        const std::string c1 = cfg.col1.empty() ? "y1" : cfg.col1;
        const std::string c2 = cfg.col2.empty() ? "y2" : cfg.col2;
        d.raw = io::ingest(cfg.input, c1, c2, cfg.time_col);
        const std::string r1 = cfg.rule1.empty() ? cfg.rule : cfg.rule1;
        const std::string r2 = cfg.rule2.empty() ? cfg.rule : cfg.rule2;
        if (r1.empty() || r2.empty()) throw std::invalid_argument("a discretization rule is needed for both series");
        d.rule1 = io::parse_rule(r1, d.raw->y1, d.raw->y2);
        d.rule2 = io::parse_rule(r2, d.raw->y1, d.raw->y2);
        auto z1 = io::discretize(d.raw->y1, *d.rule1);
        auto z2 = io::discretize(d.raw->y2, *d.rule2);
        d.series = BivariateOrdinalSeries(std::move(z1), std::move(z2), d.rule1->n_states(), d.rule2->n_states());
        d.series.labels1 = d.rule1->labels();
        d.series.labels2 = d.rule2->labels();
        d.time = d.raw->time;
    } else {
        const std::string c1 = cfg.col1.empty() ? "z1" : cfg.col1;
        const std::string c2 = cfg.col2.empty() ? "z2" : cfg.col2;
        d.series = io::read_ordinal_csv(cfg.input, c1, c2);
        const io::CsvTable t = io::read_csv(cfg.input);
        const std::size_t ct = cfg.time_col.empty() ? 0 : t.column(cfg.time_col);
        for (const auto& row : t.rows) d.time.push_back(row[ct]);
    }
    return d;
}

/// Loads a params JSON, or the "params" member of a fit report JSON.
inline Bdar1Params load_params(const std::string& path) {
    if (path.empty()) throw std::invalid_argument("no params file given");
    const auto j = json::load(path);
    return json::params_from_json(j.contains("params") ? j.at("params") : j);
}

inline BivariateOrdinalSeries run_discretize(const RunConfig& cfg, std::ostream& log) {
    const LoadedData d = load_data(cfg);
    if (!d.rule1) throw std::invalid_argument("discretize needs a rule");
    detail::write_output(cfg, "ordinal.csv", io::ordinal_csv(d.series, d.time));
    detail::write_output(cfg, "rule.json",
                         json::dump({{"series1", json::to_json(*d.rule1)}, {"series2", json::to_json(*d.rule2)}}));
    log << "discretized " << d.series.length() << " rows into " << d.series.d1 << " x " << d.series.d2
        << " states; wrote " << detail::out_path(cfg, "ordinal.csv").string() << "\n";
    return d.series;
}

struct Diagnostics {
    double tau_cross = 0.0;
    double tau_lag1 = 0.0;
    double tau_lag2 = 0.0;
    std::vector<std::size_t> freq1;
    std::vector<std::size_t> freq2;
    Matrix joint_freq;
};

/// Kendall tau-b between the series and at lag 1 within each, plus state frequencies.
inline Diagnostics diagnose(const BivariateOrdinalSeries& s) {
    s.validate();
    Diagnostics d;
    d.tau_cross = kendall_tau(std::span<const int>(s.z1), std::span<const int>(s.z2));
    d.tau_lag1 = kendall_tau_lagged(std::span<const int>(s.z1));
    d.tau_lag2 = kendall_tau_lagged(std::span<const int>(s.z2));
    d.freq1.assign(s.d1, 0);
    d.freq2.assign(s.d2, 0);
    d.joint_freq = Matrix(s.d1, s.d2);
    for (std::size_t t = 0; t < s.length(); ++t) {
        const auto a = static_cast<std::size_t>(s.z1[t] - 1);
        const auto b = static_cast<std::size_t>(s.z2[t] - 1);
        ++d.freq1[a];
        ++d.freq2[b];
        d.joint_freq(a, b) += 1.0;
    }
    return d;
}

inline Diagnostics run_diagnostics(const RunConfig& cfg, std::ostream& log) {
    const LoadedData data = load_data(cfg);
    const Diagnostics d = diagnose(data.series);
    nlohmann::json j{{"n", data.series.length()},
                     {"tau_cross", d.tau_cross},
                     {"tau_lag1_series1", d.tau_lag1},
                     {"tau_lag1_series2", d.tau_lag2},
                     {"freq1", d.freq1},
                     {"freq2", d.freq2},
                     {"joint_freq", json::matrix_rows(d.joint_freq)}};
    detail::write_output(cfg, "diagnostics.json", json::dump(j));
    log << "n = " << data.series.length() << "\n"
        << "tau(z1, z2)          = " << io::format_sig(d.tau_cross, 4) << "\n"
        << "tau(z1_t, z1_{t-1})  = " << io::format_sig(d.tau_lag1, 4) << "\n"
        << "tau(z2_t, z2_{t-1})  = " << io::format_sig(d.tau_lag2, 4) << "\n";
    log << "state frequencies series 1:";
    for (auto f : d.freq1) log << ' ' << f;
    log << "\nstate frequencies series 2:";
    for (auto f : d.freq2) log << ' ' << f;
    log << "\n";
    return d;
}

/// Rows (model, param, estimate, std_error) for the given reports.
inline std::string estimates_csv(const std::vector<FitReport>& reps) {
    std::ostringstream out;
    out << "model,param,estimate,std_error\n";
    for (const auto& r : reps)
        for (std::size_t k = 0; k < r.estimates.size(); ++k)
            out << to_string(r.variant) << ',' << r.param_names[k] << ',' << io::format_double(r.estimates[k]) << ','
                << (std::isfinite(r.std_errors[k]) ? io::format_double(r.std_errors[k]) : std::string("NA")) << '\n';
    return out.str();
}

/// Rows (model, loglik, n_params, aic, bic).
inline std::string criteria_csv(const std::vector<FitReport>& reps) {
    std::ostringstream out;
    out << "model,loglik,n_params,aic,bic\n";
    for (const auto& r : reps)
        out << to_string(r.variant) << ',' << io::format_double(r.loglik) << ',' << r.n_params << ','
            << io::format_double(r.aic) << ',' << io::format_double(r.bic) << '\n';
    return out.str();
}

inline FitReport run_fit(const RunConfig& cfg, std::ostream& log) {
    const LoadedData data = load_data(cfg);
    const auto vs = detail::variants(cfg);
    if (vs.size() != 1) throw std::invalid_argument("fit takes exactly one variant; use compare for several");
    const auto rep = fit(data.series, vs.front(), parse_copula_family(cfg.alpha_family),
                         parse_copula_family(cfg.eps_family), detail::fit_options(cfg));
    const std::string v(to_string(rep.variant));
    detail::write_output(cfg, "fit_" + v + ".json", json::dump(json::to_json(rep)));
    detail::write_output(cfg, "params_" + v + ".json", json::dump(json::to_json(rep.params_hat)));
    detail::write_output(cfg, "estimates.csv", estimates_csv({rep}));
    log << v << ": loglik " << io::format_sig(rep.loglik, 8) << ", AIC " << io::format_sig(rep.aic, 8) << ", BIC "
        << io::format_sig(rep.bic, 8) << (rep.converged ? "" : " (not converged)") << "\n";
    return rep;
}

struct CompareResult {
    std::vector<FitReport> reports;
    std::vector<std::pair<Variant, std::string>> failures;
    std::optional<Variant> best_bic;
    std::optional<Variant> best_aic;
    std::optional<LrtResult> lrt;
    std::optional<Variant> chosen;
    std::vector<std::string> trail;

    [[nodiscard]] const FitReport* find(Variant v) const {
        for (const auto& r : reports)
            if (r.variant == v) return &r;
        return nullptr;
    }
};

/**
 * @brief Fits the requested variants and selects one.
 *
 * Variants are fitted in order M1..M5. M3 and M4 are warm-started from the
 * M1 fit and M5 from every earlier fit, so each larger model starts at
 * least as high as the models it nests. A failing variant is recorded and
 * the rest continue. Selection: best BIC and best AIC; when they differ and
 * are nested, a likelihood-ratio test at 5% picks between them.
 */
inline CompareResult compare_models(const BivariateOrdinalSeries& data, const std::vector<Variant>& variants,
                                    CopulaFamily alpha_family, CopulaFamily eps_family, const FitOptions& base) {
    CompareResult res;
    for (Variant v : variants) {
        FitOptions o = base;
        for (const auto& r : res.reports)
            if (is_nested(r.variant, v)) o.warm_starts.push_back(r.params_hat);
        try {
            res.reports.push_back(fit(data, v, alpha_family, eps_family, o));
        } catch (const std::exception& e) {
            res.failures.emplace_back(v, e.what());
            res.trail.push_back(std::string(to_string(v)) + " failed: " + e.what());
        }
    }
    if (res.reports.empty()) {
        res.trail.emplace_back("no model could be fitted");
        return res;
    }
    const auto by_bic = std::min_element(res.reports.begin(), res.reports.end(),
                                         [](const FitReport& a, const FitReport& b) { return a.bic < b.bic; });
    const auto by_aic = std::min_element(res.reports.begin(), res.reports.end(),
                                         [](const FitReport& a, const FitReport& b) { return a.aic < b.aic; });
    res.best_bic = by_bic->variant;
    res.best_aic = by_aic->variant;
    res.trail.push_back("lowest BIC: " + std::string(to_string(*res.best_bic)) + " (" + io::format_sig(by_bic->bic, 6) + ")");
    res.trail.push_back("lowest AIC: " + std::string(to_string(*res.best_aic)) + " (" + io::format_sig(by_aic->aic, 6) + ")");
    if (res.best_bic == res.best_aic) {
        res.chosen = res.best_bic;
        res.trail.push_back("both criteria agree; choosing " + std::string(to_string(*res.chosen)));
        return res;
    }
    const FitReport* a = &*by_bic;
    const FitReport* b = &*by_aic;
    const FitReport* nested = nullptr;
    const FitReport* full = nullptr;
    if (is_nested(a->variant, b->variant)) {
        nested = a;
        full = b;
    } else if (is_nested(b->variant, a->variant)) {
        nested = b;
        full = a;
    }
    if (!nested) {
        res.chosen = res.best_bic;
        res.trail.push_back("criteria disagree and the two models are not nested; keeping the BIC choice " +
                            std::string(to_string(*res.chosen)));
        return res;
    }
    res.lrt = likelihood_ratio_test(*full, *nested);
    std::string line = "LRT " + std::string(to_string(full->variant)) + " vs " + std::string(to_string(nested->variant)) +
                       ": statistic " + io::format_sig(res.lrt->statistic, 6) + ", df " + std::to_string(res.lrt->df) +
                       ", p-value " + io::format_sig(res.lrt->p_value, 4);
    if (!res.lrt->warning.empty()) line += " (" + res.lrt->warning + ")";
    res.trail.push_back(line);
    res.chosen = res.lrt->p_value < 0.05 ? full->variant : nested->variant;
    res.trail.push_back(std::string(res.lrt->p_value < 0.05 ? "significant at 5%" : "not significant at 5%") +
                        "; choosing " + std::string(to_string(*res.chosen)));
    return res;
}

/// Table with one column per model: estimates (std errors), loglik, #parameters, BIC, AIC.
inline std::string comparison_table(const CompareResult& res) {
    std::vector<std::string> names;
    for (const auto& r : res.reports)
        for (const auto& n : r.param_names)
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    std::ostringstream out;
    auto cell = [&](const std::string& s) {
        out << ' ';
        out.width(20);
        out << s;
    };
    out.width(14);
    out << std::left << "" << std::right;
    for (const auto& r : res.reports) cell(std::string(to_string(r.variant)));
    out << '\n';
    for (const auto& n : names) {
        out.width(14);
        out << std::left << n << std::right;
        for (const auto& r : res.reports) {
            const auto it = std::find(r.param_names.begin(), r.param_names.end(), n);
            if (it == r.param_names.end()) {
                cell("-");
                continue;
            }
            const auto k = static_cast<std::size_t>(it - r.param_names.begin());
            cell(io::format_sig(r.estimates[k], 4) + " (" + io::format_sig(r.std_errors[k], 3) + ")");
        }
        out << '\n';
    }
    auto row = [&](const char* label, auto get) {
        out.width(14);
        out << std::left << label << std::right;
        for (const auto& r : res.reports) cell(get(r));
        out << '\n';
    };
    row("loglik", [](const FitReport& r) { return io::format_sig(r.loglik, 6); });
    row("#parameters", [](const FitReport& r) { return std::to_string(r.n_params); });
    row("BIC", [](const FitReport& r) { return io::format_sig(r.bic, 6); });
    row("AIC", [](const FitReport& r) { return io::format_sig(r.aic, 6); });
    return out.str();
}

inline CompareResult run_compare(const RunConfig& cfg, std::ostream& log) {
    const LoadedData data = load_data(cfg);
    CompareResult res = compare_models(data.series, detail::variants(cfg), parse_copula_family(cfg.alpha_family),
                                       parse_copula_family(cfg.eps_family), detail::fit_options(cfg));
    detail::write_output(cfg, "estimates.csv", estimates_csv(res.reports));
    detail::write_output(cfg, "criteria.csv", criteria_csv(res.reports));
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& r : res.reports) {
        fits.push_back(json::to_json(r));
        detail::write_output(cfg, "params_" + std::string(to_string(r.variant)) + ".json",
                             json::dump(json::to_json(r.params_hat)));
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& [v, msg] : res.failures) failures.push_back({{"variant", std::string(to_string(v))}, {"error", msg}});
    nlohmann::json summary{{"fits", fits}, {"failures", failures}, {"decision_trail", res.trail}};
    if (res.chosen) summary["chosen"] = std::string(to_string(*res.chosen));
    if (res.lrt)
        summary["lrt"] = {{"statistic", res.lrt->statistic}, {"df", res.lrt->df}, {"p_value", res.lrt->p_value}};
    detail::write_output(cfg, "fits.json", json::dump(summary));
    std::ostringstream trail;
    for (const auto& line : res.trail) trail << line << '\n';
    detail::write_output(cfg, "decision.txt", trail.str());
    log << comparison_table(res) << '\n' << trail.str();
    if (res.reports.empty()) throw std::runtime_error("no model could be fitted; first failure: " + res.failures.front().second);
    return res;
}

/// Per-step marginal frequencies: h, z1_1..z1_d1, z2_1..z2_d2.
inline std::string forecast_marginals_csv(const ForecastResult& f) {
    std::ostringstream out;
    out << 'h';
    for (std::size_t i = 1; i <= f.marginal1.cols(); ++i) out << ",z1_" << i;
    for (std::size_t j = 1; j <= f.marginal2.cols(); ++j) out << ",z2_" << j;
    out << '\n';
    for (std::size_t h = 0; h < f.horizon; ++h) {
        out << h + 1;
        for (std::size_t i = 0; i < f.marginal1.cols(); ++i) out << ',' << io::format_double(f.marginal1(h, i));
        for (std::size_t j = 0; j < f.marginal2.cols(); ++j) out << ',' << io::format_double(f.marginal2(h, j));
        out << '\n';
    }
    return out.str();
}

/// Per-step modes: h, modal1, modal2, modal_joint1, modal_joint2.
inline std::string forecast_modes_csv(const ForecastResult& f) {
    std::ostringstream out;
    out << "h,modal1,modal2,modal_joint1,modal_joint2\n";
    for (std::size_t h = 0; h < f.horizon; ++h)
        out << h + 1 << ',' << f.modal1[h] << ',' << f.modal2[h] << ',' << f.modal_joint[h].first << ','
            << f.modal_joint[h].second << '\n';
    return out.str();
}

inline ForecastResult run_forecast(const RunConfig& cfg, std::ostream& log) {
    if (cfg.n_sims < 1) throw std::invalid_argument("n_sims must be at least 1");
    if (cfg.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    const Bdar1Params params = load_params(cfg.params);
    std::pair<int, int> last;
    if (!cfg.last_state.empty()) {
        last = detail::parse_pair(cfg.last_state);
    } else if (!cfg.input.empty()) {
        const LoadedData data = load_data(cfg);
        last = {data.series.z1.back(), data.series.z2.back()};
    } else {
        throw std::invalid_argument("forecast needs last_state or an input series");
    }
    const ForecastResult f =
        forecast(params, last, cfg.horizon, cfg.n_sims, substream_seed(cfg.seed, "forecast"), cfg.workers);
    detail::write_output(cfg, "forecast_marginals.csv", forecast_marginals_csv(f));
    detail::write_output(cfg, "forecast_modes.csv", forecast_modes_csv(f));
    auto j = json::to_json(f);
    j["last_state"] = {last.first, last.second};
    detail::write_output(cfg, "forecast_joint.json", json::dump(j));
    log << "forecast from (" << last.first << "," << last.second << "), " << f.n_sims << " simulations\n"
        << forecast_modes_csv(f);
    return f;
}

/// Simulated path; with emit_raw and rules, also raw values drawn inside each state's interval.
inline BivariateOrdinalSeries run_simulate(const RunConfig& cfg, std::ostream& log) {
    const Bdar1Params params = load_params(cfg.params);
    Rng rng = substream(cfg.seed, "simulate");
    const auto s = simulate(params, cfg.length, rng, cfg.burn_in);
    const auto time = cfg.time_start.empty() ? io::index_labels(s.length()) : io::quarter_labels(cfg.time_start, s.length());
    detail::write_output(cfg, "simulated.csv", io::ordinal_csv(s, time));
    if (cfg.emit_raw) {
        const std::string r1 = cfg.rule1.empty() ? cfg.rule : cfg.rule1;
        const std::string r2 = cfg.rule2.empty() ? cfg.rule : cfg.rule2;
        if (r1.empty() || r2.empty()) throw std::invalid_argument("emit_raw needs explicit breakpoints for both series");
        const auto rule1 = io::parse_rule(r1);
        const auto rule2 = io::parse_rule(r2);
        if (rule1.n_states() != params.d1() || rule2.n_states() != params.d2())
            throw std::invalid_argument("rule state counts do not match the parameters");
        Rng raw_rng = substream(cfg.seed, "simulate-raw");
        io::RawSeries raw;
        raw.time = time;
        raw.time_name = cfg.time_start.empty() ? "t" : "quarter";
        raw.name1 = cfg.col1.empty() ? "y1" : cfg.col1;
        raw.name2 = cfg.col2.empty() ? "y2" : cfg.col2;
        for (std::size_t t = 0; t < s.length(); ++t) {
            // Rounded to 2 decimals like published rates; rounding must not cross a breakpoint.
            auto draw = [&](const io::DiscretizationRule& rule, int state) {
                for (;;) {
                    const double y = std::round(io::sample_within(rule, state, raw_rng) * 100.0) / 100.0;
                    if (rule.state(y) == state) return y;
                }
            };
            raw.y1.push_back(draw(rule1, s.z1[t]));
            raw.y2.push_back(draw(rule2, s.z2[t]));
        }
        detail::write_output(cfg, "simulated_raw.csv", io::raw_csv(raw));
    }
    log << "simulated " << s.length() << " steps from " << to_string(params.variant()) << "\n";
    return s;
}

struct ReplicateRow {
    std::size_t length = 0;
    std::size_t replicate = 0;
    std::string parameter;
    double estimate = 0.0;
    double truth = 0.0;
};

struct ReplicateSummary {
    std::size_t length = 0;
    std::string parameter;
    double truth = 0.0;
    double median = 0.0;
    double mae = 0.0;
    double median_abs_error = 0.0;
    double iqr = 0.0;
    std::size_t n = 0;
};

struct ReplicateStudy {
    std::vector<ReplicateRow> rows;
    std::vector<ReplicateSummary> summary;
    std::size_t failures = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    return io::quantile_sorted(v, 0.5);
}

}  // namespace detail

/**
 * @brief Simulate-and-refit study.
 *
 * For each length T and replicate r, a path is simulated from `truth` with
 * substream (seed, "replicate-T", r) and the truth's variant is refitted
 * with the truth's copula families. Results do not depend on `workers`.
 */
inline ReplicateStudy replicate_study(const Bdar1Params& truth, const std::vector<std::size_t>& lengths,
                                      std::size_t replicates, std::uint64_t seed, FitOptions options,
                                      unsigned workers = 1) {
    const Variant v = truth.variant();
    const CopulaFamily fa = has_alpha_copula(v) ? truth.copula_alpha().family() : CopulaFamily::Product;
    const CopulaFamily fe = has_eps_copula(v) ? truth.copula_eps().family() : CopulaFamily::Product;
    const Parameterization param(v, fa, fe, truth.d1(), truth.d2());
    const auto names = param.names();
    const auto true_values = param.reported(truth);
    options.compute_std_errors = false;

    ReplicateStudy study;
    for (std::size_t T : lengths) {
        const std::string stream = "replicate-" + std::to_string(T);
        const auto fits = parallel_map<std::optional<std::vector<double>>>(replicates, workers, [&](std::size_t r) {
            Rng rng = substream(seed, stream, r);
            const auto data = simulate(truth, T, rng);
            FitOptions o = options;
            o.seed = substream_seed(seed, stream + "-fit", r);
            try {
                return std::optional<std::vector<double>>(fit(data, v, fa, fe, o).estimates);
            } catch (const std::exception&) {
                return std::optional<std::vector<double>>();
            }
        });
        std::vector<std::vector<double>> est(names.size());
        for (std::size_t r = 0; r < fits.size(); ++r) {
            if (!fits[r]) {
                ++study.failures;
                continue;
            }
            for (std::size_t k = 0; k < names.size(); ++k) {
                study.rows.push_back({T, r + 1, names[k], (*fits[r])[k], true_values[k]});
                est[k].push_back((*fits[r])[k]);
            }
        }
        for (std::size_t k = 0; k < names.size(); ++k) {
            ReplicateSummary s;
            s.length = T;
            s.parameter = names[k];
            s.truth = true_values[k];
            s.n = est[k].size();
            std::vector<double> abs_err;
            for (double e : est[k]) abs_err.push_back(std::abs(e - s.truth));
            s.median = detail::median_of(est[k]);
            s.median_abs_error = detail::median_of(abs_err);
            double mae = 0.0;
            for (double a : abs_err) mae += a;
            s.mae = abs_err.empty() ? std::numeric_limits<double>::quiet_NaN() : mae / static_cast<double>(abs_err.size());
            auto sorted = est[k];
            std::sort(sorted.begin(), sorted.end());
            s.iqr = sorted.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : io::quantile_sorted(sorted, 0.75) - io::quantile_sorted(sorted, 0.25);
            study.summary.push_back(s);
        }
    }
    return study;
}

/// Design of the simulation study: phi = (0.4, 0.25), Gumbel(2) for both roles.
inline Bdar1Params default_study_params() {
    return Bdar1Params::full(0.4, 0.25, CopulaSpec::gumbel(2.0), CopulaSpec::gumbel(2.0),
                             CategoricalMarginal({0.15, 0.6, 0.25}), CategoricalMarginal({0.2, 0.3, 0.5}));
}

inline ReplicateStudy run_replicate_study(const RunConfig& cfg, std::ostream& log) {
    const Bdar1Params truth = cfg.params.empty() ? default_study_params() : load_params(cfg.params);
    const auto study = replicate_study(truth, cfg.lengths, cfg.replicates, cfg.seed, detail::fit_options(cfg), cfg.workers);
    std::ostringstream rows;
    rows << "T,replicate,parameter,estimate,truth\n";
    for (const auto& r : study.rows)
        rows << r.length << ',' << r.replicate << ',' << r.parameter << ',' << io::format_double(r.estimate) << ','
             << io::format_double(r.truth) << '\n';
    detail::write_output(cfg, "replicate_estimates.csv", rows.str());
    std::ostringstream sum;
    sum << "T,parameter,truth,n,median,mae,median_abs_error,iqr\n";
    for (const auto& s : study.summary)
        sum << s.length << ',' << s.parameter << ',' << io::format_double(s.truth) << ',' << s.n << ','
            << io::format_double(s.median) << ',' << io::format_double(s.mae) << ','
            << io::format_double(s.median_abs_error) << ',' << io::format_double(s.iqr) << '\n';
    detail::write_output(cfg, "replicate_summary.csv", sum.str());
    log << sum.str();
    if (study.failures > 0) log << study.failures << " replicate fits failed\n";
    return study;
}

}  // namespace bdar::workflow
