#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdar/forecast.hpp"
#include "bdar/inference.hpp"
#include "bdar/io.hpp"
#include "bdar/matrix.hpp"
#include "bdar/model.hpp"

namespace bdar::json {

using nlohmann::json;

inline json matrix_rows(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_rows(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) throw std::invalid_argument("expected a nested array");
    Matrix m(j.size(), j.front().size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (j[r].size() != m.cols()) throw std::invalid_argument("ragged matrix rows");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

/// NaN is written as null.
inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json to_json(const CopulaSpec& c) {
    return json{{"family", std::string(to_string(c.family()))}, {"delta", c.delta()}};
}

inline CopulaSpec copula_from_json(const json& j) {
    const auto fam = parse_copula_family(j.at("family").get<std::string>());
    return CopulaSpec::make(fam, j.value("delta", CopulaSpec::independence_delta(fam)));
}

/// {variant, phi1, phi2, copula_alpha:{family,delta}, copula_eps:{family,delta}, p1, p2}
inline json to_json(const Bdar1Params& p) {
    return json{{"variant", std::string(to_string(p.variant()))},
                {"phi1", p.phi1()},
                {"phi2", p.phi2()},
                {"copula_alpha", to_json(p.copula_alpha())},
                {"copula_eps", to_json(p.copula_eps())},
                {"p1", p.marginal1().probs()},
                {"p2", p.marginal2().probs()}};
}

inline Bdar1Params params_from_json(const json& j) {
    const Variant v = parse_variant(j.at("variant").get<std::string>());
    const double phi1 = j.at("phi1").get<double>();
    const double phi2 = j.contains("phi2") ? j.at("phi2").get<double>() : phi1;
    const CopulaSpec a = j.contains("copula_alpha") ? copula_from_json(j.at("copula_alpha")) : CopulaSpec::product();
    const CopulaSpec e = j.contains("copula_eps") ? copula_from_json(j.at("copula_eps")) : CopulaSpec::product();
    return Bdar1Params::make(v, phi1, phi2, a, e, CategoricalMarginal(j.at("p1").get<std::vector<double>>()),
                             CategoricalMarginal(j.at("p2").get<std::vector<double>>()));
}

/// {states1, states2, cells}; cells[i][j] is the probability of state pair (i+1, j+1).
inline json table_json(const Matrix& cells) {
    return json{{"states1", cells.rows()}, {"states2", cells.cols()}, {"cells", matrix_rows(cells)}};
}

inline json to_json(const FitReport& r) {
    json se = json::array();
    for (double s : r.std_errors) se.push_back(number_or_null(s));
    return json{{"variant", std::string(to_string(r.variant))},
                {"alpha_family", std::string(to_string(r.alpha_family))},
                {"eps_family", std::string(to_string(r.eps_family))},
                {"params", to_json(r.params_hat)},
                {"param_names", r.param_names},
                {"estimates", r.estimates},
                {"std_errors", se},
                {"std_errors_available", r.std_errors_available},
                {"loglik", r.loglik},
                {"n_params", r.n_params},
                {"aic", r.aic},
                {"bic", r.bic},
                {"converged", r.converged},
                {"n_iterations", r.n_iterations},
                {"max_gradient_norm", r.max_gradient_norm},
                {"n_obs", r.n_obs}};
}

inline FitReport fit_report_from_json(const json& j) {
    FitReport r;
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.alpha_family = parse_copula_family(j.at("alpha_family").get<std::string>());
    r.eps_family = parse_copula_family(j.at("eps_family").get<std::string>());
    r.params_hat = params_from_json(j.at("params"));
    r.param_names = j.at("param_names").get<std::vector<std::string>>();
    r.estimates = j.at("estimates").get<std::vector<double>>();
    for (const auto& s : j.at("std_errors")) r.std_errors.push_back(number_from(s));
    r.std_errors_available = j.at("std_errors_available").get<bool>();
    r.loglik = j.at("loglik").get<double>();
    r.n_params = j.at("n_params").get<std::size_t>();
    r.aic = j.at("aic").get<double>();
    r.bic = j.at("bic").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.n_iterations = j.at("n_iterations").get<int>();
    r.max_gradient_norm = j.at("max_gradient_norm").get<double>();
    r.n_obs = j.at("n_obs").get<std::size_t>();
    return r;
}

inline json to_json(const ForecastResult& f) {
    json steps = json::array();
    for (std::size_t h = 0; h < f.horizon; ++h) {
        std::vector<double> m1(f.marginal1.cols()), m2(f.marginal2.cols());
        for (std::size_t i = 0; i < m1.size(); ++i) m1[i] = f.marginal1(h, i);
        for (std::size_t j = 0; j < m2.size(); ++j) m2[j] = f.marginal2(h, j);
        steps.push_back(json{{"h", h + 1},
                             {"marginal1", m1},
                             {"marginal2", m2},
                             {"joint", matrix_rows(f.joint[h])},
                             {"modal1", f.modal1[h]},
                             {"modal2", f.modal2[h]},
                             {"modal_joint", {f.modal_joint[h].first, f.modal_joint[h].second}}});
    }
    return json{{"horizon", f.horizon}, {"n_sims", f.n_sims}, {"seed", f.seed}, {"steps", steps}};
}

inline json to_json(const io::DiscretizationRule& r) {
    return json{{"breakpoints", r.breakpoints}, {"right_closed", r.right_closed}, {"labels", r.labels()}};
}

/// Two-space indented text with a trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json load(const std::string& path) {
    try {
        return json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace bdar::json
