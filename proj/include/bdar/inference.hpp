#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bdar/copula.hpp"
#include "bdar/joint_discrete.hpp"
#include "bdar/matrix.hpp"
#include "bdar/model.hpp"
#include "bdar/optimizer.hpp"
#include "bdar/random.hpp"

namespace bdar {

/// Probabilities below this make conditional_loglik fail instead of returning -inf.
inline constexpr double kMinTransitionProbability = 1e-300;

/// Floor applied to unconstrained values that would otherwise be -infinity.
inline constexpr double kUnconstrainedFloor = -40.0;

/// Number of free parameters: (d1-1) + (d2-1) + phi terms + copula parameters.
inline std::size_t count_params(Variant v, std::size_t d1, std::size_t d2) {
    std::size_t k = (d1 - 1) + (d2 - 1);
    k += shares_phi(v) ? 1 : 2;
    if (has_eps_copula(v)) ++k;
    if (has_alpha_copula(v)) ++k;
    return k;
}

/**
 * @brief Map between the unconstrained optimization vector and Bdar1Params.
 *
 * Layout: additive-log-ratio coordinates of p1 (d1-1 values, last state as
 * reference), the same for p2, phi1 (and phi2 unless the mechanism is
 * shared), delta_eps, delta_alpha. phi uses a logistic map onto
 * [0, 1 - 1e-6]; Gumbel delta = 1 + exp(eta); Frank delta = eta.
 *
 * The reported scale lists p1_1..p1_{d1-1}, p2_1..p2_{d2-1}, phi1, phi2,
 * delta_eps, delta_alpha; it has the same length as the unconstrained vector.
 */
class Parameterization {
public:
    Parameterization(Variant variant, CopulaFamily alpha_family, CopulaFamily eps_family, std::size_t d1,
                     std::size_t d2)
        : variant_(variant),
          alpha_family_(has_alpha_copula(variant) ? alpha_family : CopulaFamily::Product),
          eps_family_(has_eps_copula(variant) ? eps_family : CopulaFamily::Product),
          d1_(d1),
          d2_(d2) {
        if (d1 < 2 || d2 < 2) throw std::invalid_argument("Parameterization: need at least 2 states per series");
        if (has_alpha_copula(variant) && alpha_family_ == CopulaFamily::Product)
            throw std::invalid_argument("variant " + std::string(to_string(variant)) +
                                        " needs a gumbel or frank mechanism copula");
        if (has_eps_copula(variant) && eps_family_ == CopulaFamily::Product)
            throw std::invalid_argument("variant " + std::string(to_string(variant)) +
                                        " needs a gumbel or frank innovation copula");
    }

    [[nodiscard]] Variant variant() const noexcept { return variant_; }
    [[nodiscard]] CopulaFamily alpha_family() const noexcept { return alpha_family_; }
    [[nodiscard]] CopulaFamily eps_family() const noexcept { return eps_family_; }
    [[nodiscard]] std::size_t size() const noexcept { return count_params(variant_, d1_, d2_); }

    [[nodiscard]] std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (std::size_t i = 1; i < d1_; ++i) out.push_back("p1_" + std::to_string(i));
        for (std::size_t j = 1; j < d2_; ++j) out.push_back("p2_" + std::to_string(j));
        if (shares_phi(variant_)) {
            out.emplace_back("phi");
        } else {
            out.emplace_back("phi1");
            out.emplace_back("phi2");
        }
        if (has_eps_copula(variant_)) out.emplace_back("delta_eps");
        if (has_alpha_copula(variant_)) out.emplace_back("delta_alpha");
        return out;
    }

    [[nodiscard]] Bdar1Params to_params(std::span<const double> eta) const {
        if (eta.size() != size()) throw std::invalid_argument("Parameterization: wrong vector length");
        std::size_t k = 0;
        CategoricalMarginal m1(alr_inverse(eta.subspan(k, d1_ - 1)));
        k += d1_ - 1;
        CategoricalMarginal m2(alr_inverse(eta.subspan(k, d2_ - 1)));
        k += d2_ - 1;
        const double phi1 = phi_from(eta[k++]);
        const double phi2 = shares_phi(variant_) ? phi1 : phi_from(eta[k++]);
        CopulaSpec eps = CopulaSpec::product();
        CopulaSpec alpha = CopulaSpec::product();
        if (has_eps_copula(variant_)) eps = copula_from(eps_family_, eta[k++]);
        if (has_alpha_copula(variant_)) alpha = copula_from(alpha_family_, eta[k++]);
        return Bdar1Params::make(variant_, phi1, phi2, alpha, eps, std::move(m1), std::move(m2));
    }

    [[nodiscard]] std::vector<double> to_unconstrained(const Bdar1Params& p) const {
        if (p.variant() != variant_ || p.d1() != d1_ || p.d2() != d2_)
            throw std::invalid_argument("Parameterization: params do not match variant or state counts");
        std::vector<double> eta;
        alr_forward(p.marginal1(), eta);
        alr_forward(p.marginal2(), eta);
        eta.push_back(phi_to(p.phi1()));
        if (!shares_phi(variant_)) eta.push_back(phi_to(p.phi2()));
        if (has_eps_copula(variant_)) eta.push_back(copula_to(eps_family_, p.copula_eps()));
        if (has_alpha_copula(variant_)) eta.push_back(copula_to(alpha_family_, p.copula_alpha()));
        return eta;
    }

    /// Values on the reported scale, in names() order.
    [[nodiscard]] std::vector<double> reported(const Bdar1Params& p) const {
        std::vector<double> out;
        for (std::size_t i = 0; i + 1 < d1_; ++i) out.push_back(p.marginal1()[i]);
        for (std::size_t j = 0; j + 1 < d2_; ++j) out.push_back(p.marginal2()[j]);
        out.push_back(p.phi1());
        if (!shares_phi(variant_)) out.push_back(p.phi2());
        if (has_eps_copula(variant_)) out.push_back(p.copula_eps().delta());
        if (has_alpha_copula(variant_)) out.push_back(p.copula_alpha().delta());
        return out;
    }

    /// d(reported) / d(eta), square of size size().
    [[nodiscard]] Matrix reported_jacobian(std::span<const double> eta) const {
        const std::size_t n = size();
        Matrix jac(n, n);
        std::size_t k = 0;
        for (std::size_t block : {d1_ - 1, d2_ - 1}) {
            const auto p = alr_inverse(eta.subspan(k, block));
            for (std::size_t a = 0; a < block; ++a)
                for (std::size_t b = 0; b < block; ++b) jac(k + a, k + b) = p[a] * ((a == b ? 1.0 : 0.0) - p[b]);
            k += block;
        }
        const std::size_t n_phi = shares_phi(variant_) ? 1 : 2;
        for (std::size_t i = 0; i < n_phi; ++i, ++k) {
            const double s = logistic(eta[k]);
            jac(k, k) = kPhiUpperBound * s * (1.0 - s);
        }
        auto delta_derivative = [](CopulaFamily f, double e) { return f == CopulaFamily::Gumbel ? std::exp(e) : 1.0; };
        if (has_eps_copula(variant_)) {
            jac(k, k) = delta_derivative(eps_family_, eta[k]);
            ++k;
        }
        if (has_alpha_copula(variant_)) {
            jac(k, k) = delta_derivative(alpha_family_, eta[k]);
            ++k;
        }
        return jac;
    }

    static double logistic(double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }

    static double phi_from(double eta) { return kPhiUpperBound * logistic(eta); }

    static double phi_to(double phi) {
        const double q = phi / kPhiUpperBound;
        if (q <= 0.0) return kUnconstrainedFloor;
        if (q >= 1.0) return -kUnconstrainedFloor;
        return std::max(kUnconstrainedFloor, std::log(q) - std::log1p(-q));
    }

    static CopulaSpec copula_from(CopulaFamily f, double eta) {
        if (f == CopulaFamily::Gumbel) return CopulaSpec::gumbel(1.0 + std::exp(std::min(eta, 700.0)));
        if (f == CopulaFamily::Frank) return CopulaSpec::frank(eta);
        return CopulaSpec::product();
    }

    static double copula_to(CopulaFamily f, const CopulaSpec& c) {
        if (c.family() != f) throw std::invalid_argument("Parameterization: copula family mismatch");
        if (f == CopulaFamily::Gumbel) {
            const double excess = c.delta() - 1.0;
            return excess > 0.0 ? std::max(kUnconstrainedFloor, std::log(excess)) : kUnconstrainedFloor;
        }
        return c.delta();
    }

    static std::vector<double> alr_inverse(std::span<const double> eta) {
        double top = 0.0;
        for (double e : eta) top = std::max(top, e);
        std::vector<double> p(eta.size() + 1);
        double denom = std::exp(-top);
        for (std::size_t i = 0; i < eta.size(); ++i) {
            p[i] = std::exp(eta[i] - top);
            denom += p[i];
        }
        for (std::size_t i = 0; i < eta.size(); ++i) p[i] /= denom;
        p.back() = std::exp(-top) / denom;
        return p;
    }

private:
    static void alr_forward(const CategoricalMarginal& m, std::vector<double>& out) {
        const double ref = std::log(m.probs().back());
        for (std::size_t i = 0; i + 1 < m.size(); ++i) out.push_back(std::log(m[i]) - ref);
    }

    Variant variant_;
    CopulaFamily alpha_family_;
    CopulaFamily eps_family_;
    std::size_t d1_;
    std::size_t d2_;
};

/**
 * @brief Conditional log-likelihood sum_{t>=2} log P(Z_t | Z_{t-1}).
 *
 * Throws if the data leave the parameters' state space or an observed
 * transition has probability below 1e-300.
 */
inline double conditional_loglik(const Bdar1Params& params, const BivariateOrdinalSeries& data) {
    data.validate();
    if (data.d1 > params.d1() || data.d2 > params.d2())
        throw std::out_of_range("conditional_loglik: data state space exceeds the parameters'");
    double ll = 0.0;
    for (std::size_t t = 1; t < data.length(); ++t) {
        const double p = joint_conditional_prob(params, data.z1[t - 1], data.z2[t - 1], data.z1[t], data.z2[t]);
        if (!(p >= kMinTransitionProbability))
            throw std::domain_error("conditional_loglik: observed transition at t=" + std::to_string(t + 1) +
                                    " has zero probability under the parameters");
        ll += std::log(p);
    }
    return ll;
}

/// Aggregated transition counts; the likelihood depends on the data only through these.
class TransitionCounts {
public:
    struct Entry {
        int prev1, prev2, cur1, cur2;
        double count;
    };

    explicit TransitionCounts(const BivariateOrdinalSeries& data) {
        data.validate();
        std::map<std::array<int, 4>, double> tally;
        for (std::size_t t = 1; t < data.length(); ++t)
            tally[{data.z1[t - 1], data.z2[t - 1], data.z1[t], data.z2[t]}] += 1.0;
        for (const auto& [key, n] : tally) entries_.push_back({key[0], key[1], key[2], key[3], n});
        n_terms_ = data.length() - 1;
    }

    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t n_terms() const noexcept { return n_terms_; }

    /// Log-likelihood, or -infinity if any observed transition is impossible.
    [[nodiscard]] double loglik(const Bdar1Params& params) const {
        double ll = 0.0;
        for (const auto& e : entries_) {
            const double p = joint_conditional_prob(params, e.prev1, e.prev2, e.cur1, e.cur2);
            if (!(p >= kMinTransitionProbability)) return -std::numeric_limits<double>::infinity();
            ll += e.count * std::log(p);
        }
        return ll;
    }

private:
    std::vector<Entry> entries_;
    std::size_t n_terms_ = 0;
};

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

/// AIC = -2l + 2k; BIC = -2l + k ln(T - 1), T - 1 being the number of conditional terms.
inline InformationCriteria information_criteria(double loglik, std::size_t n_params, std::size_t T) {
    if (T < 2) throw std::invalid_argument("information_criteria: need T >= 2");
    const double k = static_cast<double>(n_params);
    return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(static_cast<double>(T - 1))};
}

struct FitOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-7;
    std::size_t min_length = 20;
    std::uint64_t seed = 0;
    /// Number of built-in starting points used (1..5).
    int n_restarts = 5;
    /// Extra starting points, e.g. fits of nested variants; embedded into the target variant.
    std::vector<Bdar1Params> warm_starts;
    bool compute_std_errors = true;
};

struct FitReport {
    Variant variant = Variant::M1_Independent;
    CopulaFamily alpha_family = CopulaFamily::Product;
    CopulaFamily eps_family = CopulaFamily::Product;
    Bdar1Params params_hat;
    std::vector<std::string> param_names;
    std::vector<double> estimates;
    /// NaN when unavailable (Hessian not positive definite).
    std::vector<double> std_errors;
    bool std_errors_available = false;
    double loglik = 0.0;
    std::size_t n_params = 0;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = false;
    int n_iterations = 0;
    double max_gradient_norm = 0.0;
    std::size_t n_obs = 0;
};

/// Large but finite mechanism-copula parameter reproducing a shared mechanism to ~1e-12.
inline double comonotone_limit_delta(CopulaFamily f) { return f == CopulaFamily::Gumbel ? 1e15 : 1e12; }

/**
 * @brief Re-expresses `src` as a parameter set of a (larger) target variant.
 *
 * Copula roles absent from `src` get their independence value; a shared
 * mechanism becomes the comonotone limit of the target family. Used to seed
 * fits of a variant from fits of the variants it nests.
 */
inline Bdar1Params embed_params(const Bdar1Params& src, Variant target, CopulaFamily alpha_family,
                                CopulaFamily eps_family) {
    double phi1 = src.phi1();
    double phi2 = src.phi2();
    if (shares_phi(target)) phi1 = phi2 = 0.5 * (phi1 + phi2);
    CopulaSpec alpha = CopulaSpec::product();
    CopulaSpec eps = CopulaSpec::product();
    if (has_alpha_copula(target)) {
        if (has_alpha_copula(src.variant()) && src.copula_alpha().family() == alpha_family)
            alpha = src.copula_alpha();
        else if (shares_phi(src.variant()))
            alpha = CopulaSpec::make(alpha_family, comonotone_limit_delta(alpha_family));
        else
            alpha = CopulaSpec::make(alpha_family, CopulaSpec::independence_delta(alpha_family));
    }
    if (has_eps_copula(target)) {
        if (has_eps_copula(src.variant()) && src.copula_eps().family() == eps_family)
            eps = src.copula_eps();
        else
            eps = CopulaSpec::make(eps_family, CopulaSpec::independence_delta(eps_family));
    }
    return Bdar1Params::make(target, phi1, phi2, alpha, eps, src.marginal1(), src.marginal2());
}

/// True when `nested` is a special case of `full`.
inline bool is_nested(Variant nested, Variant full) {
    using V = Variant;
    if (nested == full) return false;
    if (full == V::M5_Full) return true;
    if (nested == V::M1_Independent) return full == V::M3_DepInnovOnly || full == V::M4_DepMechOnly;
    return false;
}

namespace detail {

inline std::vector<double> empirical_marginal(const std::vector<int>& z, std::size_t d, int series) {
    std::vector<double> counts(d, 0.0);
    for (int s : z) counts[static_cast<std::size_t>(s - 1)] += 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (counts[i] == 0.0)
            throw std::invalid_argument("state " + std::to_string(i + 1) + " of series " + std::to_string(series) +
                                        " is never observed; collapse it into a neighbouring state before fitting");
        counts[i] /= static_cast<double>(z.size());
    }
    return counts;
}

// Method of moments for DAR(1): P(Z_t = Z_{t-1}) = phi + (1 - phi) sum p_i^2.
inline double moment_phi(const std::vector<int>& z, const std::vector<double>& p) {
    double agree = 0.0;
    for (std::size_t t = 1; t < z.size(); ++t) agree += z[t] == z[t - 1] ? 1.0 : 0.0;
    agree /= static_cast<double>(z.size() - 1);
    double s = 0.0;
    for (double x : p) s += x * x;
    return std::clamp((agree - s) / (1.0 - s), 0.02, 0.95);
}

inline double start_delta(CopulaFamily f, int strength) {
    static constexpr double gumbel[] = {1.05, 2.0, 5.0};
    static constexpr double frank[] = {0.5, 5.0, 15.0};
    return f == CopulaFamily::Gumbel ? gumbel[strength] : frank[strength];
}

}  // namespace detail

/**
 * @brief Conditional maximum-likelihood fit of one variant.
 *
 * BFGS on the unconstrained scale from up to five built-in starting points
 * (moment-based phi and empirical marginals with weak, moderate and strong
 * copula dependence; phi = 0.5; a seeded jitter) plus any warm starts. The
 * best run is kept. Standard errors come from the inverse finite-difference
 * Hessian of -l mapped to the reported scale by the delta method.
 */
inline FitReport fit(const BivariateOrdinalSeries& data, Variant variant, CopulaFamily alpha_family,
                     CopulaFamily eps_family, const FitOptions& options = {}) {
    data.validate();
    if (data.length() < options.min_length)
        throw std::invalid_argument("fit: series length " + std::to_string(data.length()) + " below minimum " +
                                    std::to_string(options.min_length));
    const auto p1 = detail::empirical_marginal(data.z1, data.d1, 1);
    const auto p2 = detail::empirical_marginal(data.z2, data.d2, 2);
    const Parameterization param(variant, alpha_family, eps_family, data.d1, data.d2);
    const TransitionCounts counts(data);

    const optim::Objective objective = [&](const std::vector<double>& eta) {
        try {
            const double ll = counts.loglik(param.to_params(eta));
            return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const double mom1 = detail::moment_phi(data.z1, p1);
    const double mom2 = detail::moment_phi(data.z2, p2);
    auto start = [&](double phi1, double phi2, int strength) {
        if (shares_phi(variant)) phi1 = phi2 = 0.5 * (phi1 + phi2);
        const CopulaSpec a = has_alpha_copula(variant)
                                 ? CopulaSpec::make(param.alpha_family(), detail::start_delta(param.alpha_family(), strength))
                                 : CopulaSpec::product();
        const CopulaSpec e = has_eps_copula(variant)
                                 ? CopulaSpec::make(param.eps_family(), detail::start_delta(param.eps_family(), strength))
                                 : CopulaSpec::product();
        return param.to_unconstrained(
            Bdar1Params::make(variant, phi1, phi2, a, e, CategoricalMarginal(p1), CategoricalMarginal(p2)));
    };

    std::vector<std::vector<double>> starts;
    const int n_builtin = std::clamp(options.n_restarts, 1, 5);
    starts.push_back(start(mom1, mom2, 0));
    if (n_builtin > 1) starts.push_back(start(mom1, mom2, 1));
    if (n_builtin > 2) starts.push_back(start(0.5, 0.5, 0));
    if (n_builtin > 3) starts.push_back(start(mom1, mom2, 2));
    if (n_builtin > 4) {
        auto jittered = start(mom1, mom2, 1);
        Rng rng = substream(options.seed, "fit-restart");
        for (double& e : jittered) e += 0.3 * rng.normal();
        starts.push_back(std::move(jittered));
    }
    for (const auto& w : options.warm_starts)
        starts.push_back(param.to_unconstrained(embed_params(w, variant, param.alpha_family(), param.eps_family())));

    optim::BfgsOptions bopt;
    bopt.max_iterations = options.max_iterations;
    bopt.gradient_tolerance = options.gradient_tolerance;
    optim::BfgsResult best;
    for (const auto& s : starts) {
        auto r = optim::minimize_bfgs(objective, s, bopt);
        if (std::isfinite(r.value) && (!std::isfinite(best.value) || r.value < best.value)) best = std::move(r);
    }
    if (!std::isfinite(best.value))
        throw std::runtime_error("fit: no starting point gave a finite likelihood");

    FitReport rep;
    rep.variant = variant;
    rep.alpha_family = param.alpha_family();
    rep.eps_family = param.eps_family();
    rep.params_hat = param.to_params(best.x);
    rep.param_names = param.names();
    rep.estimates = param.reported(rep.params_hat);
    rep.loglik = -best.value;
    rep.n_params = param.size();
    rep.n_obs = data.length();
    const auto ic = information_criteria(rep.loglik, rep.n_params, rep.n_obs);
    rep.aic = ic.aic;
    rep.bic = ic.bic;
    rep.converged = best.converged;
    rep.n_iterations = best.iterations;
    rep.max_gradient_norm = best.max_gradient;

    rep.std_errors.assign(rep.n_params, std::numeric_limits<double>::quiet_NaN());
    if (options.compute_std_errors) {
        const Matrix hess = optim::numerical_hessian(objective, best.x);
        bool finite = true;
        for (double h : hess.data()) finite = finite && std::isfinite(h);
        if (finite) {
            if (auto cov = linalg::spd_inverse(hess)) {
                const Matrix jac = param.reported_jacobian(best.x);
                const std::size_t n = rep.n_params;
                for (std::size_t r = 0; r < n; ++r) {
                    double v = 0.0;
                    for (std::size_t a = 0; a < n; ++a)
                        for (std::size_t b = 0; b < n; ++b) v += jac(r, a) * (*cov)(a, b) * jac(r, b);
                    rep.std_errors[r] = v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
                }
                rep.std_errors_available = true;
            }
        }
    }
    return rep;
}

struct LrtResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    /// Non-empty when the inputs look suspicious (negative statistic, non-nested variants).
    std::string warning;
};

/// Upper tail of the chi-square distribution.
inline double chi_square_upper_tail(double x, double df) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

/// LRT with statistic 2 (l_full - l_nested) against a central chi-square with df = k_full - k_nested.
inline LrtResult likelihood_ratio_test(double loglik_full, std::size_t k_full, double loglik_nested,
                                       std::size_t k_nested) {
    if (k_nested >= k_full) throw std::invalid_argument("likelihood_ratio_test: nested model must have fewer parameters");
    LrtResult r;
    r.df = k_full - k_nested;
    const double stat = 2.0 * (loglik_full - loglik_nested);
    if (stat < -1e-8) r.warning = "negative statistic clamped to 0; the larger fit did not reach the nested optimum";
    r.statistic = std::max(0.0, stat);
    r.p_value = chi_square_upper_tail(r.statistic, static_cast<double>(r.df));
    return r;
}

inline LrtResult likelihood_ratio_test(const FitReport& full, const FitReport& nested) {
    auto r = likelihood_ratio_test(full.loglik, full.n_params, nested.loglik, nested.n_params);
    if (!is_nested(nested.variant, full.variant)) {
        const std::string msg = std::string(to_string(nested.variant)) + " is not nested in " +
                                std::string(to_string(full.variant)) + "; p-value is not meaningful";
        r.warning = r.warning.empty() ? msg : r.warning + "; " + msg;
    }
    return r;
}

}  // namespace bdar
