#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bdar/copula.hpp"
#include "bdar/joint_discrete.hpp"
#include "bdar/matrix.hpp"
#include "bdar/random.hpp"

namespace bdar {

/// The five nested BDAR(1) variants.
enum class Variant {
    M1_Independent,      ///< product mechanisms, product innovations
    M2_CommonMechanism,  ///< one shared mechanism, copula innovations
    M3_DepInnovOnly,     ///< product mechanisms, copula innovations
    M4_DepMechOnly,      ///< copula mechanisms, product innovations
    M5_Full,             ///< copula mechanisms, copula innovations
};

inline constexpr std::array<Variant, 5> kAllVariants{Variant::M1_Independent, Variant::M2_CommonMechanism,
                                                     Variant::M3_DepInnovOnly, Variant::M4_DepMechOnly,
                                                     Variant::M5_Full};

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::M1_Independent: return "M1";
        case Variant::M2_CommonMechanism: return "M2";
        case Variant::M3_DepInnovOnly: return "M3";
        case Variant::M4_DepMechOnly: return "M4";
        case Variant::M5_Full: return "M5";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    if (s == "M1" || s == "m1" || s == "1" || s == "independent") return Variant::M1_Independent;
    if (s == "M2" || s == "m2" || s == "2" || s == "common") return Variant::M2_CommonMechanism;
    if (s == "M3" || s == "m3" || s == "3" || s == "dep-innov") return Variant::M3_DepInnovOnly;
    if (s == "M4" || s == "m4" || s == "4" || s == "dep-mech") return Variant::M4_DepMechOnly;
    if (s == "M5" || s == "m5" || s == "5" || s == "full") return Variant::M5_Full;
    throw std::invalid_argument("unknown model variant '" + std::string(s) + "' (expected M1..M5)");
}

inline bool has_alpha_copula(Variant v) { return v == Variant::M4_DepMechOnly || v == Variant::M5_Full; }
inline bool has_eps_copula(Variant v) {
    return v == Variant::M2_CommonMechanism || v == Variant::M3_DepInnovOnly || v == Variant::M5_Full;
}
inline bool shares_phi(Variant v) { return v == Variant::M2_CommonMechanism; }

/// Largest phi accepted anywhere; keeps pi11 away from 1.
inline constexpr double kPhiUpperBound = 1.0 - 1e-6;

/**
 * @brief Full BDAR(1) parameter set for one variant.
 *
 * Holds phi1, phi2, the mechanism and innovation copulas and the two
 * innovation marginals. The variant fixes which copulas are free: roles the
 * variant does not use are stored as Product. The mechanism and innovation
 * tables are built once at construction.
 */
class Bdar1Params {
public:
    Bdar1Params() = default;

    static Bdar1Params make(Variant variant, double phi1, double phi2, CopulaSpec copula_alpha,
                            CopulaSpec copula_eps, CategoricalMarginal m1, CategoricalMarginal m2) {
        Bdar1Params p;
        p.variant_ = variant;
        if (!(phi1 >= 0.0 && phi1 < 1.0) || !(phi2 >= 0.0 && phi2 < 1.0))
            throw std::domain_error("Bdar1Params: stationarity requires 0 <= phi < 1");
        if (shares_phi(variant) && phi1 != phi2)
            throw std::invalid_argument("Bdar1Params: common-mechanism variant requires phi1 == phi2");
        p.phi1_ = phi1;
        p.phi2_ = phi2;
        p.copula_alpha_ = has_alpha_copula(variant) ? copula_alpha : CopulaSpec::product();
        p.copula_eps_ = has_eps_copula(variant) ? copula_eps : CopulaSpec::product();
        p.m1_ = std::move(m1);
        p.m2_ = std::move(m2);
        p.mechanism_ = shares_phi(variant) ? MechanismTable::comonotone(phi1)
                                           : bernoulli_joint(phi1, phi2, p.copula_alpha_);
        p.innovation_ = innovation_joint(p.m1_, p.m2_, p.copula_eps_);
        return p;
    }

    static Bdar1Params independent(double phi1, double phi2, CategoricalMarginal m1, CategoricalMarginal m2) {
        return make(Variant::M1_Independent, phi1, phi2, CopulaSpec::product(), CopulaSpec::product(), std::move(m1),
                    std::move(m2));
    }
    static Bdar1Params common_mechanism(double phi, CopulaSpec copula_eps, CategoricalMarginal m1,
                                        CategoricalMarginal m2) {
        return make(Variant::M2_CommonMechanism, phi, phi, CopulaSpec::product(), copula_eps, std::move(m1),
                    std::move(m2));
    }
    static Bdar1Params dependent_innovations(double phi1, double phi2, CopulaSpec copula_eps, CategoricalMarginal m1,
                                             CategoricalMarginal m2) {
        return make(Variant::M3_DepInnovOnly, phi1, phi2, CopulaSpec::product(), copula_eps, std::move(m1),
                    std::move(m2));
    }
    static Bdar1Params dependent_mechanisms(double phi1, double phi2, CopulaSpec copula_alpha, CategoricalMarginal m1,
                                            CategoricalMarginal m2) {
        return make(Variant::M4_DepMechOnly, phi1, phi2, copula_alpha, CopulaSpec::product(), std::move(m1),
                    std::move(m2));
    }
    static Bdar1Params full(double phi1, double phi2, CopulaSpec copula_alpha, CopulaSpec copula_eps,
                            CategoricalMarginal m1, CategoricalMarginal m2) {
        return make(Variant::M5_Full, phi1, phi2, copula_alpha, copula_eps, std::move(m1), std::move(m2));
    }

    [[nodiscard]] Variant variant() const noexcept { return variant_; }
    [[nodiscard]] double phi1() const noexcept { return phi1_; }
    [[nodiscard]] double phi2() const noexcept { return phi2_; }
    [[nodiscard]] const CopulaSpec& copula_alpha() const noexcept { return copula_alpha_; }
    [[nodiscard]] const CopulaSpec& copula_eps() const noexcept { return copula_eps_; }
    [[nodiscard]] const CategoricalMarginal& marginal1() const noexcept { return m1_; }
    [[nodiscard]] const CategoricalMarginal& marginal2() const noexcept { return m2_; }
    [[nodiscard]] const MechanismTable& mechanism() const noexcept { return mechanism_; }
    [[nodiscard]] const InnovationTable& innovation() const noexcept { return innovation_; }
    [[nodiscard]] std::size_t d1() const noexcept { return m1_.size(); }
    [[nodiscard]] std::size_t d2() const noexcept { return m2_.size(); }

private:
    Variant variant_ = Variant::M1_Independent;
    double phi1_ = 0.0;
    double phi2_ = 0.0;
    CopulaSpec copula_alpha_;
    CopulaSpec copula_eps_;
    CategoricalMarginal m1_;
    CategoricalMarginal m2_;
    MechanismTable mechanism_;
    InnovationTable innovation_;
};

/**
 * @brief Two aligned ordinal sequences.
 *
 * States are 1-based indices: z1[t] in 1..d1 and z2[t] in 1..d2. Labels are
 * optional metadata for the states (e.g. the interval each state stands for).
 */
struct BivariateOrdinalSeries {
    std::vector<int> z1;
    std::vector<int> z2;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::vector<std::string> labels1;
    std::vector<std::string> labels2;

    BivariateOrdinalSeries() = default;
    BivariateOrdinalSeries(std::vector<int> a, std::vector<int> b, std::size_t states1, std::size_t states2)
        : z1(std::move(a)), z2(std::move(b)), d1(states1), d2(states2) {
        validate();
    }

    [[nodiscard]] std::size_t length() const noexcept { return z1.size(); }

    void validate() const {
        if (z1.size() != z2.size()) throw std::invalid_argument("BivariateOrdinalSeries: unequal lengths");
        if (z1.size() < 2) throw std::invalid_argument("BivariateOrdinalSeries: need at least 2 observations");
        if (d1 < 1 || d2 < 1) throw std::invalid_argument("BivariateOrdinalSeries: empty state space");
        for (std::size_t t = 0; t < z1.size(); ++t) {
            if (z1[t] < 1 || static_cast<std::size_t>(z1[t]) > d1)
                throw std::out_of_range("series 1 state out of range at t=" + std::to_string(t + 1));
            if (z2[t] < 1 || static_cast<std::size_t>(z2[t]) > d2)
                throw std::out_of_range("series 2 state out of range at t=" + std::to_string(t + 1));
        }
    }
};

inline void check_state(int s, std::size_t d, const char* what) {
    if (s < 1 || static_cast<std::size_t>(s) > d)
        throw std::out_of_range(std::string(what) + " state " + std::to_string(s) + " outside 1.." + std::to_string(d));
}

/// Univariate DAR(1): P(Z_t = i | Z_{t-1} = prev) = (1-phi) p_i + phi 1{i = prev}.
inline std::vector<double> dar1_conditional_pmf(double phi, const CategoricalMarginal& marginal, int prev) {
    if (!(phi >= 0.0 && phi < 1.0)) throw std::domain_error("dar1_conditional_pmf: phi must lie in [0,1)");
    check_state(prev, marginal.size(), "previous");
    std::vector<double> out(marginal.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - phi) * marginal[i];
    out[static_cast<std::size_t>(prev - 1)] += phi;
    return out;
}

/**
 * @brief One cell of the joint transition pmf.
 *
 * P(i, j | s, l) = pi11 1{(i,j)=(s,l)} + pi00 p_eps(i,j)
 *                + pi10 1{i=s} p2(j) + pi01 p1(i) 1{j=l}.
 * All states are 1-based.
 */
inline double joint_conditional_prob(const Bdar1Params& params, int prev1, int prev2, int i, int j) {
    const auto& pi = params.mechanism();
    const auto& eps = params.innovation();
    const std::size_t r = static_cast<std::size_t>(i - 1);
    const std::size_t c = static_cast<std::size_t>(j - 1);
    double p = pi.pi00() * eps(r, c);
    if (i == prev1) p += pi.pi10() * params.marginal2()[c];
    if (j == prev2) p += pi.pi01() * params.marginal1()[r];
    if (i == prev1 && j == prev2) p += pi.pi11();
    return p;
}

/// d1 x d2 matrix of P(Z_t = (i,j) | Z_{t-1} = (prev1, prev2)); cell (i-1, j-1).
inline Matrix joint_conditional_pmf(const Bdar1Params& params, int prev1, int prev2) {
    check_state(prev1, params.d1(), "previous series-1");
    check_state(prev2, params.d2(), "previous series-2");
    Matrix out(params.d1(), params.d2());
    for (std::size_t i = 0; i < params.d1(); ++i)
        for (std::size_t j = 0; j < params.d2(); ++j)
            out(i, j) = joint_conditional_prob(params, prev1, prev2, static_cast<int>(i + 1), static_cast<int>(j + 1));
    return out;
}

/// Stationary joint pmf p_ij = [(pi10 + pi01) p1_i p2_j + pi00 p_eps_ij] / (1 - pi11).
inline Matrix stationary_joint_pmf(const Bdar1Params& params) {
    const auto& pi = params.mechanism();
    const double denom = 1.0 - pi.pi11();
    if (!(denom > 0.0)) throw std::domain_error("stationary_joint_pmf: degenerate mechanism with pi11 = 1");
    const auto& m1 = params.marginal1();
    const auto& m2 = params.marginal2();
    const auto& eps = params.innovation();
    Matrix out(params.d1(), params.d2());
    for (std::size_t i = 0; i < params.d1(); ++i)
        for (std::size_t j = 0; j < params.d2(); ++j)
            out(i, j) = ((pi.pi10() + pi.pi01()) * m1[i] * m2[j] + pi.pi00() * eps(i, j)) / denom;
    return out;
}

using Matrix2 = std::array<std::array<double, 2>, 2>;

/**
 * @brief Means, lagged cross-covariances and cross-correlations.
 *
 * gamma[k][r][s] = Cov(Z_{r,t}, Z_{s,t-k}) with r, s in {0,1}. The lag-k
 * matrices follow gamma_11(k) = phi1 gamma_11(k-1), gamma_22(k) = phi2
 * gamma_22(k-1), gamma_12(k) = phi1 gamma_12(k-1), gamma_21(k) = phi2
 * gamma_21(k-1), so Gamma(k) is not symmetric in general.
 */
struct CrossMoments {
    double mu1 = 0.0;
    double mu2 = 0.0;
    std::vector<Matrix2> gamma;
    std::vector<Matrix2> rho;

    [[nodiscard]] std::size_t max_lag() const noexcept { return gamma.empty() ? 0 : gamma.size() - 1; }
};

/**
 * @brief Closed-form moments of the stationary process.
 *
 * State values default to the indices 1..d; `values1` / `values2` override
 * them with numeric codes (e.g. interval midpoints).
 */
inline CrossMoments cross_moments(const Bdar1Params& params, int max_lag, std::vector<double> values1 = {},
                                  std::vector<double> values2 = {}) {
    if (max_lag < 0) throw std::invalid_argument("cross_moments: max_lag must be >= 0");
    const std::size_t d1 = params.d1();
    const std::size_t d2 = params.d2();
    if (values1.empty())
        for (std::size_t i = 0; i < d1; ++i) values1.push_back(static_cast<double>(i + 1));
    if (values2.empty())
        for (std::size_t j = 0; j < d2; ++j) values2.push_back(static_cast<double>(j + 1));
    if (values1.size() != d1 || values2.size() != d2)
        throw std::invalid_argument("cross_moments: state value vectors do not match state counts");

    const auto& m1 = params.marginal1();
    const auto& m2 = params.marginal2();
    const auto& eps = params.innovation();
    CrossMoments out;
    double e11 = 0.0, e22 = 0.0, e12 = 0.0;
    for (std::size_t i = 0; i < d1; ++i) {
        out.mu1 += values1[i] * m1[i];
        e11 += values1[i] * values1[i] * m1[i];
    }
    for (std::size_t j = 0; j < d2; ++j) {
        out.mu2 += values2[j] * m2[j];
        e22 += values2[j] * values2[j] * m2[j];
    }
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d2; ++j) e12 += values1[i] * values2[j] * eps(i, j);

    const double phi1 = params.phi1();
    const double phi2 = params.phi2();
    const double phi12 = params.mechanism().phi12();
    const double var1 = e11 - out.mu1 * out.mu1;
    const double var2 = e22 - out.mu2 * out.mu2;
    const double cov0 = (1.0 - phi1 - phi2 + phi12) * (e12 - out.mu1 * out.mu2) / (1.0 - phi12);

    Matrix2 g{};
    g[0][0] = var1;
    g[1][1] = var2;
    g[0][1] = cov0;
    g[1][0] = cov0;
    const double scale = std::sqrt(var1) * std::sqrt(var2);
    for (int k = 0; k <= max_lag; ++k) {
        if (k > 0) {
            g[0][0] *= phi1;
            g[1][1] *= phi2;
            g[0][1] *= phi1;
            g[1][0] *= phi2;
        }
        Matrix2 r{};
        r[0][0] = g[0][0] / var1;
        r[1][1] = g[1][1] / var2;
        r[0][1] = g[0][1] / scale;
        r[1][0] = g[1][0] / scale;
        out.gamma.push_back(g);
        out.rho.push_back(r);
    }
    return out;
}

namespace detail {

// Runs the recursion Z_t = alpha_t * Z_{t-1} + (1 - alpha_t) * eps_t.
inline void simulate_steps(const Bdar1Params& params, std::size_t steps, Rng& rng, int& s1, int& s2,
                           std::vector<int>* out1, std::vector<int>* out2) {
    const JointSampler mech(params.mechanism().as_matrix());
    const JointSampler innov(params.innovation().cells());
    for (std::size_t t = 0; t < steps; ++t) {
        const CellIndex a = mech.sample(rng);
        const CellIndex e = innov.sample(rng);
        if (a.row == 0) s1 = static_cast<int>(e.row + 1);
        if (a.col == 0) s2 = static_cast<int>(e.col + 1);
        if (out1) out1->push_back(s1);
        if (out2) out2->push_back(s2);
    }
}

}  // namespace detail

/**
 * @brief Simulates a path of the BDAR(1) recursion.
 *
 * The initial pair is drawn from the stationary joint pmf, then `burn_in`
 * steps are discarded before the `length` recorded observations (the first
 * recorded value is the state after burn-in). Each step draws the mechanism
 * pair and the innovation pair, in that order, from `rng`.
 */
inline BivariateOrdinalSeries simulate(const Bdar1Params& params, std::size_t length, Rng& rng,
                                       std::size_t burn_in = 0) {
    if (length < 2) throw std::invalid_argument("simulate: length must be >= 2");
    const CellIndex init = JointSampler(stationary_joint_pmf(params)).sample(rng);
    int s1 = static_cast<int>(init.row + 1);
    int s2 = static_cast<int>(init.col + 1);
    detail::simulate_steps(params, burn_in, rng, s1, s2, nullptr, nullptr);
    std::vector<int> z1{s1}, z2{s2};
    z1.reserve(length);
    z2.reserve(length);
    detail::simulate_steps(params, length - 1, rng, s1, s2, &z1, &z2);
    return BivariateOrdinalSeries(std::move(z1), std::move(z2), params.d1(), params.d2());
}

/// As simulate(), but starting from a fixed pair; a burn-in of ~100 steps is advisable.
inline BivariateOrdinalSeries simulate_from(const Bdar1Params& params, std::size_t length, Rng& rng,
                                            std::pair<int, int> initial, std::size_t burn_in = 100) {
    if (length < 2) throw std::invalid_argument("simulate: length must be >= 2");
    check_state(initial.first, params.d1(), "initial series-1");
    check_state(initial.second, params.d2(), "initial series-2");
    int s1 = initial.first;
    int s2 = initial.second;
    detail::simulate_steps(params, burn_in, rng, s1, s2, nullptr, nullptr);
    std::vector<int> z1{s1}, z2{s2};
    detail::simulate_steps(params, length - 1, rng, s1, s2, &z1, &z2);
    return BivariateOrdinalSeries(std::move(z1), std::move(z2), params.d1(), params.d2());
}

/// Univariate DAR(1) path; the initial state is drawn from the marginal.
inline std::vector<int> dar1_simulate(double phi, const CategoricalMarginal& marginal, std::size_t length, Rng& rng) {
    if (!(phi >= 0.0 && phi < 1.0)) throw std::domain_error("dar1_simulate: phi must lie in [0,1)");
    if (length < 2) throw std::invalid_argument("dar1_simulate: length must be >= 2");
    Matrix row(1, marginal.size());
    for (std::size_t i = 0; i < marginal.size(); ++i) row(0, i) = marginal[i];
    const JointSampler innov(row);
    std::vector<int> z;
    z.reserve(length);
    int s = static_cast<int>(innov.sample_flat(rng) + 1);
    z.push_back(s);
    for (std::size_t t = 1; t < length; ++t) {
        const bool keep = rng.uniform() < phi;
        const int fresh = static_cast<int>(innov.sample_flat(rng) + 1);
        if (!keep) s = fresh;
        z.push_back(s);
    }
    return z;
}

}  // namespace bdar
