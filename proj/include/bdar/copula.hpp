#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bdar {

enum class CopulaFamily { Product, Gumbel, Frank };

inline std::string_view to_string(CopulaFamily f) {
    switch (f) {
        case CopulaFamily::Product: return "product";
        case CopulaFamily::Gumbel: return "gumbel";
        case CopulaFamily::Frank: return "frank";
    }
    return "unknown";
}

inline CopulaFamily parse_copula_family(std::string_view name) {
    if (name == "product") return CopulaFamily::Product;
    if (name == "gumbel") return CopulaFamily::Gumbel;
    if (name == "frank") return CopulaFamily::Frank;
    throw std::invalid_argument("unknown copula family '" + std::string(name) +
                                "' (expected product, gumbel or frank)");
}

/// Default |delta| band inside which Frank is evaluated as the independence copula.
inline constexpr double kFrankIndependenceBand = 1e-8;

/// Slack allowed on unit-square coordinates before they are rejected.
inline constexpr double kUnitTolerance = 1e-12;

/**
 * @brief Copula family plus dependence parameter.
 *
 * Product carries no parameter (delta stored as 0). Gumbel requires
 * delta >= 1. Frank accepts any finite delta; |delta| below the band is the
 * independence limit.
 */
class CopulaSpec {
public:
    CopulaSpec() = default;

    static CopulaSpec product() { return CopulaSpec(CopulaFamily::Product, 0.0, kFrankIndependenceBand); }

    static CopulaSpec gumbel(double delta) {
        if (!(delta >= 1.0) || !std::isfinite(delta))
            throw std::domain_error("Gumbel copula requires finite delta >= 1, got " + std::to_string(delta));
        return CopulaSpec(CopulaFamily::Gumbel, delta, kFrankIndependenceBand);
    }

    static CopulaSpec frank(double delta, double independence_band = kFrankIndependenceBand) {
        if (!std::isfinite(delta)) throw std::domain_error("Frank copula requires finite delta");
        if (!(independence_band >= 0.0)) throw std::domain_error("Frank independence band must be >= 0");
        return CopulaSpec(CopulaFamily::Frank, delta, independence_band);
    }

    static CopulaSpec make(CopulaFamily family, double delta) {
        switch (family) {
            case CopulaFamily::Product: return product();
            case CopulaFamily::Gumbel: return gumbel(delta);
            case CopulaFamily::Frank: return frank(delta);
        }
        throw std::invalid_argument("invalid copula family");
    }

    /// The parameter value at which `family` reduces to independence.
    static double independence_delta(CopulaFamily family) { return family == CopulaFamily::Gumbel ? 1.0 : 0.0; }

    [[nodiscard]] CopulaFamily family() const noexcept { return family_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] double frank_band() const noexcept { return band_; }

    /// True when the spec evaluates exactly as C(u,v) = uv.
    [[nodiscard]] bool is_independence() const noexcept {
        switch (family_) {
            case CopulaFamily::Product: return true;
            case CopulaFamily::Gumbel: return delta_ == 1.0;
            case CopulaFamily::Frank: return std::abs(delta_) < band_;
        }
        return false;
    }

    friend bool operator==(const CopulaSpec&, const CopulaSpec&) = default;

private:
    CopulaSpec(CopulaFamily f, double d, double band) : family_(f), delta_(d), band_(band) {}

    CopulaFamily family_ = CopulaFamily::Product;
    double delta_ = 0.0;
    double band_ = kFrankIndependenceBand;
};

/// Point of the unit square; coordinates within 1e-12 outside [0,1] are clamped.
struct UnitSquarePoint {
    double u = 0.0;
    double v = 0.0;

    static UnitSquarePoint make(double u, double v) { return {clamp_unit(u), clamp_unit(v)}; }

    static double clamp_unit(double x) {
        if (!(x >= -kUnitTolerance && x <= 1.0 + kUnitTolerance))
            throw std::domain_error("copula argument outside [0,1]: " + std::to_string(x));
        return std::clamp(x, 0.0, 1.0);
    }
};

namespace detail {

// exp(-((-log u)^d + (-log v)^d)^(1/d)), scaled by the larger log so large d
// does not overflow.
inline double gumbel_cdf(double u, double v, double delta) {
    const double a = -std::log(u);
    const double b = -std::log(v);
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    if (hi == 0.0) return 1.0;
    const double ratio = lo / hi;
    const double norm = hi * std::pow(1.0 + std::pow(ratio, delta), 1.0 / delta);
    return std::exp(-norm);
}

// Frank copula for delta > 0 written as
//   C = m - (1/d) * [log(B) - log(1 - e^{-d})],
//   B = (1 - e^{-dM}) + e^{-d(M-m)} (1 - e^{-d(1-M)}),
// with m = min(u,v), M = max(u,v). Both terms of B are non-negative, so the
// expression has no cancellation for large d.
inline double frank_cdf_positive(double u, double v, double delta) {
    const double m = std::min(u, v);
    const double big = std::max(u, v);
    const double bracket = -std::expm1(-delta * big) - std::exp(-delta * (big - m)) * std::expm1(-delta * (1.0 - big));
    const double denom = -std::expm1(-delta);
    const double c = m - (std::log(bracket) - std::log(denom)) / delta;
    return std::clamp(c, std::max(0.0, u + v - 1.0), m);
}

}  // namespace detail

/**
 * @brief Copula CDF C(u, v; delta).
 *
 * Boundary values C(u,0)=C(0,v)=0, C(u,1)=u, C(1,v)=v are returned directly.
 * Frank with negative delta uses the reflection C_{-d}(u,v) = u - C_d(u,1-v).
 */
inline double copula_cdf(const CopulaSpec& spec, UnitSquarePoint p) {
    const double u = p.u;
    const double v = p.v;
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    if (spec.is_independence()) return u * v;
    switch (spec.family()) {
        case CopulaFamily::Product: return u * v;
        case CopulaFamily::Gumbel: return detail::gumbel_cdf(u, v, spec.delta());
        case CopulaFamily::Frank:
            if (spec.delta() > 0.0) return detail::frank_cdf_positive(u, v, spec.delta());
            return std::clamp(u - detail::frank_cdf_positive(u, 1.0 - v, -spec.delta()), std::max(0.0, u + v - 1.0),
                              std::min(u, v));
    }
    throw std::invalid_argument("invalid copula family");
}

inline double copula_cdf(const CopulaSpec& spec, double u, double v) {
    return copula_cdf(spec, UnitSquarePoint::make(u, v));
}

/// Tracks how much negative rectangle mass was clamped to zero.
struct ClampDiagnostics {
    double max_clamped = 0.0;
    std::size_t count = 0;

    void record(double negative_mass) {
        max_clamped = std::max(max_clamped, -negative_mass);
        ++count;
    }
};

/**
 * @brief Copula mass of (u_lo, u_hi] x (v_lo, v_hi] by inclusion-exclusion.
 *
 * Tiny negative results from cancellation are clamped to 0 and, when
 * `diag` is given, recorded there.
 */
inline double rectangle_mass(const CopulaSpec& spec, double u_lo, double u_hi, double v_lo, double v_hi,
                             ClampDiagnostics* diag = nullptr) {
    u_lo = UnitSquarePoint::clamp_unit(u_lo);
    u_hi = UnitSquarePoint::clamp_unit(u_hi);
    v_lo = UnitSquarePoint::clamp_unit(v_lo);
    v_hi = UnitSquarePoint::clamp_unit(v_hi);
    if (u_lo > u_hi + kUnitTolerance || v_lo > v_hi + kUnitTolerance)
        throw std::domain_error("rectangle_mass: interval endpoints out of order");
    u_lo = std::min(u_lo, u_hi);
    v_lo = std::min(v_lo, v_hi);
    const double mass = copula_cdf(spec, {u_hi, v_hi}) - copula_cdf(spec, {u_lo, v_hi}) -
                        copula_cdf(spec, {u_hi, v_lo}) + copula_cdf(spec, {u_lo, v_lo});
    if (mass < 0.0) {
        if (diag) diag->record(mass);
        return 0.0;
    }
    return std::min(mass, 1.0);
}

}  // namespace bdar
