#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdar/forecast.hpp"

using namespace bdar;

namespace {

Bdar1Params application_params() {
    const CategoricalMarginal p1({0.123, 0.145, 0.303, 0.429}), p2({0.410, 0.433, 0.157});
    return Bdar1Params::full(0.823, 0.752, CopulaSpec::frank(24.719), CopulaSpec::frank(28.4), p1, p2);
}

Bdar1Params small_params() {
    const CategoricalMarginal m1({0.15, 0.6, 0.25}), m2({0.2, 0.3, 0.5});
    return Bdar1Params::full(0.4, 0.25, CopulaSpec::gumbel(2.0), CopulaSpec::gumbel(2.0), m1, m2);
}

double max_cell_error(const ForecastResult& mc, const std::vector<Matrix>& exact) {
    double e = 0.0;
    for (std::size_t h = 0; h < exact.size(); ++h) e = std::max(e, mc.joint[h].max_abs_diff(exact[h]));
    return e;
}

}  // namespace

TEST(ExactForecast, OneStepIsConditionalPmf) {
    const auto p = application_params();
    const auto f = exact_forecast_pmf(p, {2, 1}, 1);
    EXPECT_EQ(f.front(), joint_conditional_pmf(p, 2, 1));
}

TEST(ExactForecast, LongHorizonReachesStationary) {
    const auto p = application_params();
    const auto f = exact_forecast_pmf(p, {2, 1}, 500);
    EXPECT_LE(f.back().max_abs_diff(stationary_joint_pmf(p)), 1e-8);
}

TEST(ExactForecast, Errors) {
    const auto p = small_params();
    EXPECT_THROW(exact_forecast_pmf(p, {0, 1}, 3), std::out_of_range);
    EXPECT_THROW(exact_forecast_pmf(p, {1, 1}, 0), std::invalid_argument);
}

TEST(Forecast, Errors) {
    const auto p = small_params();
    EXPECT_THROW(forecast(p, {1, 1}, 3, 0, 1), std::invalid_argument);
    EXPECT_THROW(forecast(p, {1, 4}, 3, 10, 1), std::out_of_range);
}

TEST(Forecast, MemorylessCaseMatchesInnovationTable) {
    const CategoricalMarginal m1({0.15, 0.6, 0.25}), m2({0.2, 0.3, 0.5});
    const auto p = Bdar1Params::dependent_innovations(0.0, 0.0, CopulaSpec::gumbel(2.0), m1, m2);
    const auto r = forecast(p, {1, 1}, 3, 100000, 7);
    for (const auto& j : r.joint) EXPECT_LE(j.max_abs_diff(p.innovation().cells()), 0.005);
}

TEST(Forecast, FrequenciesAreConsistent) {
    const auto r = forecast(application_params(), {2, 1}, 12, 10000, 3);
    ASSERT_EQ(r.joint.size(), 12u);
    for (std::size_t h = 0; h < 12; ++h) {
        EXPECT_NEAR(r.joint[h].sum(), 1.0, 1e-9);
        const auto rs = r.joint[h].row_sums();
        const auto cs = r.joint[h].col_sums();
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(rs[i], r.marginal1(h, i), 1e-9);
            s1 += r.marginal1(h, i);
        }
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_NEAR(cs[j], r.marginal2(h, j), 1e-9);
            s2 += r.marginal2(h, j);
        }
        EXPECT_NEAR(s1, 1.0, 1e-9);
        EXPECT_NEAR(s2, 1.0, 1e-9);
        for (std::size_t i = 0; i < 4; ++i)
            EXPECT_LE(r.marginal1(h, i), r.marginal1(h, static_cast<std::size_t>(r.modal1[h] - 1)));
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_LE(r.marginal2(h, j), r.marginal2(h, static_cast<std::size_t>(r.modal2[h] - 1)));
        const auto [a, b] = r.modal_joint[h];
        for (double v : r.joint[h].data())
            EXPECT_LE(v, r.joint[h](static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)));
    }
}

TEST(Forecast, IndependentOfWorkerCount) {
    const auto p = application_params();
    const auto a = forecast(p, {2, 1}, 6, 5000, 11, 1);
    const auto b = forecast(p, {2, 1}, 6, 5000, 11, 3);
    const auto c = forecast(p, {2, 1}, 6, 5000, 11, 8);
    for (std::size_t h = 0; h < 6; ++h) {
        EXPECT_EQ(a.joint[h], b.joint[h]);
        EXPECT_EQ(a.joint[h], c.joint[h]);
    }
    EXPECT_EQ(a.modal_joint, c.modal_joint);
}

TEST(Forecast, ConvergesToExactAtRootNRate) {
    const auto p = small_params();
    const auto exact = exact_forecast_pmf(p, {1, 3}, 5);
    double prev = 1.0;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
        const double err = max_cell_error(forecast(p, {1, 3}, 5, n, 21), exact);
        // Maximum over 45 cells of |error|; 4.5 standard errors of a p = 0.5 cell.
        EXPECT_LE(err, 4.5 * 0.5 / std::sqrt(static_cast<double>(n)));
        if (n > 1000) {
            EXPECT_LT(err, prev);
        }
        prev = err;
    }
}

TEST(Forecast, OneStepMatchesConditionalPmf) {
    const auto p = application_params();
    const auto r = forecast(p, {2, 1}, 1, 1000000, 5);
    EXPECT_LE(r.joint[0].max_abs_diff(joint_conditional_pmf(p, 2, 1)), 0.002);
}

TEST(Forecast, ModalStabilityAcrossSeeds) {
    const auto p = application_params();
    const auto a = forecast(p, {2, 1}, 12, 10000, 100);
    const auto b = forecast(p, {2, 1}, 12, 10000, 200);
    for (std::size_t h = 0; h < 12; ++h) {
        std::vector<double> f(a.marginal1.cols());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = a.marginal1(h, i);
        std::sort(f.rbegin(), f.rend());
        if (f[0] - f[1] > 0.03) {
            EXPECT_EQ(a.modal1[h], b.modal1[h]) << "h=" << h + 1;
        }
    }
}

TEST(Forecast, TiesResolveToLowestIndex) {
    const CategoricalMarginal m({0.25, 0.25, 0.25, 0.25});
    const auto p = Bdar1Params::independent(0.0, 0.0, m, m);
    // A single trajectory leaves one non-zero cell, which must be the joint mode.
    const auto r = forecast(p, {1, 1}, 1, 1, 0);
    const auto& j = r.joint[0];
    std::size_t first = 0;
    while (j.data()[first] == 0.0) ++first;
    EXPECT_EQ(r.modal_joint[0], std::make_pair(static_cast<int>(first / 4 + 1), static_cast<int>(first % 4 + 1)));
    std::vector<std::uint64_t> counts{3, 5, 5, 1};
    EXPECT_EQ(detail::argmax_lowest(counts, 4), 1u);
}

TEST(Forecast, ApplicationFrequencyPattern) {
    const auto p = application_params();
    const auto r = forecast(p, {2, 1}, 12, 10000, 2023);
    for (std::size_t h = 1; h < 12; ++h) EXPECT_LT(r.marginal1(h, 1), r.marginal1(h - 1, 1));
    for (std::size_t h = 1; h < 12; ++h) EXPECT_GT(r.marginal1(h, 3), r.marginal1(h - 1, 3) - 0.01);
    EXPECT_LT(r.marginal1(11, 3), 0.429 + 0.01);
    EXPECT_GT(r.marginal1(11, 3), r.marginal1(0, 3));
}

TEST(Forecast, DeterministicUnderSeed) {
    const auto p = small_params();
    const auto a = forecast(p, {2, 2}, 4, 2000, 9);
    const auto b = forecast(p, {2, 2}, 4, 2000, 9);
    for (std::size_t h = 0; h < 4; ++h) EXPECT_EQ(a.joint[h], b.joint[h]);
}
