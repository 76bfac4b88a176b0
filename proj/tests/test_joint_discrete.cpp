#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bdar/joint_discrete.hpp"

using namespace bdar;

namespace {

// Rectangle-formula cells for the Gumbel(2) innovations with marginals
// (0.15, 0.6, 0.25) and (0.2, 0.3, 0.5), evaluated at 40 digits with mpmath.
const double kGumbelCells[3][3] = {
    {0.0830891326783, 0.0495953226525, 0.0173155446692},
    {0.11187359069, 0.227583788564, 0.260542620746},
    {0.00503727663218, 0.0228208887832, 0.222141834585},
};

// Concordance of a joint table: P(concordant) - P(discordant) for two iid draws.
double table_concordance(const Matrix& p) {
    double c = 0.0, d = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j)
            for (std::size_t k = 0; k < p.rows(); ++k)
                for (std::size_t l = 0; l < p.cols(); ++l) {
                    const double w = p(i, j) * p(k, l);
                    if ((i < k && j < l) || (i > k && j > l)) c += w;
                    if ((i < k && j > l) || (i > k && j < l)) d += w;
                }
    return c - d;
}

std::vector<double> random_simplex(Rng& rng, std::size_t d) {
    std::vector<double> p(d);
    double s = 0.0;
    for (auto& x : p) {
        x = -std::log(1.0 - rng.uniform()) + 1e-3;
        s += x;
    }
    for (auto& x : p) x /= s;
    return p;
}

}  // namespace

TEST(CategoricalMarginal, Invariants) {
    EXPECT_THROW(CategoricalMarginal({1.0}), std::invalid_argument);
    EXPECT_THROW(CategoricalMarginal({0.5, 0.4}), std::invalid_argument);
    EXPECT_THROW(CategoricalMarginal({0.0, 1.0}), std::invalid_argument);
    const CategoricalMarginal m({0.15, 0.6, 0.25});
    EXPECT_EQ(m.size(), 3u);
    EXPECT_EQ(m.cdf(0), 0.0);
    EXPECT_NEAR(m.cdf(2), 0.75, 1e-15);
    EXPECT_EQ(m.cdf(3), 1.0);
}

TEST(BernoulliJoint, ProductTable) {
    const auto t = bernoulli_joint(0.4, 0.25, CopulaSpec::product());
    EXPECT_NEAR(t.pi11(), 0.10, 1e-15);
    EXPECT_NEAR(t.pi10(), 0.30, 1e-15);
    EXPECT_NEAR(t.pi01(), 0.15, 1e-15);
    EXPECT_NEAR(t.pi00(), 0.45, 1e-15);
}

TEST(BernoulliJoint, DegenerateMargins) {
    for (const auto& s : {CopulaSpec::product(), CopulaSpec::gumbel(3.0), CopulaSpec::frank(-2.0)}) {
        const auto t = bernoulli_joint(0.0, 0.0, s);
        EXPECT_DOUBLE_EQ(t.pi00(), 1.0);
        EXPECT_DOUBLE_EQ(t.pi01(), 0.0);
        EXPECT_DOUBLE_EQ(t.pi10(), 0.0);
        EXPECT_DOUBLE_EQ(t.pi11(), 0.0);
    }
}

TEST(BernoulliJoint, GumbelTable) {
    const double c = 0.5564029244415905;  // C_G(0.6, 0.75; 2)
    const auto t = bernoulli_joint(0.4, 0.25, CopulaSpec::gumbel(2.0));
    EXPECT_NEAR(t.pi00(), c, 1e-12);
    EXPECT_NEAR(t.pi10(), 0.75 - c, 1e-12);
    EXPECT_NEAR(t.pi01(), 0.6 - c, 1e-12);
    EXPECT_NEAR(t.pi11(), c - 0.35, 1e-12);
    EXPECT_NEAR(t.phi12(), t.pi11(), 0.0);
}

TEST(BernoulliJoint, RejectsNonStationaryPhi) {
    EXPECT_THROW(bernoulli_joint(1.0, 0.2, CopulaSpec::product()), std::domain_error);
    EXPECT_THROW(bernoulli_joint(0.2, -0.1, CopulaSpec::product()), std::domain_error);
}

TEST(BernoulliJoint, MarginsRecoveredProperty) {
    Rng rng(7);
    for (int k = 0; k < 500; ++k) {
        const double phi1 = 0.999 * rng.uniform();
        const double phi2 = 0.999 * rng.uniform();
        const CopulaSpec specs[] = {CopulaSpec::gumbel(1.0 + 10 * rng.uniform()),
                                    CopulaSpec::frank(60 * rng.uniform() - 30)};
        for (const auto& s : specs) {
            const auto t = bernoulli_joint(phi1, phi2, s);
            ASSERT_NEAR(t.pi10() + t.pi11(), phi1, 1e-12);
            ASSERT_NEAR(t.pi01() + t.pi11(), phi2, 1e-12);
        }
    }
}

TEST(InnovationJoint, ProductIsOuterProduct) {
    const CategoricalMarginal m({0.5, 0.5});
    const auto t = innovation_joint(m, m, CopulaSpec::product());
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(t(i, j), 0.25);
}

TEST(InnovationJoint, GumbelStudyDesignTable) {
    const CategoricalMarginal m1({0.15, 0.6, 0.25}), m2({0.2, 0.3, 0.5});
    const auto t = innovation_joint(m1, m2, CopulaSpec::gumbel(2.0));
    const auto rs = t.cells().row_sums();
    const auto cs = t.cells().col_sums();
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rs[i], m1[i], 1e-12);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(cs[j], m2[j], 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(t(i, j), kGumbelCells[i][j], 1e-11);
}

TEST(InnovationJoint, FrankIndependenceLimit) {
    const CategoricalMarginal m({0.3, 0.7});
    const auto t = innovation_joint(m, m, CopulaSpec::frank(1e-12));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(t(i, j), m[i] * m[j], 1e-6);
}

TEST(InnovationJoint, ProductEqualsOuterProductProperty) {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const CategoricalMarginal m1(random_simplex(rng, 2 + k % 5)), m2(random_simplex(rng, 2 + k % 3));
        const auto t = innovation_joint(m1, m2, CopulaSpec::product());
        for (std::size_t i = 0; i < m1.size(); ++i)
            for (std::size_t j = 0; j < m2.size(); ++j) ASSERT_NEAR(t(i, j), m1[i] * m2[j], 1e-12);
    }
}

TEST(InnovationJoint, ExhaustiveMassProperty) {
    Rng rng(12);
    for (int k = 0; k < 1000; ++k) {
        const CategoricalMarginal m1(random_simplex(rng, 2 + k % 4)), m2(random_simplex(rng, 2 + (k / 4) % 4));
        const CopulaSpec s = k % 2 ? CopulaSpec::gumbel(1.0 + 20 * rng.uniform())
                                   : CopulaSpec::frank(80 * rng.uniform() - 40);
        const auto t = innovation_joint(m1, m2, s);
        ASSERT_NEAR(t.cells().sum(), 1.0, 1e-10);
    }
}

TEST(InnovationJoint, FrankConcordanceDominatesProduct) {
    Rng rng(13);
    for (int k = 0; k < 50; ++k) {
        const CategoricalMarginal m1(random_simplex(rng, 3)), m2(random_simplex(rng, 3));
        const double base = table_concordance(innovation_joint(m1, m2, CopulaSpec::product()).cells());
        const double dep = table_concordance(innovation_joint(m1, m2, CopulaSpec::frank(0.1 + 20 * rng.uniform())).cells());
        EXPECT_GE(dep, base - 1e-12);
    }
}

TEST(SampleJoint, DegenerateTable) {
    Matrix cells(2, 3);
    cells(1, 2) = 1.0;
    JointSampler sampler(cells);
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(sampler.sample(rng), (CellIndex{1, 2}));
}

TEST(SampleJoint, FrequenciesMatchTable) {
    const CategoricalMarginal m1({0.15, 0.6, 0.25}), m2({0.2, 0.3, 0.5});
    const auto t = innovation_joint(m1, m2, CopulaSpec::gumbel(2.0));
    const JointSampler sampler(t.cells());
    Rng rng(2024);
    const int n = 1000000;
    Matrix freq(3, 3);
    for (int k = 0; k < n; ++k) {
        const auto c = sampler.sample(rng);
        freq(c.row, c.col) += 1.0 / n;
    }
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double p = t(i, j);
            EXPECT_NEAR(freq(i, j), p, 3.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
        }
}

TEST(SampleJoint, DeterministicUnderSeed) {
    const auto t = bernoulli_joint(0.4, 0.25, CopulaSpec::gumbel(2.0));
    Rng a(99), b(99);
    for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_joint(t, a), sample_joint(t, b));
}
