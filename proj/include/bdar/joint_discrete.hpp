#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdar/copula.hpp"
#include "bdar/matrix.hpp"
#include "bdar/random.hpp"

namespace bdar {

inline constexpr double kProbabilitySumTolerance = 1e-10;

/**
 * @brief Probability vector over an ordered state space s_1 < ... < s_d.
 *
 * Every probability lies in (0, 1] and they sum to 1 within 1e-10. The CDF
 * is accumulated left to right with the last value forced to exactly 1.
 */
class CategoricalMarginal {
public:
    CategoricalMarginal() = default;

    explicit CategoricalMarginal(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.size() < 2) throw std::invalid_argument("CategoricalMarginal needs at least 2 states");
        double total = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) {
            const double p = probs_[i];
            if (!(p > 0.0 && p <= 1.0))
                throw std::invalid_argument("CategoricalMarginal: probability of state " + std::to_string(i + 1) +
                                            " must lie in (0,1], got " + std::to_string(p));
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilitySumTolerance)
            throw std::invalid_argument("CategoricalMarginal: probabilities sum to " + std::to_string(total));
        cdf_.resize(probs_.size() + 1);
        cdf_[0] = 0.0;
        for (std::size_t i = 0; i < probs_.size(); ++i) cdf_[i + 1] = std::min(1.0, cdf_[i] + probs_[i]);
        cdf_.back() = 1.0;
    }

    static CategoricalMarginal uniform(std::size_t d) { return CategoricalMarginal(std::vector<double>(d, 1.0 / d)); }

    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }

    /// F(s_k) for k = 0..d, with F(s_0) = 0 and F(s_d) = 1.
    [[nodiscard]] double cdf(std::size_t k) const { return cdf_.at(k); }

    friend bool operator==(const CategoricalMarginal& a, const CategoricalMarginal& b) { return a.probs_ == b.probs_; }

private:
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

/**
 * @brief Joint pmf of the two Bernoulli selection mechanisms.
 *
 * pi(a1, a2) = P(alpha_1 = a1, alpha_2 = a2). The margins reproduce
 * phi1 = pi(1,0) + pi(1,1) and phi2 = pi(0,1) + pi(1,1); pi(1,1) is the
 * cross moment phi_12 = E(alpha_1 alpha_2).
 */
class MechanismTable {
public:
    MechanismTable() = default;

    static MechanismTable from_cells(double pi00, double pi01, double pi10, double pi11) {
        MechanismTable t;
        t.pi_ = {pi00, pi01, pi10, pi11};
        double total = 0.0;
        for (double p : t.pi_) {
            if (!(p >= 0.0) || p > 1.0) throw std::invalid_argument("MechanismTable: cell outside [0,1]");
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilitySumTolerance)
            throw std::invalid_argument("MechanismTable: cells sum to " + std::to_string(total));
        t.phi1_ = pi10 + pi11;
        t.phi2_ = pi01 + pi11;
        return t;
    }

    /// Single shared mechanism: alpha_1 = alpha_2 ~ Bernoulli(phi).
    static MechanismTable comonotone(double phi) { return from_cells(1.0 - phi, 0.0, 0.0, phi); }

    [[nodiscard]] double operator()(int a1, int a2) const { return pi_.at(static_cast<std::size_t>(2 * a1 + a2)); }
    [[nodiscard]] double pi00() const noexcept { return pi_[0]; }
    [[nodiscard]] double pi01() const noexcept { return pi_[1]; }
    [[nodiscard]] double pi10() const noexcept { return pi_[2]; }
    [[nodiscard]] double pi11() const noexcept { return pi_[3]; }
    [[nodiscard]] double phi1() const noexcept { return phi1_; }
    [[nodiscard]] double phi2() const noexcept { return phi2_; }
    [[nodiscard]] double phi12() const noexcept { return pi_[3]; }

    [[nodiscard]] Matrix as_matrix() const {
        Matrix m(2, 2);
        m(0, 0) = pi_[0];
        m(0, 1) = pi_[1];
        m(1, 0) = pi_[2];
        m(1, 1) = pi_[3];
        return m;
    }

private:
    std::array<double, 4> pi_{1.0, 0.0, 0.0, 0.0};
    double phi1_ = 0.0;
    double phi2_ = 0.0;
};

/// Joint innovation pmf p_eps(i, j) (0-based cells) built from two marginals.
class InnovationTable {
public:
    InnovationTable() = default;

    InnovationTable(Matrix cells, CategoricalMarginal m1, CategoricalMarginal m2)
        : p_(std::move(cells)), m1_(std::move(m1)), m2_(std::move(m2)) {
        if (p_.rows() != m1_.size() || p_.cols() != m2_.size())
            throw std::invalid_argument("InnovationTable: shape does not match marginals");
        for (double x : p_.data())
            if (!(x >= 0.0)) throw std::invalid_argument("InnovationTable: negative cell");
        if (std::abs(p_.sum() - 1.0) > kProbabilitySumTolerance)
            throw std::invalid_argument("InnovationTable: cells do not sum to 1");
        const auto rs = p_.row_sums();
        const auto cs = p_.col_sums();
        for (std::size_t i = 0; i < rs.size(); ++i)
            if (std::abs(rs[i] - m1_[i]) > kProbabilitySumTolerance)
                throw std::invalid_argument("InnovationTable: row sums differ from first marginal");
        for (std::size_t j = 0; j < cs.size(); ++j)
            if (std::abs(cs[j] - m2_[j]) > kProbabilitySumTolerance)
                throw std::invalid_argument("InnovationTable: column sums differ from second marginal");
    }

    double operator()(std::size_t i, std::size_t j) const { return p_(i, j); }
    [[nodiscard]] const Matrix& cells() const noexcept { return p_; }
    [[nodiscard]] const CategoricalMarginal& marginal1() const noexcept { return m1_; }
    [[nodiscard]] const CategoricalMarginal& marginal2() const noexcept { return m2_; }
    [[nodiscard]] std::size_t rows() const noexcept { return p_.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return p_.cols(); }

private:
    Matrix p_;
    CategoricalMarginal m1_;
    CategoricalMarginal m2_;
};

/**
 * @brief 2x2 Bernoulli mechanism table from a copula.
 *
 * Bernoulli(phi) has F(0) = 1 - phi and F(1) = 1, so pi00 = C(1-phi1, 1-phi2)
 * and the other cells are rectangle masses.
 */
inline MechanismTable bernoulli_joint(double phi1, double phi2, const CopulaSpec& spec,
                                      ClampDiagnostics* diag = nullptr) {
    if (!(phi1 >= 0.0 && phi1 < 1.0) || !(phi2 >= 0.0 && phi2 < 1.0))
        throw std::domain_error("bernoulli_joint: phi must lie in [0,1)");
    const double f1 = 1.0 - phi1;
    const double f2 = 1.0 - phi2;
    const double pi00 = rectangle_mass(spec, 0.0, f1, 0.0, f2, diag);
    const double pi01 = rectangle_mass(spec, 0.0, f1, f2, 1.0, diag);
    const double pi10 = rectangle_mass(spec, f1, 1.0, 0.0, f2, diag);
    const double pi11 = rectangle_mass(spec, f1, 1.0, f2, 1.0, diag);
    return MechanismTable::from_cells(pi00, pi01, pi10, pi11);
}

/// p(i,j) = mass of (F1(i-1), F1(i)] x (F2(j-1), F2(j)] under the copula.
inline InnovationTable innovation_joint(const CategoricalMarginal& m1, const CategoricalMarginal& m2,
                                        const CopulaSpec& spec, ClampDiagnostics* diag = nullptr) {
    const std::size_t d1 = m1.size();
    const std::size_t d2 = m2.size();
    Matrix cells(d1, d2);
    if (spec.is_independence()) {
        for (std::size_t i = 0; i < d1; ++i)
            for (std::size_t j = 0; j < d2; ++j) cells(i, j) = m1[i] * m2[j];
        return InnovationTable(std::move(cells), m1, m2);
    }
    // C on the breakpoint grid once, then differences.
    Matrix grid(d1 + 1, d2 + 1);
    for (std::size_t i = 0; i <= d1; ++i)
        for (std::size_t j = 0; j <= d2; ++j) grid(i, j) = copula_cdf(spec, {m1.cdf(i), m2.cdf(j)});
    for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = 0; j < d2; ++j) {
            const double mass = grid(i + 1, j + 1) - grid(i, j + 1) - grid(i + 1, j) + grid(i, j);
            if (mass < 0.0) {
                if (diag) diag->record(mass);
                cells(i, j) = 0.0;
            } else {
                cells(i, j) = mass;
            }
        }
    }
    return InnovationTable(std::move(cells), m1, m2);
}

/// Cell of a joint table (0-based row and column).
struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/**
 * @brief Inverse-CDF sampler over a row-major flattened table.
 *
 * The CDF is built once; each draw consumes one uniform from the stream.
 */
class JointSampler {
public:
    explicit JointSampler(const Matrix& table) : cols_(table.cols()) {
        if (table.size() == 0) throw std::invalid_argument("JointSampler: empty table");
        cdf_.resize(table.size());
        double acc = 0.0;
        std::size_t k = 0;
        for (double x : table.data()) {
            if (!(x >= 0.0)) throw std::invalid_argument("JointSampler: negative cell");
            acc += x;
            cdf_[k++] = acc;
        }
        if (std::abs(acc - 1.0) > kProbabilitySumTolerance)
            throw std::invalid_argument("JointSampler: table does not sum to 1");
        for (auto& c : cdf_) c /= acc;
        // Pin the tail so u close to 1 never runs past the last positive cell.
        std::size_t last = cdf_.size() - 1;
        while (last > 0 && table.data()[last] == 0.0) --last;
        for (std::size_t i = last; i < cdf_.size(); ++i) cdf_[i] = 1.0;
    }

    [[nodiscard]] std::size_t sample_flat(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
    }

    [[nodiscard]] CellIndex sample(Rng& rng) const {
        const std::size_t k = sample_flat(rng);
        return {k / cols_, k % cols_};
    }

private:
    std::size_t cols_;
    std::vector<double> cdf_;
};

inline CellIndex sample_joint(const InnovationTable& table, Rng& rng) { return JointSampler(table.cells()).sample(rng); }

/// Draws (alpha_1, alpha_2) as (row, col) in {0,1}^2.
inline CellIndex sample_joint(const MechanismTable& table, Rng& rng) {
    return JointSampler(table.as_matrix()).sample(rng);
}

}  // namespace bdar
