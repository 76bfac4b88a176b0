#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bdar/joint_discrete.hpp"
#include "bdar/matrix.hpp"
#include "bdar/model.hpp"
#include "bdar/random.hpp"

namespace bdar {

/// Largest joint state space (d1 * d2) handled by the dense forecast routines.
inline constexpr std::size_t kMaxForecastStates = 10000;

/**
 * @brief Monte-Carlo h-step forecast summary.
 *
 * Row h-1 of marginal1 / marginal2 holds the relative state frequencies at
 * step h; joint[h-1] is the d1 x d2 frequency table. Modes break ties towards
 * the lowest state index. The joint mode and the two marginal modes are
 * computed independently and need not agree.
 */
struct ForecastResult {
    std::size_t horizon = 0;
    Matrix marginal1;
    Matrix marginal2;
    std::vector<Matrix> joint;
    std::vector<int> modal1;
    std::vector<int> modal2;
    std::vector<std::pair<int, int>> modal_joint;
    std::size_t n_sims = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_forecast_inputs(const Bdar1Params& params, std::pair<int, int> last_state, std::size_t horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast: horizon must be >= 1");
    check_state(last_state.first, params.d1(), "last series-1");
    check_state(last_state.second, params.d2(), "last series-2");
    if (params.d1() * params.d2() > kMaxForecastStates)
        throw std::invalid_argument("forecast: joint state space too large for dense transition tables");
}

template <typename Counts>
std::size_t argmax_lowest(const Counts& c, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (c[k] > c[best]) best = k;
    return best;
}

}  // namespace detail

/**
 * @brief Exact h-step joint pmfs by pushing the point mass at `last_state`
 * through the transition matrix built from joint_conditional_pmf.
 *
 * Element h-1 of the result is P(Z_{t+h} = (i,j) | Z_t = last_state).
 */
inline std::vector<Matrix> exact_forecast_pmf(const Bdar1Params& params, std::pair<int, int> last_state,
                                              std::size_t horizon) {
    detail::check_forecast_inputs(params, last_state, horizon);
    const std::size_t d1 = params.d1();
    const std::size_t d2 = params.d2();
    Matrix current(d1, d2);
    current(static_cast<std::size_t>(last_state.first - 1), static_cast<std::size_t>(last_state.second - 1)) = 1.0;
    std::vector<Matrix> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        Matrix next(d1, d2);
        for (std::size_t s = 0; s < d1; ++s) {
            for (std::size_t l = 0; l < d2; ++l) {
                const double w = current(s, l);
                if (w == 0.0) continue;
                const Matrix row = joint_conditional_pmf(params, static_cast<int>(s + 1), static_cast<int>(l + 1));
                for (std::size_t i = 0; i < d1; ++i)
                    for (std::size_t j = 0; j < d2; ++j) next(i, j) += w * row(i, j);
            }
        }
        current = next;
        out.push_back(std::move(next));
    }
    return out;
}

/**
 * @brief Monte-Carlo forecast from `last_state`.
 *
 * Each of the n_sims trajectories draws the pair (Z1, Z2) jointly from
 * joint_conditional_pmf at every step, using its own substream of `seed`.
 * Counts are integers, so the result is the same for any `workers`.
 */
inline ForecastResult forecast(const Bdar1Params& params, std::pair<int, int> last_state, std::size_t horizon,
                               std::size_t n_sims, std::uint64_t seed, unsigned workers = 1) {
    detail::check_forecast_inputs(params, last_state, horizon);
    if (n_sims < 1) throw std::invalid_argument("forecast: n_sims must be >= 1");
    const std::size_t d1 = params.d1();
    const std::size_t d2 = params.d2();
    const std::size_t n_states = d1 * d2;

    std::vector<JointSampler> samplers;
    samplers.reserve(n_states);
    for (std::size_t s = 0; s < d1; ++s)
        for (std::size_t l = 0; l < d2; ++l)
            samplers.emplace_back(joint_conditional_pmf(params, static_cast<int>(s + 1), static_cast<int>(l + 1)));

    const std::size_t start = static_cast<std::size_t>(last_state.first - 1) * d2 +
                              static_cast<std::size_t>(last_state.second - 1);
    using Counts = std::vector<std::uint64_t>;
    // Blocks of trajectories; each block tallies its own counts.
    const std::size_t n_blocks = std::min<std::size_t>(n_sims, std::max(1u, workers) * 4u);
    const std::size_t block = (n_sims + n_blocks - 1) / n_blocks;
    const auto partial = parallel_map<Counts>(n_blocks, workers, [&](std::size_t b) {
        Counts c(horizon * n_states, 0);
        const std::size_t lo = b * block;
        const std::size_t hi = std::min(n_sims, lo + block);
        for (std::size_t traj = lo; traj < hi; ++traj) {
            Rng rng = substream(seed, "forecast", traj);
            std::size_t state = start;
            for (std::size_t h = 0; h < horizon; ++h) {
                state = samplers[state].sample_flat(rng);
                ++c[h * n_states + state];
            }
        }
        return c;
    });
    Counts total(horizon * n_states, 0);
    for (const auto& c : partial)
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += c[k];

    ForecastResult res;
    res.horizon = horizon;
    res.n_sims = n_sims;
    res.seed = seed;
    res.marginal1 = Matrix(horizon, d1);
    res.marginal2 = Matrix(horizon, d2);
    const double n = static_cast<double>(n_sims);
    for (std::size_t h = 0; h < horizon; ++h) {
        Matrix joint(d1, d2);
        std::vector<std::uint64_t> c1(d1, 0), c2(d2, 0);
        const std::uint64_t* row = &total[h * n_states];
        for (std::size_t i = 0; i < d1; ++i) {
            for (std::size_t j = 0; j < d2; ++j) {
                const std::uint64_t c = row[i * d2 + j];
                joint(i, j) = static_cast<double>(c) / n;
                c1[i] += c;
                c2[j] += c;
            }
        }
        for (std::size_t i = 0; i < d1; ++i) res.marginal1(h, i) = static_cast<double>(c1[i]) / n;
        for (std::size_t j = 0; j < d2; ++j) res.marginal2(h, j) = static_cast<double>(c2[j]) / n;
        res.modal1.push_back(static_cast<int>(detail::argmax_lowest(c1, d1) + 1));
        res.modal2.push_back(static_cast<int>(detail::argmax_lowest(c2, d2) + 1));
        const std::size_t jm = detail::argmax_lowest(row, n_states);
        res.modal_joint.emplace_back(static_cast<int>(jm / d2 + 1), static_cast<int>(jm % d2 + 1));
        res.joint.push_back(std::move(joint));
    }
    return res;
}

}  // namespace bdar
