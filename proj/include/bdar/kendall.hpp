#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bdar {

namespace detail {

// Merge sort of `v` counting pairs i < j with v[i] > v[j] (ties are not inversions).
inline std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                     std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<std::int64_t>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

template <typename Range, typename Eq>
std::int64_t tied_pairs(const Range& sorted, Eq eq) {
    std::int64_t total = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && eq(sorted[i - 1], sorted[i])) {
            ++run;
        } else {
            total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

}  // namespace detail

/**
 * @brief Kendall's tau-b with tie correction, O(n log n) (Knight's method).
 *
 * tau_b = (C - D) / sqrt((n0 - n1)(n0 - n2)) where n1, n2 count pairs tied
 * in x and in y. Throws if either input is constant.
 */
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: inputs differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("kendall_tau: need at least 2 observations");

    std::vector<std::pair<double, double>> xy(n);
    for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], y[i]};
    std::sort(xy.begin(), xy.end());

    const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
    const std::int64_t n1 = detail::tied_pairs(xy, [](const auto& a, const auto& b) { return a.first == b.first; });
    const std::int64_t n3 = detail::tied_pairs(xy, [](const auto& a, const auto& b) { return a == b; });

    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = xy[i].second;
    const std::int64_t swaps = detail::count_inversions(ys, buf, 0, n);
    const std::int64_t n2 = detail::tied_pairs(ys, [](double a, double b) { return a == b; });

    if (n1 == n0 || n2 == n0) throw std::domain_error("kendall_tau: undefined for a constant series");
    const double s = static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps);
    const double tau = s / std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
    return std::clamp(tau, -1.0, 1.0);
}

inline double kendall_tau(std::span<const int> x, std::span<const int> y) {
    std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
    return kendall_tau(std::span<const double>(a), std::span<const double>(b));
}

/// Serial association: tau_b between (z_t) and (z_{t-lag}) over t = lag..n-1.
inline double kendall_tau_lagged(std::span<const int> z, std::size_t lag = 1) {
    if (z.size() < lag + 2) throw std::invalid_argument("kendall_tau_lagged: series too short for lag");
    return kendall_tau(z.subspan(lag), z.first(z.size() - lag));
}

}  // namespace bdar
