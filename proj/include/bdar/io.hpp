#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bdar/model.hpp"
#include "bdar/random.hpp"

namespace bdar::io {

/// Parsed CSV: one header row plus string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw std::invalid_argument("column '" + std::string(name) + "' not found");
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one line on commas; double quotes group a field and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool is_missing(std::string_view s) {
    std::string l(s);
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return l.empty() || l == "na" || l == "nan" || l == "null" || l == ".";
}

}  // namespace detail

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw std::invalid_argument("not a finite number: '" + std::string(s) + "'");
    return v;
}

inline int parse_int(std::string_view s) {
    int v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    return v;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

/// Fixed number of significant digits, for human-facing tables.
inline std::string format_sig(double x, int digits = 6) {
    if (std::isnan(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
    return buf;
}

/// Reads a comma-separated file whose first non-blank line is the header.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw std::invalid_argument(path + ": line " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw std::invalid_argument(path + ": empty file");
    return t;
}

/// Two aligned real-valued series with their time index.
struct RawSeries {
    std::vector<std::string> time;
    std::vector<double> y1;
    std::vector<double> y2;
    std::string name1;
    std::string name2;
    std::string time_name = "t";

    [[nodiscard]] std::size_t length() const noexcept { return y1.size(); }
};

/**
 * @brief Loads columns `col1` and `col2` from a CSV file.
 *
 * The time index comes from `time_col`, or from the first column when it is
 * empty. Missing cells (empty, NA, NaN, null, ".") are rejected with the
 * data row number (1 = first row after the header).
 */
inline RawSeries ingest(const std::string& path, const std::string& col1, const std::string& col2,
                        const std::string& time_col = "") {
    const CsvTable t = read_csv(path);
    const std::size_t c1 = t.column(col1);
    const std::size_t c2 = t.column(col2);
    const std::size_t ct = time_col.empty() ? 0 : t.column(time_col);
    RawSeries s;
    s.name1 = col1;
    s.name2 = col2;
    s.time_name = t.header[ct];
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        for (std::size_t c : {c1, c2}) {
            if (detail::is_missing(row[c]))
                throw std::invalid_argument(path + ": missing value in column '" + t.header[c] + "' at row " +
                                            std::to_string(r + 1));
        }
        try {
            s.y1.push_back(parse_double(row[c1]));
            s.y2.push_back(parse_double(row[c2]));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ": row " + std::to_string(r + 1) + ": " + e.what());
        }
        s.time.push_back(row[ct]);
    }
    if (s.length() < 2) throw std::invalid_argument(path + ": need at least 2 rows");
    return s;
}

/**
 * @brief Interval rule mapping real values to ordinal states 1..d.
 *
 * With right_closed, state k covers (b_k, b_{k+1}] and the first interval is
 * also closed on the left, [b_1, b_2]. Otherwise state k covers
 * [b_k, b_{k+1}) and the last interval is closed on the right.
 */
struct DiscretizationRule {
    std::vector<double> breakpoints;
    bool right_closed = true;

    DiscretizationRule() = default;
    explicit DiscretizationRule(std::vector<double> b, bool right = true)
        : breakpoints(std::move(b)), right_closed(right) {
        validate();
    }

    void validate() const {
        if (breakpoints.size() < 3) throw std::invalid_argument("discretization rule needs at least 3 breakpoints");
        for (std::size_t k = 0; k < breakpoints.size(); ++k) {
            if (!std::isfinite(breakpoints[k])) throw std::invalid_argument("discretization breakpoints must be finite");
            if (k > 0 && !(breakpoints[k] > breakpoints[k - 1]))
                throw std::invalid_argument("discretization breakpoints must be strictly ascending");
        }
    }

    [[nodiscard]] std::size_t n_states() const noexcept { return breakpoints.size() - 1; }

    [[nodiscard]] int state(double y) const {
        const double lo = breakpoints.front();
        const double hi = breakpoints.back();
        if (!(y >= lo && y <= hi)) return 0;
        const std::size_t d = n_states();
        if (right_closed) {
            // first k with y <= b_{k+1}
            const auto it = std::lower_bound(breakpoints.begin() + 1, breakpoints.end(), y);
            return static_cast<int>(it - breakpoints.begin());
        }
        const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end(), y);
        return static_cast<int>(std::min<std::ptrdiff_t>(it - breakpoints.begin(), static_cast<std::ptrdiff_t>(d)));
    }

    [[nodiscard]] std::vector<std::string> labels() const {
        std::vector<std::string> out;
        const std::size_t d = n_states();
        for (std::size_t k = 0; k < d; ++k) {
            const bool left_closed = right_closed ? k == 0 : true;
            const bool right_incl = right_closed ? true : k + 1 == d;
            out.push_back(std::string(left_closed ? "[" : "(") + format_sig(breakpoints[k]) + "," +
                          format_sig(breakpoints[k + 1]) + (right_incl ? "]" : ")"));
        }
        return out;
    }
};

/// Maps each value to its state; out-of-range values raise an error naming the 1-based index.
inline std::vector<int> discretize(std::span<const double> y, const DiscretizationRule& rule) {
    rule.validate();
    std::vector<int> z;
    z.reserve(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const int s = rule.state(y[t]);
        if (s == 0)
            throw std::out_of_range("value " + format_sig(y[t], 10) + " at index " + std::to_string(t + 1) +
                                    " lies outside [" + format_sig(rule.breakpoints.front()) + ", " +
                                    format_sig(rule.breakpoints.back()) + "]");
        z.push_back(s);
    }
    return z;
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// k-state rule from the pooled empirical quantiles of both series (min, 1/k, ..., max).
inline DiscretizationRule quantile_rule(std::span<const double> y1, std::span<const double> y2, std::size_t k) {
    if (k < 2) throw std::invalid_argument("quantile rule needs k >= 2");
    std::vector<double> pooled(y1.begin(), y1.end());
    pooled.insert(pooled.end(), y2.begin(), y2.end());
    if (pooled.size() < 2) throw std::invalid_argument("quantile rule needs data");
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> b;
    for (std::size_t q = 0; q <= k; ++q) b.push_back(quantile_sorted(pooled, static_cast<double>(q) / static_cast<double>(k)));
    for (std::size_t q = 1; q < b.size(); ++q)
        if (!(b[q] > b[q - 1]))
            throw std::invalid_argument("pooled quantiles are tied; use fewer states or explicit breakpoints");
    return DiscretizationRule(std::move(b), true);
}

/**
 * @brief Parses "b1,b2,...,bm" or "quantiles:k".
 *
 * The quantile form needs the data, so it is resolved against `y1` / `y2`.
 */
inline DiscretizationRule parse_rule(const std::string& text, std::span<const double> y1 = {},
                                     std::span<const double> y2 = {}) {
    const std::string t = detail::trim(text);
    constexpr std::string_view prefix = "quantiles:";
    if (t.rfind(prefix, 0) == 0) {
        const int k = parse_int(detail::trim(std::string_view(t).substr(prefix.size())));
        if (k < 2) throw std::invalid_argument("quantiles:k needs k >= 2");
        return quantile_rule(y1, y2, static_cast<std::size_t>(k));
    }
    std::vector<double> b;
    for (const auto& f : detail::split_csv_line(t)) b.push_back(parse_double(f));
    return DiscretizationRule(std::move(b), true);
}

/// Draws a raw value uniformly inside the interval of `state` (used to emit synthetic raw data).
inline double sample_within(const DiscretizationRule& rule, int state, Rng& rng) {
    check_state(state, rule.n_states(), "discretization");
    const double lo = rule.breakpoints[static_cast<std::size_t>(state - 1)];
    const double hi = rule.breakpoints[static_cast<std::size_t>(state)];
    // Open on both ends so the value is inside the interval under either closure.
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    return lo + u * (hi - lo);
}

/// Quarterly labels "YYYYQn" starting from e.g. "1998Q1".
inline std::vector<std::string> quarter_labels(const std::string& start, std::size_t n) {
    if (start.size() != 6 || (start[4] != 'Q' && start[4] != 'q'))
        throw std::invalid_argument("quarter label must look like 1998Q1");
    int year = parse_int(std::string_view(start).substr(0, 4));
    int q = parse_int(std::string_view(start).substr(5, 1));
    if (q < 1 || q > 4) throw std::invalid_argument("quarter must be 1..4");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(std::to_string(year) + "Q" + std::to_string(q));
        if (++q > 4) {
            q = 1;
            ++year;
        }
    }
    return out;
}

inline std::vector<std::string> index_labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 1; i <= n; ++i) out.push_back(std::to_string(i));
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// CSV with columns <time_name>, <name1>, <name2>.
inline std::string raw_csv(const RawSeries& s) {
    std::ostringstream out;
    out << s.time_name << ',' << s.name1 << ',' << s.name2 << '\n';
    for (std::size_t t = 0; t < s.length(); ++t)
        out << s.time[t] << ',' << format_double(s.y1[t]) << ',' << format_double(s.y2[t]) << '\n';
    return out.str();
}

/// CSV with columns t, z1, z2; `time` defaults to 1..T.
inline std::string ordinal_csv(const BivariateOrdinalSeries& s, const std::vector<std::string>& time = {}) {
    if (!time.empty() && time.size() != s.length()) throw std::invalid_argument("ordinal_csv: time index length mismatch");
    std::ostringstream out;
    out << "t,z1,z2\n";
    for (std::size_t t = 0; t < s.length(); ++t)
        out << (time.empty() ? std::to_string(t + 1) : time[t]) << ',' << s.z1[t] << ',' << s.z2[t] << '\n';
    return out.str();
}

/**
 * @brief Reads integer states from columns `col1` / `col2`.
 *
 * State counts default to the largest observed state of each series.
 */
inline BivariateOrdinalSeries read_ordinal_csv(const std::string& path, const std::string& col1 = "z1",
                                               const std::string& col2 = "z2", std::size_t d1 = 0,
                                               std::size_t d2 = 0) {
    const CsvTable t = read_csv(path);
    const std::size_t c1 = t.column(col1);
    const std::size_t c2 = t.column(col2);
    std::vector<int> a, b;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c : {c1, c2})
            if (detail::is_missing(t.rows[r][c]))
                throw std::invalid_argument(path + ": missing value in column '" + t.header[c] + "' at row " +
                                            std::to_string(r + 1));
        try {
            a.push_back(parse_int(t.rows[r][c1]));
            b.push_back(parse_int(t.rows[r][c2]));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ": row " + std::to_string(r + 1) + ": " + e.what());
        }
    }
    if (a.empty()) throw std::invalid_argument(path + ": no data rows");
    if (d1 == 0) d1 = static_cast<std::size_t>(std::max(1, *std::max_element(a.begin(), a.end())));
    if (d2 == 0) d2 = static_cast<std::size_t>(std::max(1, *std::max_element(b.begin(), b.end())));
    return BivariateOrdinalSeries(std::move(a), std::move(b), d1, d2);
}

}  // namespace bdar::io
