#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace bdar {

/**
 * @brief Seeded random stream.
 *
 * Wraps std::mt19937_64 and produces uniforms from the top 53 bits, so draw
 * sequences are identical across standard libraries for a given seed.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return engine_(); }

    /// Standard normal via Box-Muller (one value per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Seed for the named substream `name`, item `index`, under a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    std::uint64_t s = detail::splitmix64(master);
    s = detail::splitmix64(s ^ detail::fnv1a(name));
    return detail::splitmix64(s ^ detail::splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng substream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return Rng(substream_seed(master, name, index));
}

/**
 * @brief Runs fn(i) for i in [0, n) on up to `workers` threads.
 *
 * Work is split into contiguous blocks and each result is stored at its own
 * index, so the output does not depend on the worker count.
 */
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, unsigned workers, const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> out(n);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t block = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(n, lo + block);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) out[i] = fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace bdar
