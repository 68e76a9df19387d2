#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ordcausal {

namespace detail {

// SplitMix64 finalizer; used only to derive stream ids, never as the engine.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic randomness contract: one root seed, per-task derived
/// streams.  Identical (root, stream) gives bit-identical draw sequences,
/// so parallel and serial schedules produce the same results.
struct SeedSpec {
    std::uint64_t root = 0;
    std::uint64_t stream = 0;

    /// Derive the i-th child stream (per permutation, per table, per chain...).
    [[nodiscard]] SeedSpec child(std::uint64_t i) const {
        return SeedSpec{root, detail::mix64(stream ^ detail::mix64(i + 0x51ED2701A9ULL))};
    }

    [[nodiscard]] std::mt19937_64 engine() const {
        std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        return std::mt19937_64(seq);
    }
};

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1), 53-bit resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform draw strictly inside (0, 1); safe as a quantile-function argument.
inline double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    // Lemire-style rejection; unbiased.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z * M_SQRT1_2);
}

inline double norm_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Standard normal quantile, Wichura's AS 241 (PPND16), ~1e-15 accurate.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545703 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

/// Standard normal draw via the inverse CDF (one engine word per variate,
/// keeps stream accounting trivial and cross-compiler reproducible).
inline double normal(Rng& rng) {
    return norm_quantile(uniform_open(rng));
}

/// In-place Fisher-Yates shuffle with the shared engine.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Run fn(i) for i in [0, n) across threads.  Items must be independent;
/// determinism comes from per-item derived seeds, not from scheduling.
/// Nested calls degrade to serial execution in the calling worker.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t n_threads = hw == 0 ? 1 : hw;
    if (n_threads <= 1 || n < 2 || detail::in_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (n_threads > n) n_threads = n;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    std::exception_ptr err;
    std::mutex err_mu;
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            detail::in_parallel_region = true;
            try {
                for (std::size_t i = t; i < n; i += n_threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

} // namespace ordcausal
