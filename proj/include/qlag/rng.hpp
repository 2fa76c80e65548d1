// rng.hpp: counter-based uniform draws and parallel categorical sampling.
//
// Every draw is a pure function of (seed, stream, index), so the way sample
// indices are split across worker threads cannot change any result.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "qlag/errors.hpp"

namespace qlag {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Uniform double in [0, 1) with 53 random bits.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    const std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL));
    const std::uint64_t bits = detail::splitmix64(key ^ detail::splitmix64(index));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Cumulative table over non-negative weights. Infinite weights (certainty
// cases) take all the mass, shared equally.
class Categorical {
public:
    explicit Categorical(const std::vector<double>& weights) {
        if (weights.empty()) throw ValidationError("Categorical: no categories");
        const bool certain = std::any_of(weights.begin(), weights.end(), [](double w) { return std::isinf(w); });
        cdf_.resize(weights.size());
        double total = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double w = weights[k];
            if (std::isnan(w) || w < 0.0) throw ValidationError("Categorical: weights must be >= 0");
            total += certain ? (std::isinf(w) ? 1.0 : 0.0) : w;
            cdf_[k] = total;
        }
        if (!(total > 0.0)) throw NumericalGuard("Categorical: all weights are zero");
        for (auto& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    std::size_t size() const noexcept { return cdf_.size(); }

    double probability(std::size_t k) const { return cdf_[k] - (k ? cdf_[k - 1] : 0.0); }

    std::size_t draw(double u) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

// Run `category(i)` for i in [0, n) split across `workers` threads and
// tally the returned categories (negative results are dropped). Counts are
// integers, so the total does not depend on the split. workers = 0 picks
// hardware_concurrency.
template <class F>
std::vector<std::uint64_t> parallel_tally(std::uint64_t n, std::size_t categories, unsigned workers, F category) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const std::uint64_t w = std::clamp<std::uint64_t>(workers, 1, std::max<std::uint64_t>(n, 1));
    std::vector<std::vector<std::uint64_t>> partial(w, std::vector<std::uint64_t>(categories, 0));
    auto job = [&](std::uint64_t part) {
        const std::uint64_t lo = n / w * part + std::min(part, n % w);
        const std::uint64_t hi = lo + n / w + (part < n % w ? 1 : 0);
        auto& counts = partial[part];
        for (std::uint64_t i = lo; i < hi; ++i) {
            const long long k = category(i);
            if (k >= 0) ++counts[static_cast<std::size_t>(k)];
        }
    };
    if (w == 1) {
        job(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::uint64_t part = 0; part < w; ++part) pool.emplace_back(job, part);
        for (auto& t : pool) t.join();
    }
    std::vector<std::uint64_t> total(categories, 0);
    for (const auto& counts : partial)
        for (std::size_t k = 0; k < categories; ++k) total[k] += counts[k];
    return total;
}

// n categorical draws (indices 0..n-1 of `stream`), returned as per-category counts.
inline std::vector<std::uint64_t> sample_counts(const Categorical& dist, std::uint64_t n, std::uint64_t seed,
                                                std::uint64_t stream = 0, unsigned workers = 1) {
    return parallel_tally(n, dist.size(), workers, [&](std::uint64_t i) {
        return static_cast<long long>(dist.draw(counter_uniform(seed, stream, i)));
    });
}

} // namespace qlag
