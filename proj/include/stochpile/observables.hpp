#pragma once

// Global observables of a stabilised pile: radius number, avalanche number,
// the normalised quotients whose large-N limits define the radius and
// avalanche constants, and full/non-full toppling statistics.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stochpile/core.hpp"
#include "stochpile/gamma.hpp"

namespace stochpile {

// Max L2 distance from the origin over sites left with positive grains.
inline double radius_number(const Configuration& final) {
    double r2 = 0.0;
    final.grains().for_each_nonzero([&](std::int32_t x, std::int32_t y, std::uint64_t) {
        r2 = std::max(r2, static_cast<double>(x) * x + static_cast<double>(y) * y);
    });
    return std::sqrt(r2);
}

inline std::uint64_t avalanche_number(const LatticeField<std::uint64_t>& odometer) {
    std::uint64_t sum = 0;
    bool overflow = false;
    odometer.for_each_nonzero([&](std::int32_t, std::int32_t, std::uint64_t n) {
        if (__builtin_add_overflow(sum, n, &sum)) overflow = true;
    });
    if (overflow) throw std::overflow_error("avalanche number exceeds 64 bits");
    return sum;
}

struct QuotientPair {
    double radius_quotient = 0.0;     // R / sqrt(N / M)
    double avalanche_quotient = 0.0;  // Av * M * E(gamma) / N^2
};

inline QuotientPair quotients(const StabilizationResult& result, std::uint64_t n,
                              std::uint32_t m, const GammaSpec& spec) {
    if (n == 0 || m == 0) throw std::domain_error("N and M must be >= 1");
    QuotientPair q;
    q.radius_quotient = result.radius / std::sqrt(static_cast<double>(n) / m);
    q.avalanche_quotient = static_cast<double>(result.avalanche) * m * expected_value(spec) /
                           (static_cast<double>(n) * static_cast<double>(n));
    return q;
}

// P(gamma = M) for the conditioned binomial: p^M / (1 - (1-p)^M).
inline double full_toppling_probability(std::uint32_t m, double p) {
    if (!(p > 0.0) || p > 1.0) throw std::domain_error("p must be in (0, 1]");
    if (m == 0) throw std::domain_error("M must be >= 1");
    if (m == 1 || p == 1.0) return 1.0;
    const long double lp = static_cast<long double>(p);
    const long double numer = std::exp(static_cast<long double>(m) * std::log(lp));
    const long double denom = -std::expm1(static_cast<long double>(m) * std::log1p(-lp));
    return static_cast<double>(numer / denom);
}

struct TopplingStats {
    double p_ft_theoretical = 0.0;      // pmf at k = M
    std::uint64_t nft_total = 0;        // topplings with multiplicity < M
    double nft_per_toppled_site = 0.0;  // nft_total / #{v : N(v) > 0}
};

inline TopplingStats toppling_stats(const StabilizationResult& result, const GammaSpec& spec) {
    TopplingStats stats;
    stats.p_ft_theoretical = pmf(spec, spec.m());
    stats.nft_total = result.nonfull_topplings;
    std::uint64_t toppled_sites = 0;
    result.odometer.for_each_nonzero(
        [&](std::int32_t, std::int32_t, std::uint64_t) { ++toppled_sites; });
    stats.nft_per_toppled_site =
        toppled_sites == 0 ? 0.0
                           : static_cast<double>(stats.nft_total) / static_cast<double>(toppled_sites);
    return stats;
}

}  // namespace stochpile
