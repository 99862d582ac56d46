#pragma once

// The sandpile itself: grain configurations on Z^2, the toppling operator,
// and the stabilisation engine. A site holding at least 4M grains is
// unstable; toppling it sends k grains to each of its four neighbours, where
// k is the sampled multiplicity of that toppling. The i-th toppling at site v
// always consumes the word indexed_word(seed, v, i), so the stabilised state,
// odometer and per-toppling statistics are independent of toppling order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stochpile/gamma.hpp"
#include "stochpile/lattice.hpp"
#include "stochpile/prf.hpp"

namespace stochpile {

struct SiteCoord {
    std::int32_t x = 0;
    std::int32_t y = 0;
};

constexpr bool operator==(SiteCoord a, SiteCoord b) noexcept {
    return a.x == b.x && a.y == b.y;
}

enum class OrderPolicy { fifo, lifo, site_exhaust };

inline std::string to_string(OrderPolicy p) {
    switch (p) {
        case OrderPolicy::fifo: return "fifo";
        case OrderPolicy::lifo: return "lifo";
        case OrderPolicy::site_exhaust: return "site-exhaust";
    }
    throw std::logic_error("unreachable");
}

inline OrderPolicy parse_order_policy(std::string_view s) {
    if (s == "fifo") return OrderPolicy::fifo;
    if (s == "lifo") return OrderPolicy::lifo;
    if (s == "site-exhaust") return OrderPolicy::site_exhaust;
    throw std::domain_error("unknown order policy: '" + std::string(s) +
                            "' (expected fifo | lifo | site-exhaust)");
}

class Configuration {
public:
    explicit Configuration(std::uint32_t m, std::int32_t initial_half = 0)
        : m_(m), grains_(initial_half) {
        if (m == 0) throw std::domain_error("M must be >= 1");
    }
    Configuration(std::uint32_t m, LatticeField<std::uint64_t> grains)
        : m_(m), grains_(std::move(grains)) {
        if (m == 0) throw std::domain_error("M must be >= 1");
    }

    std::uint32_t m() const noexcept { return m_; }
    std::uint64_t threshold() const noexcept { return 4ull * m_; }

    std::uint64_t at(std::int32_t x, std::int32_t y) const noexcept { return grains_.at(x, y); }
    std::uint64_t at(SiteCoord v) const noexcept { return grains_.at(v.x, v.y); }

    void set(std::int32_t x, std::int32_t y, std::uint64_t count) {
        grains_.ensure_radius(std::max(std::abs(x), std::abs(y)));
        grains_.ref(x, y) = count;
    }

    bool stable() const {
        const std::uint64_t th = threshold();
        bool ok = true;
        grains_.for_each_nonzero([&](std::int32_t, std::int32_t, std::uint64_t g) {
            if (g >= th) ok = false;
        });
        return ok;
    }

    std::uint64_t total_mass() const {
        std::uint64_t sum = 0;
        bool overflow = false;
        grains_.for_each_nonzero([&](std::int32_t, std::int32_t, std::uint64_t g) {
            if (__builtin_add_overflow(sum, g, &sum)) overflow = true;
        });
        if (overflow) throw std::overflow_error("total mass exceeds 64 bits");
        return sum;
    }

    const LatticeField<std::uint64_t>& grains() const noexcept { return grains_; }
    LatticeField<std::uint64_t>& grains() noexcept { return grains_; }

    friend bool operator==(const Configuration& a, const Configuration& b) {
        return a.m_ == b.m_ && a.grains_ == b.grains_;
    }

private:
    std::uint32_t m_;
    LatticeField<std::uint64_t> grains_;
};

// N grains at the origin, the rest of the lattice empty.
inline Configuration single_source(std::uint64_t n, std::uint32_t m) {
    if (n == 0) throw std::domain_error("N must be >= 1");
    Configuration c(m, 1);
    c.set(0, 0, n);
    return c;
}

inline bool is_stable(const Configuration& c) { return c.stable(); }

// One application of the toppling operator at v with multiplicity k.
inline Configuration topple_once(const Configuration& config, SiteCoord v, std::uint32_t k) {
    if (k < 1 || k > config.m()) throw std::domain_error("multiplicity k outside 1..M");
    if (config.at(v) < config.threshold())
        throw std::logic_error("topple_once: site is stable");
    Configuration out = config;
    auto& f = out.grains();
    f.ensure_radius(std::max(std::abs(v.x), std::abs(v.y)) + 1);
    f.ref(v.x, v.y) -= 4ull * k;
    f.ref(v.x + 1, v.y) += k;
    f.ref(v.x - 1, v.y) += k;
    f.ref(v.x, v.y + 1) += k;
    f.ref(v.x, v.y - 1) += k;
    return out;
}

struct StabilizationResult {
    Configuration final;
    LatticeField<std::uint64_t> odometer;  // N(v): topplings at v
    LatticeField<std::uint64_t> emitted;   // S(v): grains sent per neighbour by v
    double radius = 0.0;                   // max L2 norm over sites left positive
    double reach_radius = 0.0;             // max L2 norm over sites that received grains
    std::uint64_t avalanche = 0;
    std::uint64_t full_topplings = 0;      // multiplicity == M
    std::uint64_t nonfull_topplings = 0;   // multiplicity < M
};

constexpr std::uint64_t kDefaultTopplingCeiling = (1ull << 63) - 1;

inline StabilizationResult stabilize(std::uint64_t n, std::uint32_t m, const GammaSpec& spec,
                                     std::uint64_t seed,
                                     OrderPolicy policy = OrderPolicy::site_exhaust,
                                     std::uint64_t toppling_ceiling = kDefaultTopplingCeiling) {
    if (n == 0) throw std::domain_error("N must be >= 1");
    if (m == 0) throw std::domain_error("M must be >= 1");
    if (spec.m() != m) throw std::domain_error("distribution M does not match model M");
    if (n > (1ull << 62)) throw std::domain_error("N exceeds supported range (2^62)");

    const SamplerTable table(spec);
    const std::uint64_t threshold = 4ull * m;
    const std::uint64_t prf_base = prf_init(seed);
    const std::uint32_t const_k =
        table.is_degenerate() ? table.degenerate_value() : 0;

    // Window sized for the expected final radius (constant < 0.4 * sqrt(N/M)
    // in practice; 1.0 leaves generous headroom). Rare escapes grow it.
    std::int32_t half =
        static_cast<std::int32_t>(std::ceil(std::sqrt(static_cast<double>(n) / m))) + 1;
    half = std::max(half, 2);

    LatticeField<std::uint64_t> grains(half), odom(half), sent(half);
    LatticeField<std::uint8_t> queued(half);
    grains.ref(0, 0) = n;

    std::uint64_t avalanche = 0, full = 0, nonfull = 0;

    auto grow_for = [&](std::int32_t need) {
        grains.ensure_radius(need);
        odom.ensure_radius(need);
        sent.ensure_radius(need);
        queued.ensure_radius(need);
        half = grains.half();
    };

    if (policy == OrderPolicy::site_exhaust) {
        std::vector<SiteCoord> work;
        if (n >= threshold) {
            work.push_back({0, 0});
            queued.ref(0, 0) = 1;
        }
        while (!work.empty()) {
            const SiteCoord v = work.back();
            work.pop_back();
            queued.ref(v.x, v.y) = 0;
            std::uint64_t g = grains.ref(v.x, v.y);
            if (g < threshold) continue;
            const std::int32_t need = std::max(std::abs(v.x), std::abs(v.y)) + 1;
            if (need > half) grow_for(need);

            std::uint64_t i = odom.ref(v.x, v.y);
            std::uint64_t topplings = 0;
            std::uint64_t per_neighbour = 0;  // total grains each neighbour receives
            if (const_k != 0) {
                const std::uint64_t dec = 4ull * const_k;
                topplings = (g - threshold) / dec + 1;
                per_neighbour = static_cast<std::uint64_t>(const_k) * topplings;
                g -= dec * topplings;
                i += topplings;
                (const_k == m ? full : nonfull) += topplings;
            } else {
                const std::uint64_t site_h = prf_absorb(
                    prf_absorb(prf_base, static_cast<std::uint64_t>(static_cast<std::int64_t>(v.x))),
                    static_cast<std::uint64_t>(static_cast<std::int64_t>(v.y)));
                do {
                    ++i;
                    ++topplings;
                    const std::uint32_t k = table.sample(prf_absorb(site_h, i));
                    g -= 4ull * k;
                    per_neighbour += k;
                    if (k == m) ++full; else ++nonfull;
                } while (g >= threshold);
            }
            avalanche += topplings;
            if (avalanche > toppling_ceiling)
                throw std::runtime_error("toppling ceiling exceeded");
            grains.ref(v.x, v.y) = g;
            odom.ref(v.x, v.y) = i;
            sent.ref(v.x, v.y) += per_neighbour;

            constexpr std::int32_t dx[4] = {1, -1, 0, 0};
            constexpr std::int32_t dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const std::int32_t nx = v.x + dx[d], ny = v.y + dy[d];
                std::uint64_t& ng = grains.ref(nx, ny);
                ng += per_neighbour;
                if (ng >= threshold) {
                    std::uint8_t& q = queued.ref(nx, ny);
                    if (!q) {
                        q = 1;
                        work.push_back({nx, ny});
                    }
                }
            }
        }
    } else {
        // One toppling per pop; FIFO takes the front, LIFO the back.
        std::deque<SiteCoord> work;
        if (n >= threshold) {
            work.push_back({0, 0});
            queued.ref(0, 0) = 1;
        }
        const bool fifo = policy == OrderPolicy::fifo;
        while (!work.empty()) {
            SiteCoord v;
            if (fifo) {
                v = work.front();
                work.pop_front();
            } else {
                v = work.back();
                work.pop_back();
            }
            queued.ref(v.x, v.y) = 0;
            std::uint64_t g = grains.ref(v.x, v.y);
            if (g < threshold) continue;
            const std::int32_t need = std::max(std::abs(v.x), std::abs(v.y)) + 1;
            if (need > half) grow_for(need);

            const std::uint64_t i = odom.ref(v.x, v.y) + 1;
            std::uint32_t k;
            if (const_k != 0) {
                k = const_k;
            } else {
                k = table.sample(indexed_word(seed, v.x, v.y, i));
            }
            ++avalanche;
            if (avalanche > toppling_ceiling)
                throw std::runtime_error("toppling ceiling exceeded");
            if (k == m) ++full; else ++nonfull;
            g -= 4ull * k;
            grains.ref(v.x, v.y) = g;
            odom.ref(v.x, v.y) = i;
            sent.ref(v.x, v.y) += k;

            constexpr std::int32_t dx[4] = {1, -1, 0, 0};
            constexpr std::int32_t dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const std::int32_t nx = v.x + dx[d], ny = v.y + dy[d];
                std::uint64_t& ng = grains.ref(nx, ny);
                ng += k;
                if (ng >= threshold) {
                    std::uint8_t& q = queued.ref(nx, ny);
                    if (!q) {
                        q = 1;
                        work.push_back({nx, ny});
                    }
                }
            }
            if (g >= threshold && !queued.ref(v.x, v.y)) {
                queued.ref(v.x, v.y) = 1;
                work.push_back(v);
            }
        }
    }

    StabilizationResult result{Configuration(m, std::move(grains)), std::move(odom),
                               std::move(sent)};
    result.avalanche = avalanche;
    result.full_topplings = full;
    result.nonfull_topplings = nonfull;

    double r2 = 0.0;
    result.final.grains().for_each_nonzero([&](std::int32_t x, std::int32_t y, std::uint64_t) {
        r2 = std::max(r2, static_cast<double>(x) * x + static_cast<double>(y) * y);
    });
    result.radius = std::sqrt(r2);

    double reach2 = 0.0;
    result.odometer.for_each_nonzero([&](std::int32_t x, std::int32_t y, std::uint64_t) {
        constexpr std::int32_t dx[4] = {1, -1, 0, 0};
        constexpr std::int32_t dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const double nx = x + dx[d], ny = y + dy[d];
            reach2 = std::max(reach2, nx * nx + ny * ny);
        }
    });
    result.reach_radius = std::sqrt(reach2);

    return result;
}

}  // namespace stochpile
