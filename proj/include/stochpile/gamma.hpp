#pragma once

// The random toppling-multiplicity distributions on {1,...,M}:
//   constant:k   point mass at k (k = M is the deterministic model, k = 1 always-one)
//   uniform      P(k) = 1/M
//   binomial:p   Binomial(M, p) conditioned to be non-zero, p in (0, 1]
//   loglaw       P(k) = log_{M+1}(k+1) - log_{M+1}(k)
//   powerlaw:s   P(k) = k^-s / Z(s, M),  Z(s, M) = sum_{j=1..M} j^-s
// plus an O(1) alias sampler that maps one uniform 64-bit word to a draw.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stochpile {

enum class GammaKind { constant, uniform, binomial, log_law, power_law };

class GammaSpec {
public:
    static GammaSpec constant(std::uint32_t k, std::uint32_t m) {
        GammaSpec g(GammaKind::constant, m);
        if (k < 1 || k > m) throw std::domain_error("constant value must be in 1..M");
        g.k_ = k;
        return g;
    }
    static GammaSpec uniform(std::uint32_t m) { return GammaSpec(GammaKind::uniform, m); }
    static GammaSpec binomial(double p, std::uint32_t m) {
        GammaSpec g(GammaKind::binomial, m);
        if (!(p > 0.0) || p > 1.0) throw std::domain_error("binomial p must be in (0, 1]");
        g.p_ = p;
        return g;
    }
    static GammaSpec log_law(std::uint32_t m) { return GammaSpec(GammaKind::log_law, m); }
    static GammaSpec power_law(double s, std::uint32_t m) {
        GammaSpec g(GammaKind::power_law, m);
        if (!(s > 0.0)) throw std::domain_error("powerlaw s must be > 0");
        g.s_ = s;
        return g;
    }

    // Text grammar: constant:k | uniform | binomial:p | loglaw | powerlaw:s
    static GammaSpec parse(std::string_view text, std::uint32_t m);

    GammaKind kind() const noexcept { return kind_; }
    std::uint32_t m() const noexcept { return m_; }
    std::uint32_t constant_value() const { return k_; }
    double p() const { return p_; }
    double s() const { return s_; }

    // True when every draw is the same value (no randomness consumed).
    bool is_degenerate() const noexcept {
        return m_ == 1 || kind_ == GammaKind::constant ||
               (kind_ == GammaKind::binomial && p_ == 1.0);
    }
    std::uint32_t degenerate_value() const {
        if (m_ == 1) return 1;
        if (kind_ == GammaKind::constant) return k_;
        if (kind_ == GammaKind::binomial && p_ == 1.0) return m_;
        throw std::logic_error("distribution is not degenerate");
    }

    std::string text() const;

    friend bool operator==(const GammaSpec& a, const GammaSpec& b) noexcept {
        return a.kind_ == b.kind_ && a.m_ == b.m_ && a.k_ == b.k_ && a.p_ == b.p_ &&
               a.s_ == b.s_;
    }

private:
    GammaSpec(GammaKind kind, std::uint32_t m) : kind_(kind), m_(m) {
        if (m == 0) throw std::domain_error("M must be >= 1");
    }

    GammaKind kind_;
    std::uint32_t m_;
    std::uint32_t k_ = 0;
    double p_ = 0.0;
    double s_ = 0.0;
};

namespace detail {

// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::domain_error(std::string("bad numeric literal for ") + what);
    return v;
}

}  // namespace detail

inline std::string GammaSpec::text() const {
    switch (kind_) {
        case GammaKind::constant: return "constant:" + std::to_string(k_);
        case GammaKind::uniform: return "uniform";
        case GammaKind::binomial: return "binomial:" + detail::format_double(p_);
        case GammaKind::log_law: return "loglaw";
        case GammaKind::power_law: return "powerlaw:" + detail::format_double(s_);
    }
    throw std::logic_error("unreachable");
}

inline GammaSpec GammaSpec::parse(std::string_view text, std::uint32_t m) {
    std::string_view head = text;
    std::string_view arg;
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        head = text.substr(0, colon);
        arg = text.substr(colon + 1);
    }
    if (head == "uniform" && arg.empty()) return uniform(m);
    if (head == "loglaw" && arg.empty()) return log_law(m);
    if (head == "constant") {
        std::uint32_t k = 0;
        auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
        if (ec != std::errc() || ptr != arg.data() + arg.size())
            throw std::domain_error("constant:k requires an integer k");
        return constant(k, m);
    }
    if (head == "binomial") {
        if (arg.empty()) throw std::domain_error("binomial:p requires p");
        return binomial(detail::parse_double(arg, "binomial p"), m);
    }
    if (head == "powerlaw") {
        if (arg.empty()) throw std::domain_error("powerlaw:s requires s");
        return power_law(detail::parse_double(arg, "powerlaw s"), m);
    }
    throw std::domain_error("unknown distribution: '" + std::string(text) +
                            "' (expected constant:k | uniform | binomial:p | loglaw | powerlaw:s)");
}

// Full pmf over support 1..M, index [k-1] = P(gamma = k).
inline std::vector<double> pmf_table(const GammaSpec& spec) {
    const std::uint32_t m = spec.m();
    std::vector<double> t(m, 0.0);
    switch (spec.kind()) {
        case GammaKind::constant:
            t[spec.constant_value() - 1] = 1.0;
            return t;
        case GammaKind::uniform: {
            const double v = 1.0 / m;
            for (auto& x : t) x = v;
            return t;
        }
        case GammaKind::binomial: {
            const double p = spec.p();
            if (p == 1.0) {
                t[m - 1] = 1.0;
                return t;
            }
            // Build unnormalised values outward from the mode via the term
            // ratio b(k+1)/b(k) = ((M-k)/(k+1)) * (p/q). Anchoring at the mode
            // keeps every term <= 1, so nothing overflows even at p ~ 1 where
            // b(1) underflows to zero; renormalising over 1..M then yields the
            // conditioned pmf directly.
            const double q = 1.0 - p;
            const double r = p / q;
            std::uint32_t mode = static_cast<std::uint32_t>((m + 1) * p);
            if (mode < 1) mode = 1;
            if (mode > m) mode = m;
            std::vector<long double> b(m, 0.0L);
            b[mode - 1] = 1.0L;
            for (std::uint32_t k = mode; k < m; ++k)
                b[k] = b[k - 1] * (static_cast<long double>(m - k) * r) /
                       static_cast<long double>(k + 1);
            // downward: b(k) = b(k+1) * (k+1)/(M-k) * q/p
            for (std::uint32_t k = mode - 1; k >= 1; --k)
                b[k - 1] = b[k] * (static_cast<long double>(k + 1) / r) /
                           static_cast<long double>(m - k);
            long double sum = 0.0L;
            for (auto v : b) sum += v;
            for (std::uint32_t k = 0; k < m; ++k) t[k] = static_cast<double>(b[k] / sum);
            return t;
        }
        case GammaKind::log_law: {
            const double log_base = std::log(static_cast<double>(m) + 1.0);
            for (std::uint32_t k = 1; k <= m; ++k)
                t[k - 1] = std::log1p(1.0 / k) / log_base;
            return t;
        }
        case GammaKind::power_law: {
            const double s = spec.s();
            long double z = 0.0L;
            for (std::uint32_t j = 1; j <= m; ++j)
                z += std::pow(static_cast<long double>(j), -static_cast<long double>(s));
            for (std::uint32_t k = 1; k <= m; ++k)
                t[k - 1] = static_cast<double>(
                    std::pow(static_cast<long double>(k), -static_cast<long double>(s)) / z);
            return t;
        }
    }
    throw std::logic_error("unreachable");
}

inline double pmf(const GammaSpec& spec, std::uint32_t k) {
    if (k < 1 || k > spec.m()) throw std::domain_error("pmf: k outside 1..M");
    return pmf_table(spec)[k - 1];
}

inline double cdf(const GammaSpec& spec, std::uint32_t k) {
    if (k > spec.m()) throw std::domain_error("cdf: k outside 0..M");
    if (k == 0) return 0.0;
    if (spec.kind() == GammaKind::log_law)  // closed form
        return std::log(static_cast<double>(k) + 1.0) /
               std::log(static_cast<double>(spec.m()) + 1.0);
    const auto t = pmf_table(spec);
    long double acc = 0.0L;
    for (std::uint32_t j = 1; j <= k; ++j) acc += t[j - 1];
    return static_cast<double>(acc);
}

inline double expected_value(const GammaSpec& spec) {
    const std::uint32_t m = spec.m();
    switch (spec.kind()) {
        case GammaKind::constant: return spec.constant_value();
        case GammaKind::uniform: return (static_cast<double>(m) + 1.0) / 2.0;
        case GammaKind::binomial: {
            const double p = spec.p();
            if (p == 1.0) return m;
            // M p / (1 - (1-p)^M); denominator via expm1/log1p so that values
            // of p near 0 keep full precision.
            const long double denom =
                -std::expm1(static_cast<long double>(m) * std::log1p(-static_cast<long double>(p)));
            return static_cast<double>(static_cast<long double>(m) * p / denom);
        }
        case GammaKind::log_law:
        case GammaKind::power_law: {
            const auto t = pmf_table(spec);
            long double acc = 0.0L;
            for (std::uint32_t k = 1; k <= m; ++k) acc += static_cast<long double>(k) * t[k - 1];
            return static_cast<double>(acc);
        }
    }
    throw std::logic_error("unreachable");
}

// Alias table (Vose construction). sample() consumes exactly one uniform
// 64-bit word: the word picks the column via 128-bit multiply-shift and the
// remainder of the same product is the coin, so no rejection loop ever runs.
class SamplerTable {
public:
    explicit SamplerTable(const GammaSpec& spec) : spec_(spec), m_(spec.m()) {
        if (spec.is_degenerate()) {
            degenerate_ = true;
            value_ = spec.degenerate_value();
            return;
        }
        const auto p = pmf_table(spec);
        accept_.assign(m_, 0.0);
        alias_.assign(m_, 0);
        std::vector<double> scaled(m_);
        std::vector<std::uint32_t> small, large;
        small.reserve(m_);
        large.reserve(m_);
        for (std::uint32_t i = 0; i < m_; ++i) {
            scaled[i] = p[i] * m_;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back();
            const std::uint32_t l = large.back();
            small.pop_back();
            accept_[s] = scaled[s];
            alias_[s] = l + 1;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::uint32_t i : large) {
            accept_[i] = 1.0;
            alias_[i] = i + 1;
        }
        for (std::uint32_t i : small) {  // fp slop leftovers
            accept_[i] = 1.0;
            alias_[i] = i + 1;
        }
    }

    const GammaSpec& spec() const noexcept { return spec_; }
    bool is_degenerate() const noexcept { return degenerate_; }
    std::uint32_t degenerate_value() const noexcept { return value_; }

    std::uint32_t sample(std::uint64_t word) const noexcept {
        if (degenerate_) return value_;
        const unsigned __int128 prod = static_cast<unsigned __int128>(word) * m_;
        const auto idx = static_cast<std::uint32_t>(prod >> 64);
        const double coin = static_cast<std::uint64_t>(prod) * 0x1.0p-64;
        return coin < accept_[idx] ? idx + 1 : alias_[idx];
    }

private:
    GammaSpec spec_;
    std::uint32_t m_;
    bool degenerate_ = false;
    std::uint32_t value_ = 0;
    std::vector<double> accept_;
    std::vector<std::uint32_t> alias_;  // 1-based outcome
};

inline SamplerTable build_sampler(const GammaSpec& spec) { return SamplerTable(spec); }

inline std::uint32_t sample_from_word(const SamplerTable& table, std::uint64_t word) noexcept {
    return table.sample(word);
}

}  // namespace stochpile
