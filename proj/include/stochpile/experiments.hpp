#pragma once

// Declarative sweep harness: a grid over (distribution, M, N, replicate) is
// expanded into independent cells, run on a bounded worker pool, and written
// as CSV. Replicate r of cell c is seeded with derive_seed(base_seed, c, r),
// so results are reproducible regardless of parallelism or completion order.

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stochpile/core.hpp"
#include "stochpile/gamma.hpp"
#include "stochpile/observables.hpp"
#include "stochpile/prf.hpp"

namespace stochpile {

struct PRule {
    enum class Kind { none, fixed, power, scaled };
    Kind kind = Kind::none;
    double value = 0.0;  // fixed: p, power: alpha (1-p = N^-alpha), scaled: a (1-p = a/N)
};

struct SweepSpec {
    std::vector<std::string> distributions;  // gamma text forms; bare "binomial" with a p_rule
    std::vector<std::uint32_t> m_values;
    std::vector<std::uint64_t> n_values;
    PRule p_rule;
    std::uint64_t replicates = 1;
    std::uint64_t base_seed = 1;
    std::string output_path;  // empty: rows are only returned
};

struct SweepRow {
    std::string distribution;  // resolved canonical text form
    std::uint32_t m = 0;
    std::uint64_t n = 0;
    std::optional<double> p;  // binomial only
    std::optional<double> s;  // powerlaw only
    std::uint64_t seed = 0;
    double radius = 0.0;
    std::uint64_t avalanche = 0;
    double radius_quotient = 0.0;
    double avalanche_quotient = 0.0;
    double expected_gamma = 0.0;
    std::uint64_t nft_total = 0;
    std::uint64_t runtime_ms = 0;  // measured wall time; the one non-reproducible field
};

struct SkippedCell {
    std::string distribution;
    std::uint32_t m = 0;
    std::uint64_t n = 0;
    std::string reason;
};

struct SweepOutcome {
    std::vector<SweepRow> rows;
    std::vector<SkippedCell> skipped;
};

struct SweepSpecError : std::runtime_error {
    explicit SweepSpecError(const std::string& field_, const std::string& what_)
        : std::runtime_error("sweep spec field '" + field_ + "': " + what_), field(field_) {}
    std::string field;
};

namespace detail {

inline std::string format_u64_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::uint64_t parse_u64_hex(const std::string& s) {
    if (s.empty()) throw std::domain_error("empty hex value");
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos, 16);
    if (pos != s.size()) throw std::domain_error("bad hex value: " + s);
    return v;
}

// Resolve a distribution template for one (M, N) cell. Returns nullopt with a
// reason when the p rule yields an invalid probability.
inline std::optional<GammaSpec> resolve_template(const std::string& text, std::uint32_t m,
                                                 std::uint64_t n, const PRule& rule,
                                                 std::string* reason) {
    const bool bare_binomial = text == "binomial";
    if (bare_binomial && rule.kind == PRule::Kind::none)
        throw std::domain_error("bare 'binomial' template requires a p_rule");
    GammaSpec spec = bare_binomial ? GammaSpec::binomial(0.5, m) : GammaSpec::parse(text, m);
    if (spec.kind() != GammaKind::binomial || rule.kind == PRule::Kind::none) return spec;

    double p = spec.p();
    switch (rule.kind) {
        case PRule::Kind::none: break;
        case PRule::Kind::fixed: p = rule.value; break;
        case PRule::Kind::power:
            p = 1.0 - std::pow(static_cast<double>(n), -rule.value);
            break;
        case PRule::Kind::scaled: p = 1.0 - rule.value / static_cast<double>(n); break;
    }
    if (!(p > 0.0) || p > 1.0) {
        if (reason) {
            std::ostringstream os;
            os << "p rule yields p=" << p << " outside (0, 1]";
            *reason = os.str();
        }
        return std::nullopt;
    }
    return GammaSpec::binomial(p, m);
}

}  // namespace detail

inline const std::string& sweep_csv_header() {
    static const std::string h =
        "distribution,M,N,p,s,seed,radius,avalanche,radius_quotient,avalanche_quotient,"
        "expected_gamma,nft_total,runtime_ms";
    return h;
}

inline std::string to_csv_line(const SweepRow& r) {
    std::ostringstream os;
    os << r.distribution << ',' << r.m << ',' << r.n << ','
       << (r.p ? detail::format_double(*r.p) : "") << ','
       << (r.s ? detail::format_double(*r.s) : "") << ',' << detail::format_u64_hex(r.seed)
       << ',' << detail::format_double(r.radius) << ',' << r.avalanche << ','
       << detail::format_double(r.radius_quotient) << ','
       << detail::format_double(r.avalanche_quotient) << ','
       << detail::format_double(r.expected_gamma) << ',' << r.nft_total << ','
       << r.runtime_ms;
    return os.str();
}

inline void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << sweep_csv_header() << '\n';
    for (const auto& r : rows) out << to_csv_line(r) << '\n';
    if (!out) throw std::runtime_error("csv write failed");
}

inline std::vector<SweepRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != sweep_csv_header())
        throw std::runtime_error("csv: missing or wrong header row");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            f.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (f.size() != 13)
            throw std::runtime_error("csv: expected 13 columns, got " +
                                     std::to_string(f.size()));
        SweepRow r;
        r.distribution = f[0];
        r.m = static_cast<std::uint32_t>(std::stoul(f[1]));
        r.n = std::stoull(f[2]);
        if (!f[3].empty()) r.p = detail::parse_double(f[3], "p");
        if (!f[4].empty()) r.s = detail::parse_double(f[4], "s");
        r.seed = detail::parse_u64_hex(f[5]);
        r.radius = detail::parse_double(f[6], "radius");
        r.avalanche = std::stoull(f[7]);
        r.radius_quotient = detail::parse_double(f[8], "radius_quotient");
        r.avalanche_quotient = detail::parse_double(f[9], "avalanche_quotient");
        r.expected_gamma = detail::parse_double(f[10], "expected_gamma");
        r.nft_total = std::stoull(f[11]);
        r.runtime_ms = std::stoull(f[12]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// Quotients must be recomputable from the persisted fields.
inline bool row_recompute_check(const SweepRow& r, double tol = 1e-12) {
    const double rq = r.radius / std::sqrt(static_cast<double>(r.n) / r.m);
    const double aq = static_cast<double>(r.avalanche) * r.m * r.expected_gamma /
                      (static_cast<double>(r.n) * static_cast<double>(r.n));
    return std::abs(rq - r.radius_quotient) <= tol && std::abs(aq - r.avalanche_quotient) <= tol;
}

inline SweepOutcome run_sweep(const SweepSpec& spec, unsigned parallelism = 0,
                              const std::function<void(const std::string&)>& log = {}) {
    if (spec.distributions.empty()) throw SweepSpecError("distributions", "must be non-empty");
    if (spec.m_values.empty()) throw SweepSpecError("M_values", "must be non-empty");
    if (spec.n_values.empty()) throw SweepSpecError("N_values", "must be non-empty");
    if (spec.replicates == 0) throw SweepSpecError("replicates", "must be >= 1");
    if (spec.p_rule.kind == PRule::Kind::power && !(spec.p_rule.value > 0.0))
        throw SweepSpecError("p_rule", "power alpha must be > 0");
    if (spec.p_rule.kind == PRule::Kind::scaled && !(spec.p_rule.value > 0.0))
        throw SweepSpecError("p_rule", "scaled a must be > 0");
    if (spec.p_rule.kind == PRule::Kind::fixed &&
        (!(spec.p_rule.value > 0.0) || spec.p_rule.value > 1.0))
        throw SweepSpecError("p_rule", "fixed p must be in (0, 1]");

    struct Cell {
        std::uint64_t index = 0;
        std::string dist_text;
        std::uint32_t m = 0;
        std::uint64_t n = 0;
    };
    std::vector<Cell> cells;
    for (const auto& d : spec.distributions)
        for (const auto m : spec.m_values)
            for (const auto n : spec.n_values)
                cells.push_back(Cell{cells.size(), d, m, n});

    struct CellResult {
        std::vector<SweepRow> rows;
        std::optional<SkippedCell> skipped;
        bool done = false;
    };
    std::vector<CellResult> results(cells.size());

    // Incremental single-writer output: cells commit in canonical order, so
    // the file is identical whatever the completion order.
    std::ofstream out;
    if (!spec.output_path.empty()) {
        out.open(spec.output_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + spec.output_path);
        out << sweep_csv_header() << '\n';
        out.flush();
    }

    std::mutex mu;
    std::condition_variable cv;
    std::size_t next_cell = 0;    // next cell to claim
    std::size_t next_commit = 0;  // next cell to write out
    std::exception_ptr failure;

    auto run_cell = [&](const Cell& cell) -> CellResult {
        CellResult res;
        std::string reason;
        const auto resolved =
            detail::resolve_template(cell.dist_text, cell.m, cell.n, spec.p_rule, &reason);
        if (!resolved) {
            res.skipped = SkippedCell{cell.dist_text, cell.m, cell.n, reason};
            return res;
        }
        const GammaSpec& g = *resolved;
        const double e_gamma = expected_value(g);
        res.rows.reserve(spec.replicates);
        for (std::uint64_t r = 0; r < spec.replicates; ++r) {
            const std::uint64_t seed = derive_seed(spec.base_seed, cell.index, r);
            const auto t0 = std::chrono::steady_clock::now();
            const StabilizationResult sim = stabilize(cell.n, cell.m, g, seed);
            const auto t1 = std::chrono::steady_clock::now();
            const QuotientPair q = quotients(sim, cell.n, cell.m, g);
            SweepRow row;
            row.distribution = g.text();
            row.m = cell.m;
            row.n = cell.n;
            if (g.kind() == GammaKind::binomial) row.p = g.p();
            if (g.kind() == GammaKind::power_law) row.s = g.s();
            row.seed = seed;
            row.radius = sim.radius;
            row.avalanche = sim.avalanche;
            row.radius_quotient = q.radius_quotient;
            row.avalanche_quotient = q.avalanche_quotient;
            row.expected_gamma = e_gamma;
            row.nft_total = sim.nonfull_topplings;
            row.runtime_ms = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count());
            res.rows.push_back(std::move(row));
        }
        return res;
    };

    auto worker = [&]() {
        while (true) {
            std::size_t mine;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (failure || next_cell >= cells.size()) return;
                mine = next_cell++;
            }
            CellResult res;
            try {
                res = run_cell(cells[mine]);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!failure) failure = std::current_exception();
                cv.notify_all();
                return;
            }
            {
                std::lock_guard<std::mutex> lk(mu);
                results[mine] = std::move(res);
                results[mine].done = true;
                if (log) {
                    const Cell& c = cells[mine];
                    std::ostringstream os;
                    os << "cell " << (mine + 1) << "/" << cells.size() << " dist=" << c.dist_text
                       << " M=" << c.m << " N=" << c.n;
                    if (results[mine].skipped)
                        os << " SKIPPED: " << results[mine].skipped->reason;
                    else
                        os << " replicates=" << spec.replicates;
                    log(os.str());
                }
                // commit everything that is ready, in order
                while (next_commit < cells.size() && results[next_commit].done) {
                    if (out.is_open()) {
                        for (const auto& row : results[next_commit].rows)
                            out << to_csv_line(row) << '\n';
                        out.flush();
                        if (!out) {
                            if (!failure)
                                failure = std::make_exception_ptr(std::runtime_error(
                                    "csv write failed: " + spec.output_path));
                            cv.notify_all();
                            return;
                        }
                    }
                    ++next_commit;
                }
                cv.notify_all();
            }
        }
    };

    unsigned workers = parallelism != 0 ? parallelism : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, cells.size()));

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    SweepOutcome outcome;
    for (auto& res : results) {
        if (res.skipped) outcome.skipped.push_back(std::move(*res.skipped));
        for (auto& row : res.rows) outcome.rows.push_back(std::move(row));
    }
    return outcome;
}

struct ConstantEstimate {
    std::string distribution;
    std::uint32_t m = 0;
    std::uint64_t n_max = 0;
    double radius_constant_mean = 0.0;
    double radius_constant_halfwidth = 0.0;
    double avalanche_constant_mean = 0.0;
    double avalanche_constant_halfwidth = 0.0;
    std::uint64_t replicate_count = 0;
};

namespace detail {

// Two-sided 97.5% Student-t quantiles; beyond the table the normal value.
inline double student_t_975(std::uint64_t df) {
    static constexpr double table[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df == 0) return std::numeric_limits<double>::infinity();
    if (df <= 30) return table[df - 1];
    if (df <= 40) return 2.021;
    if (df <= 60) return 2.000;
    if (df <= 120) return 1.980;
    return 1.960;
}

struct MeanHalfwidth {
    double mean = 0.0;
    double halfwidth = std::numeric_limits<double>::infinity();
};

inline MeanHalfwidth t_interval(const std::vector<double>& xs) {
    MeanHalfwidth r;
    const std::size_t n = xs.size();
    if (n == 0) return r;
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / static_cast<double>(n);
    if (n < 2) return r;  // infinite halfwidth
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    r.halfwidth = student_t_975(n - 1) * sd / std::sqrt(static_cast<double>(n));
    return r;
}

}  // namespace detail

// Mean and 95% half-interval of both quotients over the replicates at the
// largest N present for each (distribution, M).
inline std::vector<ConstantEstimate> estimate_constants(const std::vector<SweepRow>& rows) {
    struct Key {
        std::string dist;
        std::uint32_t m;
        bool operator==(const Key&) const = default;
    };
    std::vector<Key> order;
    std::vector<std::uint64_t> n_max;
    auto find = [&](const Key& k) -> std::size_t {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == k) return i;
        order.push_back(k);
        n_max.push_back(0);
        return order.size() - 1;
    };
    for (const auto& r : rows) {
        const std::size_t i = find(Key{r.distribution, r.m});
        n_max[i] = std::max(n_max[i], r.n);
    }
    std::vector<ConstantEstimate> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<double> rq, aq;
        for (const auto& r : rows)
            if (r.distribution == order[i].dist && r.m == order[i].m && r.n == n_max[i]) {
                rq.push_back(r.radius_quotient);
                aq.push_back(r.avalanche_quotient);
            }
        const auto ri = detail::t_interval(rq);
        const auto ai = detail::t_interval(aq);
        ConstantEstimate e;
        e.distribution = order[i].dist;
        e.m = order[i].m;
        e.n_max = n_max[i];
        e.radius_constant_mean = ri.mean;
        e.radius_constant_halfwidth = ri.halfwidth;
        e.avalanche_constant_mean = ai.mean;
        e.avalanche_constant_halfwidth = ai.halfwidth;
        e.replicate_count = rq.size();
        out.push_back(std::move(e));
    }
    return out;
}

enum class Regime { deterministic_like, standard_binomial_like, intermediate };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::deterministic_like: return "DETERMINISTIC_LIKE";
        case Regime::standard_binomial_like: return "STANDARD_BINOMIAL_LIKE";
        case Regime::intermediate: return "INTERMEDIATE";
    }
    return "?";
}

// Reference constants for the two limiting regimes of the binomial model.
inline Regime regime_classifier(double radius_c, double avalanche_c) {
    const auto near = [](double v, double target, double tol) {
        return std::abs(v - target) <= tol;
    };
    if (near(radius_c, 0.38, 0.015) && near(avalanche_c, 0.018, 0.0015))
        return Regime::deterministic_like;
    if (near(radius_c, 0.35, 0.015) && near(avalanche_c, 0.015, 0.0015))
        return Regime::standard_binomial_like;
    return Regime::intermediate;
}

}  // namespace stochpile
