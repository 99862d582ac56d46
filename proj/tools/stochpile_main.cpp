// stochpile: single-source stochastic sandpile simulator on Z^2.
//
// Subcommands: stabilize (run one pile to its stable state), sweep (grid of
// runs to CSV), render (stable configuration to PPM), estimate (radius and
// avalanche constants from a sweep CSV).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochpile/core.hpp"
#include "stochpile/experiments.hpp"
#include "stochpile/gamma.hpp"
#include "stochpile/observables.hpp"
#include "stochpile/render.hpp"
#include "stochpile/snapshot.hpp"
#include "stochpile/sweep_json.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitOverflow = 3;
constexpr int kExitSkippedCells = 4;
constexpr int kExitUnstableInput = 5;

std::uint64_t parse_seed(const std::string& text) {
    try {
        if (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0)
            return stochpile::detail::parse_u64_hex(text.substr(2));
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(text, &pos, 10);
        if (pos != text.size()) throw std::domain_error("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::domain_error("bad seed '" + text + "' (decimal or 0x-prefixed hex)");
    }
}

void emit_json(const nlohmann::json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

int cmd_stabilize(std::uint64_t n, std::uint32_t m, const std::string& dist,
                  const std::string& seed_text, const std::string& policy_text,
                  std::uint64_t max_topplings, const std::string& out_config,
                  const std::string& out_json) {
    const std::uint64_t seed = parse_seed(seed_text);
    const stochpile::GammaSpec spec = stochpile::GammaSpec::parse(dist, m);
    const stochpile::OrderPolicy policy = stochpile::parse_order_policy(policy_text);

    const stochpile::StabilizationResult result =
        stochpile::stabilize(n, m, spec, seed, policy, max_topplings);

    if (!out_config.empty()) stochpile::write_snapshot_file(result.final, out_config);

    nlohmann::json j;
    j["N"] = n;
    j["M"] = m;
    j["distribution"] = spec.text();
    j["seed"] = stochpile::detail::format_u64_hex(seed);
    j["policy"] = stochpile::to_string(policy);
    j["radius"] = result.radius;
    j["reach_radius"] = result.reach_radius;
    j["avalanche"] = result.avalanche;
    j["full_topplings"] = result.full_topplings;
    j["nonfull_topplings"] = result.nonfull_topplings;
    j["total_mass"] = result.final.total_mass();
    emit_json(j, out_json);
    return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_csv, unsigned parallelism) {
    stochpile::SweepSpec spec = stochpile::read_sweep_spec_file(spec_path);
    if (!out_csv.empty()) spec.output_path = out_csv;
    const auto log = [](const std::string& line) { std::cerr << line << "\n"; };
    const stochpile::SweepOutcome outcome = stochpile::run_sweep(spec, parallelism, log);
    std::cerr << "sweep complete: " << outcome.rows.size() << " rows";
    if (!outcome.skipped.empty()) std::cerr << ", " << outcome.skipped.size() << " cells skipped";
    std::cerr << "\n";
    return outcome.skipped.empty() ? 0 : kExitSkippedCells;
}

int cmd_render(const std::string& config_path, const std::string& out_ppm,
               const std::vector<std::int32_t>& crop) {
    const stochpile::Configuration config = stochpile::read_snapshot_file(config_path);
    if (!config.stable()) {
        std::cerr << "error: snapshot contains unstable sites (>= 4M grains)\n";
        return kExitUnstableInput;
    }
    std::optional<stochpile::CropBox> box;
    if (!crop.empty()) box = stochpile::CropBox{crop[0], crop[1], crop[2], crop[3]};
    stochpile::write_ppm_file(stochpile::render_shape(config, box), out_ppm);
    return 0;
}

int cmd_estimate(const std::string& csv_path, const std::string& out_json) {
    std::ifstream f(csv_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + csv_path);
    std::vector<stochpile::SweepRow> rows;
    try {
        rows = stochpile::read_csv(f);
    } catch (const std::exception& e) {
        throw std::domain_error(std::string("csv: ") + e.what());
    }
    emit_json(stochpile::estimates_to_json(stochpile::estimate_constants(rows)), out_json);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-source stochastic sandpile simulator on Z^2"};
    app.require_subcommand(1);

    static const std::string kDistHelp =
        "toppling distribution: constant:k | uniform | binomial:p | loglaw | powerlaw:s";

    // stabilize
    auto* stab = app.add_subcommand("stabilize", "stabilise N grains dropped at the origin");
    std::uint64_t n = 0;
    std::uint32_t m = 0;
    std::string dist, seed_text = "1", policy_text = "site-exhaust";
    std::uint64_t max_topplings = stochpile::kDefaultTopplingCeiling;
    std::string out_config, out_json;
    stab->add_option("--n", n, "number of grains at the origin")->required();
    stab->add_option("--m", m, "multiplicity M (toppling threshold is 4M)")->required();
    stab->add_option("--dist", dist, kDistHelp)->required();
    stab->add_option("--seed", seed_text, "seed (decimal or 0x-hex); default 1");
    stab->add_option("--policy", policy_text, "toppling order: site-exhaust | fifo | lifo");
    stab->add_option("--max-topplings", max_topplings, "abort beyond this many topplings");
    stab->add_option("--out-config", out_config, "write final configuration snapshot here");
    stab->add_option("--out-json", out_json, "write JSON summary here (default: stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a sweep described by a JSON spec");
    std::string spec_path, out_csv;
    unsigned parallelism = 0;
    sweep->add_option("--spec", spec_path, "sweep spec JSON file")->required();
    sweep->add_option("--out", out_csv, "output CSV path (overrides spec output_path)");
    sweep->add_option("--parallelism", parallelism, "worker threads (0 = hardware)");

    // render
    auto* render = app.add_subcommand("render", "render a stable snapshot to binary PPM");
    std::string config_path, out_ppm;
    std::vector<std::int32_t> crop;
    render->add_option("--config", config_path, "configuration snapshot file")->required();
    render->add_option("--out", out_ppm, "output PPM path")->required();
    render->add_option("--crop", crop, "crop box: xmin ymin xmax ymax")->expected(4);

    // estimate
    auto* estimate =
        app.add_subcommand("estimate", "estimate radius/avalanche constants from a sweep CSV");
    std::string csv_path, est_out;
    estimate->add_option("--csv", csv_path, "sweep CSV file")->required();
    estimate->add_option("--out", est_out, "output JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (stab->parsed())
            return cmd_stabilize(n, m, dist, seed_text, policy_text, max_topplings, out_config,
                                 out_json);
        if (sweep->parsed()) return cmd_sweep(spec_path, out_csv, parallelism);
        if (render->parsed()) return cmd_render(config_path, out_ppm, crop);
        if (estimate->parsed()) return cmd_estimate(csv_path, est_out);
    } catch (const std::overflow_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOverflow;
    } catch (const stochpile::SweepSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
