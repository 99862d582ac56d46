#pragma once

// JSON bindings for the sweep harness: sweep specs are read from a JSON
// document mirroring the SweepSpec field names, and constant estimates are
// emitted as a JSON array. Kept separate from experiments.hpp so that only
// JSON-aware translation units pay for the json header.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochpile/experiments.hpp"

namespace stochpile {

namespace detail {

inline std::uint64_t json_u64(const nlohmann::json& j, const std::string& field) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    if (j.is_string()) {
        try {
            return parse_u64_hex(j.get<std::string>());
        } catch (const std::exception& e) {
            throw SweepSpecError(field, e.what());
        }
    }
    throw SweepSpecError(field, "expected a non-negative integer or hex string");
}

}  // namespace detail

inline SweepSpec parse_sweep_spec_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SweepSpecError("(document)", e.what());
    }
    if (!j.is_object()) throw SweepSpecError("(document)", "expected a JSON object");

    SweepSpec spec;
    if (!j.contains("distributions") || !j["distributions"].is_array() ||
        j["distributions"].empty())
        throw SweepSpecError("distributions", "expected a non-empty array of strings");
    for (const auto& d : j["distributions"]) {
        if (!d.is_string()) throw SweepSpecError("distributions", "entries must be strings");
        spec.distributions.push_back(d.get<std::string>());
    }

    if (!j.contains("M_values") || !j["M_values"].is_array() || j["M_values"].empty())
        throw SweepSpecError("M_values", "expected a non-empty array of positive integers");
    for (const auto& m : j["M_values"]) {
        const std::uint64_t v = detail::json_u64(m, "M_values");
        if (v == 0 || v > 0xffffffffull)
            throw SweepSpecError("M_values", "entries must be in 1..2^32-1");
        spec.m_values.push_back(static_cast<std::uint32_t>(v));
    }

    if (!j.contains("N_values") || !j["N_values"].is_array() || j["N_values"].empty())
        throw SweepSpecError("N_values", "expected a non-empty array of positive integers");
    for (const auto& n : j["N_values"]) {
        const std::uint64_t v = detail::json_u64(n, "N_values");
        if (v == 0) throw SweepSpecError("N_values", "entries must be >= 1");
        spec.n_values.push_back(v);
    }

    if (j.contains("p_rule") && !j["p_rule"].is_null()) {
        const auto& pr = j["p_rule"];
        if (!pr.is_object() || !pr.contains("kind") || !pr["kind"].is_string())
            throw SweepSpecError("p_rule", "expected {\"kind\": ...}");
        const std::string kind = pr["kind"].get<std::string>();
        if (kind == "none") {
            spec.p_rule.kind = PRule::Kind::none;
        } else if (kind == "fixed") {
            if (!pr.contains("p") || !pr["p"].is_number())
                throw SweepSpecError("p_rule", "fixed rule requires numeric 'p'");
            spec.p_rule = PRule{PRule::Kind::fixed, pr["p"].get<double>()};
        } else if (kind == "power") {
            if (!pr.contains("alpha") || !pr["alpha"].is_number())
                throw SweepSpecError("p_rule", "power rule requires numeric 'alpha'");
            spec.p_rule = PRule{PRule::Kind::power, pr["alpha"].get<double>()};
        } else if (kind == "scaled") {
            if (!pr.contains("a") || !pr["a"].is_number())
                throw SweepSpecError("p_rule", "scaled rule requires numeric 'a'");
            spec.p_rule = PRule{PRule::Kind::scaled, pr["a"].get<double>()};
        } else {
            throw SweepSpecError("p_rule", "kind must be none | fixed | power | scaled");
        }
    }

    if (!j.contains("replicates")) throw SweepSpecError("replicates", "missing");
    spec.replicates = detail::json_u64(j["replicates"], "replicates");
    if (spec.replicates == 0) throw SweepSpecError("replicates", "must be >= 1");

    if (!j.contains("base_seed")) throw SweepSpecError("base_seed", "missing");
    spec.base_seed = detail::json_u64(j["base_seed"], "base_seed");

    if (j.contains("output_path")) {
        if (!j["output_path"].is_string())
            throw SweepSpecError("output_path", "expected a string");
        spec.output_path = j["output_path"].get<std::string>();
    }
    return spec;
}

inline SweepSpec read_sweep_spec_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_sweep_spec_json(ss.str());
}

inline nlohmann::json estimates_to_json(const std::vector<ConstantEstimate>& estimates) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : estimates) {
        nlohmann::json o;
        o["distribution"] = e.distribution;
        o["M"] = e.m;
        o["N_max"] = e.n_max;
        o["radius_constant_mean"] = e.radius_constant_mean;
        o["avalanche_constant_mean"] = e.avalanche_constant_mean;
        // JSON has no Infinity; an unknown interval is null plus a warning.
        if (std::isinf(e.radius_constant_halfwidth)) {
            o["radius_constant_halfwidth"] = nullptr;
            o["avalanche_constant_halfwidth"] = nullptr;
            o["warning"] = "insufficient replicates for a confidence interval";
        } else {
            o["radius_constant_halfwidth"] = e.radius_constant_halfwidth;
            o["avalanche_constant_halfwidth"] = e.avalanche_constant_halfwidth;
        }
        o["replicate_count"] = e.replicate_count;
        arr.push_back(std::move(o));
    }
    return arr;
}

}  // namespace stochpile
