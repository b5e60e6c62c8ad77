#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdp/conjoined.hpp"
#include "cdp/countmat.hpp"
#include "cdp/dpmm.hpp"

namespace cdp {

/// rows_are_parts: matrix rows are parts (words, genes) and columns are
/// composites (documents, cells). rows_are_composites is transposed on load.
enum class Orientation { rows_are_parts, rows_are_composites };

inline std::string to_string(Orientation o) {
    return o == Orientation::rows_are_parts ? "rows-are-parts" : "rows-are-composites";
}

inline Orientation parse_orientation(const std::string& s) {
    if (s == "rows-are-parts") return Orientation::rows_are_parts;
    if (s == "rows-are-composites") return Orientation::rows_are_composites;
    throw std::invalid_argument("orientation must be rows-are-parts or rows-are-composites, got \"" + s + "\"");
}

struct InputSpec {
    std::string path;
    /// "mtx", "csv", or "auto" (by extension).
    std::string format = "auto";
    bool has_labels = false;
    bool merge_duplicate_labels = false;
};

struct RunConfig {
    DpmmConfig rows;
    DpmmConfig cols;
    CdpHyper cdp;
    InputSpec input;
    Orientation orientation = Orientation::rows_are_parts;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<int> cases{1, 2, 3, 4};
    std::size_t workers = 1;
    bool serial = false;
    bool check_invariants = false;
    std::string out_dir = "out";
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> known) {
    std::set<std::string> k(known.begin(), known.end());
    for (const auto& [key, _] : j.items())
        if (!k.count(key)) throw std::invalid_argument("config: unknown key \"" + key + "\" in " + where);
}

inline DpmmConfig parse_dpmm(const nlohmann::json& j, const std::string& where, DpmmConfig c) {
    reject_unknown(j, where, {"gamma", "beta", "iterations", "burn_in_fraction", "moves_per_iteration", "launch_sweeps"});
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("beta")) c.beta = j["beta"].is_array() ? j["beta"].get<std::vector<double>>() : std::vector<double>{j["beta"].get<double>()};
    c.iterations = j.value("iterations", c.iterations);
    c.burn_in_fraction = j.value("burn_in_fraction", c.burn_in_fraction);
    c.moves_per_iteration = j.value("moves_per_iteration", c.moves_per_iteration);
    c.launch_sweeps = j.value("launch_sweeps", c.launch_sweeps);
    return c;
}

inline nlohmann::json dpmm_json(const DpmmConfig& c) {
    return {{"gamma", c.gamma},
            {"beta", c.beta.size() == 1 ? nlohmann::json(c.beta.front()) : nlohmann::json(c.beta)},
            {"iterations", c.iterations},
            {"burn_in_fraction", c.burn_in_fraction},
            {"moves_per_iteration", c.moves_per_iteration},
            {"launch_sweeps", c.launch_sweeps}};
}

}  // namespace detail

/// Validates every component against its own invariants.
inline void validate(const RunConfig& c) {
    validate(c.rows);
    validate(c.cols);
    validate(c.cdp);
    if (c.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    for (int k : c.cases)
        if (k < 1 || k > 4) throw std::invalid_argument("config: case " + std::to_string(k) + " is not in 1-4");
    if (c.input.format != "auto" && c.input.format != "mtx" && c.input.format != "csv")
        throw std::invalid_argument("config: input.format must be auto, mtx or csv");
}

/// Keys absent from `j` keep their value from `base`.
inline RunConfig parse_run_config(const nlohmann::json& j, RunConfig base = {}) {
    try {
        if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
        detail::reject_unknown(j, "config", {"rows", "cols", "cdp", "input", "orientation", "seed", "seeds", "cases", "workers",
                                             "serial", "check_invariants", "out_dir"});
        RunConfig c = std::move(base);
        if (j.contains("rows")) c.rows = detail::parse_dpmm(j["rows"], "rows", c.rows);
        if (j.contains("cols")) c.cols = detail::parse_dpmm(j["cols"], "cols", c.cols);
        if (j.contains("cdp")) {
            const auto& h = j["cdp"];
            detail::reject_unknown(h, "cdp", {"alpha_r", "alpha_c", "lambda", "iter_u", "tau_theta", "tau_row", "tau_col",
                                              "sync_batches", "count_source"});
            c.cdp.alpha_r = h.value("alpha_r", c.cdp.alpha_r);
            c.cdp.alpha_c = h.value("alpha_c", c.cdp.alpha_c);
            c.cdp.lambda = h.value("lambda", c.cdp.lambda);
            c.cdp.iter_u = h.value("iter_u", c.cdp.iter_u);
            c.cdp.tau_theta = h.value("tau_theta", c.cdp.tau_theta);
            c.cdp.tau_row = h.value("tau_row", c.cdp.tau_row);
            c.cdp.tau_col = h.value("tau_col", c.cdp.tau_col);
            c.cdp.sync_batches = h.value("sync_batches", c.cdp.sync_batches);
            if (h.contains("count_source")) c.cdp.count_source = parse_count_source(h["count_source"].get<std::string>());
        }
        if (j.contains("input")) {
            const auto& in = j["input"];
            detail::reject_unknown(in, "input", {"path", "format", "has_labels", "merge_duplicate_labels"});
            c.input.path = in.value("path", c.input.path);
            c.input.format = in.value("format", c.input.format);
            c.input.has_labels = in.value("has_labels", c.input.has_labels);
            c.input.merge_duplicate_labels = in.value("merge_duplicate_labels", c.input.merge_duplicate_labels);
        }
        if (j.contains("orientation")) c.orientation = parse_orientation(j["orientation"].get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("cases")) c.cases = j["cases"].get<std::vector<int>>();
        c.workers = j.value("workers", c.workers);
        c.serial = j.value("serial", c.serial);
        c.check_invariants = j.value("check_invariants", c.check_invariants);
        c.out_dir = j.value("out_dir", c.out_dir);
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": malformed JSON: " + e.what());
    }
    try {
        return parse_run_config(j, std::move(base));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

/// Settings used for the synthetic benchmark when no config file is given.
inline RunConfig synthetic_defaults() {
    RunConfig c;
    for (DpmmConfig* d : {&c.rows, &c.cols}) {
        d->gamma = 1.0;
        d->beta = {1.0};
        d->iterations = 200;
    }
    c.cdp.iter_u = 50;
    c.cdp.tau_theta = 0.7;
    c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    return c;
}

/// Settings that determine results; paths and worker counts are left out.
inline nlohmann::json to_json(const RunConfig& c) {
    return {{"rows", detail::dpmm_json(c.rows)},
            {"cols", detail::dpmm_json(c.cols)},
            {"cdp", to_json(c.cdp)},
            {"orientation", to_string(c.orientation)},
            {"seed", c.seed},
            {"serial", c.serial}};
}

}  // namespace cdp
