#pragma once

// End-to-end runs shared by the command-line tool and the acceptance suite:
// load, orient, preprocess, fit, extract, map back to input indices, write.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdp/bicluster.hpp"
#include "cdp/config.hpp"
#include "cdp/conjoined.hpp"
#include "cdp/countmat.hpp"
#include "cdp/eval.hpp"
#include "cdp/log.hpp"
#include "cdp/random.hpp"
#include "cdp/synth.hpp"

namespace cdp {

inline SparseCountMatrix load_input(const InputSpec& in) {
    std::string format = in.format;
    if (format == "auto") {
        const auto ext = std::filesystem::path(in.path).extension().string();
        format = (ext == ".csv") ? "csv" : "mtx";
    }
    return format == "csv" ? load_dense_csv(in.path, in.has_labels) : load_matrix_market(in.path);
}

/// Component seeds derived from one run seed.
struct RunSeeds {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    std::uint64_t cdp = 0;
};

inline RunSeeds derive_run_seeds(std::uint64_t seed) {
    return {derive_seed(seed, {1}), derive_seed(seed, {2}), derive_seed(seed, {3})};
}

struct FitOutcome {
    RunConfig config;
    RunSeeds seeds;
    Preprocessed pre;
    CdpFit fit;
    /// Biclusters in the model's orientation, preprocessed indices.
    BiclusterSet model_biclusters;
    /// Biclusters in the input matrix's own row/column indices.
    BiclusterSet biclusters;
    double wall_s = 0.0;
};

/// Maps biclusters from preprocessed, possibly transposed indices back to
/// the rows and columns of the matrix as loaded.
inline BiclusterSet to_input_indices(const BiclusterSet& set, const Preprocessed& pre, Orientation o) {
    BiclusterSet out;
    for (const auto& b : set) {
        std::vector<std::size_t> rows, cols;
        for (auto r : b.rows)
            for (auto src : pre.row_sources[r]) rows.push_back(src);
        for (auto c : b.cols) cols.push_back(pre.col_sources[c]);
        if (o == Orientation::rows_are_composites) std::swap(rows, cols);
        out.push_back(make_bicluster(std::move(rows), std::move(cols), b.weight, b.topic_pair));
    }
    return out;
}

/// Runs the whole model on `m` (as loaded) with `cfg`, using `seed`.
inline FitOutcome fit_matrix(const SparseCountMatrix& m, const RunConfig& cfg, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    FitOutcome out;
    out.config = cfg;
    out.config.seed = seed;
    out.seeds = derive_run_seeds(seed);
    const SparseCountMatrix oriented = cfg.orientation == Orientation::rows_are_parts ? m : transpose(m);
    out.pre = preprocess_indexed(oriented, cfg.input.merge_duplicate_labels);

    const std::size_t workers = cfg.serial ? 1 : cfg.workers;
    DpmmConfig r = cfg.rows, c = cfg.cols;
    r.seed = out.seeds.rows;
    c.seed = out.seeds.cols;
    r.workers = c.workers = workers;
    r.check_invariants = c.check_invariants = cfg.check_invariants;
    CdpHyper h = cfg.cdp;
    h.seed = out.seeds.cdp;
    h.workers = workers;
    h.serial = cfg.serial;
    out.config.cdp = h;

    out.fit = fit_cdp(out.pre.matrix, r, c, h, cfg.check_invariants);
    out.model_biclusters = extract_biclusters(out.fit.model, h);
    out.biclusters = to_input_indices(out.model_biclusters, out.pre, cfg.orientation);
    out.wall_s = detail::seconds_since(t0);
    return out;
}

/// Model document: the fitted model, the settings and seeds that produced
/// it, and for every model row/column the input indices it came from. No
/// timing fields, so repeated runs compare byte for byte.
inline nlohmann::json model_document(const FitOutcome& f) {
    auto j = to_json(f.fit.model);
    j["config"] = to_json(f.config);
    j["seeds"] = {{"run", f.config.seed}, {"rows", f.seeds.rows}, {"cols", f.seeds.cols}, {"cdp", f.seeds.cdp}};
    j["map_iteration"] = {{"rows", f.fit.map_r.iteration}, {"cols", f.fit.map_c.iteration}};
    j["row_origin"] = f.pre.row_sources;
    j["col_origin"] = f.pre.col_sources;
    return j;
}

inline nlohmann::json timing_document(const FitOutcome& f) {
    return {{"dpmm_rows_s", f.fit.timings.dpmm_rows_s},
            {"dpmm_cols_s", f.fit.timings.dpmm_cols_s},
            {"mutual_update_s", f.fit.timings.mutual_update_s},
            {"fit_s", f.fit.timings.total_s},
            {"wall_s", f.wall_s},
            {"tokens", f.fit.tokens.size()},
            {"K_r", f.fit.model.k_r},
            {"K_c", f.fit.model.k_c},
            {"seeds", {{"run", f.config.seed}, {"rows", f.seeds.rows}, {"cols", f.seeds.cols}, {"cdp", f.seeds.cdp}}}};
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace detail

inline void write_json(const nlohmann::json& j, const std::filesystem::path& p) {
    auto o = detail::open_output(p);
    o << j.dump(2) << '\n';
}

/// model.json, biclusters.json, the row/column trace CSVs and run.json
/// (timings) under `dir`.
inline void write_fit_outputs(const FitOutcome& f, const std::filesystem::path& dir) {
    write_json(model_document(f), dir / "model.json");
    {
        auto o = detail::open_output(dir / "biclusters.json");
        save_biclusters(f.biclusters, o);
    }
    {
        auto o = detail::open_output(dir / "trace_rows.csv");
        write_trace_csv(f.fit.trace_r, o);
    }
    {
        auto o = detail::open_output(dir / "trace_rows_k.csv");
        write_trace_summary_csv(f.fit.trace_r, o);
    }
    {
        auto o = detail::open_output(dir / "trace_cols.csv");
        write_trace_csv(f.fit.trace_c, o);
    }
    {
        auto o = detail::open_output(dir / "trace_cols_k.csv");
        write_trace_summary_csv(f.fit.trace_c, o);
    }
    write_json(timing_document(f), dir / "run.json");
}

/// 8-bit binary PGM of log(1 + count), scaled so the largest cell is 255.
/// Image rows and columns follow the matrix.
inline void write_pgm(const SparseCountMatrix& m, std::ostream& out) {
    out << "P5\n" << m.n_cols() << ' ' << m.n_rows() << "\n255\n";
    count_t max = 0;
    for (const auto& e : m.entries()) max = std::max(max, e.count);
    const double scale = max > 0 ? 255.0 / std::log1p(static_cast<double>(max)) : 0.0;
    std::vector<unsigned char> line(m.n_cols());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::fill(line.begin(), line.end(), 0);
        for (const auto& e : m.row(r))
            line[e.col] = static_cast<unsigned char>(std::lround(scale * std::log1p(static_cast<double>(e.count))));
        out.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(line.size()));
    }
}

inline void write_heatmaps(const SparseCountMatrix& m, const std::filesystem::path& stem) {
    {
        auto o = detail::open_output(stem.string() + ".csv");
        write_dense_csv(m, o);
    }
    auto o = detail::open_output(stem.string() + ".pgm");
    write_pgm(m, o);
}

/// Simulated instance of a preset case.
struct Simulation {
    SynthSpec spec;
    SparseCountMatrix matrix;
    BiclusterSet truth;
};

inline Simulation simulate_case(int case_id, std::uint64_t seed) {
    Simulation s;
    s.spec = case_presets(case_id, seed);
    s.matrix = sample_counts(s.spec);
    s.truth = true_biclusters(s.spec);
    return s;
}

inline void write_simulation(const Simulation& s, const std::filesystem::path& dir) {
    {
        auto o = detail::open_output(dir / "matrix.mtx");
        write_matrix_market(s.matrix, o);
    }
    auto o = detail::open_output(dir / "truth.json");
    save_biclusters(s.truth, o);
}

/// simulate → fit → score for one case and seed. Failures are caught and
/// scored 0 with the failure flag set.
inline RunResult benchmark_run(int case_id, std::uint64_t seed, const RunConfig& cfg, FitOutcome* keep = nullptr,
                               Simulation* sim_out = nullptr) {
    RunResult r;
    r.case_name = "case" + std::to_string(case_id);
    r.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Simulation sim = simulate_case(case_id, seed);
        RunConfig c = cfg;
        c.orientation = Orientation::rows_are_parts;
        FitOutcome f = fit_matrix(sim.matrix, c, seed);
        r.jaccard = jaccard_score(f.biclusters, sim.truth);
        r.n_biclusters = f.biclusters.size();
        if (keep) *keep = std::move(f);
        if (sim_out) *sim_out = std::move(sim);
    } catch (const std::exception& e) {
        log::error(r.case_name, " seed ", seed, " failed: ", e.what());
        r.failed = true;
        r.jaccard = 0.0;
    }
    r.runtime_s = detail::seconds_since(t0);
    return r;
}

}  // namespace cdp
