// Command-line front end: simulate | fit | extract | score | benchmark.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdp/cdp.hpp"

namespace fs = std::filesystem;

namespace {

struct Shared {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string config;
    std::string out_dir;
    std::string orientation;
    bool serial = false;
};

void add_shared(CLI::App* cmd, Shared& s, bool with_orientation = true) {
    cmd->add_option("--seed", s.seed, "Run seed");
    cmd->add_option("--workers", s.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--config", s.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", s.out_dir, "Output directory");
    if (with_orientation)
        cmd->add_option("--orientation", s.orientation, "rows-are-parts or rows-are-composites")
            ->check(CLI::IsMember({"rows-are-parts", "rows-are-composites"}));
    cmd->add_flag("--serial", s.serial, "Exact sequential updates on one thread");
}

cdp::RunConfig resolve(const Shared& s, cdp::RunConfig base = {}) {
    cdp::RunConfig c = s.config.empty() ? std::move(base) : cdp::load_run_config(s.config, std::move(base));
    if (s.seed) c.seed = *s.seed;
    if (s.workers) c.workers = *s.workers;
    if (!s.out_dir.empty()) c.out_dir = s.out_dir;
    if (!s.orientation.empty()) c.orientation = cdp::parse_orientation(s.orientation);
    if (s.serial) c.serial = true;
    cdp::validate(c);
    return c;
}

int cmd_simulate(int case_id, const Shared& s, bool heatmap) {
    const auto cfg = resolve(s);
    const auto sim = cdp::simulate_case(case_id, cfg.seed);
    const fs::path dir = cfg.out_dir;
    cdp::write_simulation(sim, dir);
    if (heatmap) cdp::write_heatmaps(sim.matrix, dir / "heatmap");
    std::cout << "case " << case_id << " seed " << cfg.seed << ": " << sim.matrix.n_rows() << "x" << sim.matrix.n_cols()
              << ", total " << sim.matrix.total() << ", " << sim.truth.size() << " planted biclusters -> " << dir.string()
              << '\n';
    return 0;
}

int cmd_fit(const std::string& matrix, const std::string& format, bool labels, bool merge_labels, const Shared& s) {
    auto cfg = resolve(s);
    if (!matrix.empty()) cfg.input.path = matrix;
    if (!format.empty()) cfg.input.format = format;
    if (labels) cfg.input.has_labels = true;
    if (merge_labels) cfg.input.merge_duplicate_labels = true;
    if (cfg.input.path.empty()) throw CLI::ValidationError("--matrix", "no input matrix given (flag or config input.path)");
    if (!fs::exists(cfg.input.path)) throw std::runtime_error("input file not found: " + cfg.input.path);
    const auto m = cdp::load_input(cfg.input);
    const auto f = cdp::fit_matrix(m, cfg, cfg.seed);
    cdp::write_fit_outputs(f, cfg.out_dir);
    std::cout << "K_r=" << f.fit.model.k_r << " K_c=" << f.fit.model.k_c << " biclusters=" << f.biclusters.size()
              << " fit_s=" << f.fit.timings.total_s << " -> " << cfg.out_dir << '\n';
    return 0;
}

/// Re-extracts biclusters from a saved model with possibly new thresholds.
int cmd_extract(const std::string& model_path, std::optional<double> tau_theta, std::optional<double> tau_row,
                std::optional<double> tau_col, const Shared& s) {
    auto in = cdp::detail::open_input(model_path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw cdp::FormatError(model_path + ": malformed JSON: " + e.what());
    }
    const auto model = cdp::model_from_json(doc);
    const auto cfg = resolve(s);
    const auto& saved = doc.at("config").at("cdp");
    cdp::CdpHyper h;
    h.tau_theta = tau_theta.value_or(saved.value("tau_theta", h.tau_theta));
    h.tau_row = tau_row.value_or(saved.value("tau_row", h.tau_row));
    h.tau_col = tau_col.value_or(saved.value("tau_col", h.tau_col));
    cdp::validate(h);

    cdp::Preprocessed pre;
    pre.row_sources = doc.at("row_origin").get<std::vector<std::vector<std::size_t>>>();
    pre.col_sources = doc.at("col_origin").get<std::vector<std::size_t>>();
    const auto orientation = cdp::parse_orientation(doc.at("config").value("orientation", std::string("rows-are-parts")));
    const auto set = cdp::to_input_indices(cdp::extract_biclusters(model, h), pre, orientation);
    const fs::path out = fs::path(cfg.out_dir) / "biclusters.json";
    auto o = cdp::detail::open_output(out);
    cdp::save_biclusters(set, o);
    std::cout << set.size() << " biclusters -> " << out.string() << '\n';
    return 0;
}

int cmd_score(const std::string& est, const std::string& truth, const std::string& out_dir) {
    const auto a = cdp::load_biclusters(est);
    const auto b = cdp::load_biclusters(truth);
    const double j = cdp::jaccard_score(a, b);
    std::cout << std::setprecision(17) << j << '\n';
    if (!out_dir.empty())
        cdp::write_json({{"jaccard", j}, {"estimated", est}, {"truth", truth}, {"n_estimated", a.size()}, {"n_truth", b.size()}},
                        fs::path(out_dir) / "score.json");
    return 0;
}

int cmd_benchmark(std::vector<int> cases, std::vector<std::uint64_t> seeds, bool heatmaps, const Shared& s) {
    auto cfg = resolve(s, cdp::synthetic_defaults());
    if (!cases.empty()) cfg.cases = cases;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (cfg.seeds.empty()) cfg.seeds = cdp::synthetic_defaults().seeds;
    cdp::validate(cfg);

    struct Job {
        int case_id;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (int c : cfg.cases)
        for (auto sd : cfg.seeds) jobs.push_back({c, sd});
    // Runs are the unit of parallelism; each run is single-threaded.
    cdp::RunConfig per_run = cfg;
    per_run.workers = 1;
    std::vector<cdp::RunResult> results(jobs.size());
    const fs::path dir = cfg.out_dir;
    cdp::parallel_for(jobs.size(), cfg.serial ? 1 : cfg.workers, [&](std::size_t k) {
        cdp::FitOutcome fit;
        cdp::Simulation sim;
        results[k] = cdp::benchmark_run(jobs[k].case_id, jobs[k].seed, per_run, &fit, &sim);
        if (results[k].failed) return;
        const fs::path run_dir = dir / ("case" + std::to_string(jobs[k].case_id)) / ("seed" + std::to_string(jobs[k].seed));
        cdp::write_simulation(sim, run_dir);
        cdp::write_fit_outputs(fit, run_dir);
        if (heatmaps) cdp::write_heatmaps(sim.matrix, run_dir / "heatmap");
    });
    const auto rows = cdp::benchmark_report(results);
    {
        auto o = cdp::detail::open_output(dir / "report.csv");
        cdp::write_report_csv(rows, o);
    }
    cdp::write_json(cdp::report_json(rows, results), dir / "report.json");
    cdp::write_report_csv(rows, std::cout);
    std::size_t failures = 0;
    for (const auto& r : results) failures += r.failed;
    if (failures) std::cerr << failures << " run(s) failed\n";
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* lvl = std::getenv("CDP_LOG_LEVEL")) cdp::log::set_level(cdp::log::parse_level(lvl));

    CLI::App app{"Conjoined Dirichlet process biclustering"};
    app.require_subcommand(1);

    Shared sim_s, fit_s, ext_s, bench_s;
    int case_id = 0;
    bool sim_heatmap = false;
    auto* sim = app.add_subcommand("simulate", "Write a synthetic matrix and its planted biclusters");
    sim->add_option("--case", case_id, "Simulation case 1-4")->required()->check(CLI::Range(1, 4));
    sim->add_flag("--heatmap", sim_heatmap, "Also write heatmap.csv and heatmap.pgm");
    add_shared(sim, sim_s, false);

    std::string matrix, format;
    bool labels = false, merge_labels = false;
    auto* fit = app.add_subcommand("fit", "Fit the model to a count matrix");
    fit->add_option("--matrix", matrix, "MatrixMarket (.mtx) or dense CSV file");
    fit->add_option("--format", format, "mtx, csv or auto")->check(CLI::IsMember({"mtx", "csv", "auto"}));
    fit->add_flag("--labels", labels, "CSV has a header row and label column");
    fit->add_flag("--merge-duplicate-labels", merge_labels, "Sum rows that share a label");
    add_shared(fit, fit_s);

    std::string model_path;
    std::optional<double> tau_theta, tau_row, tau_col;
    auto* ext = app.add_subcommand("extract", "Extract biclusters from a saved model");
    ext->add_option("--model", model_path, "model.json written by fit")->required()->check(CLI::ExistingFile);
    ext->add_option("--tau-theta", tau_theta, "Heavy pair threshold relative to max theta");
    ext->add_option("--tau-row", tau_row, "Row membership threshold");
    ext->add_option("--tau-col", tau_col, "Column membership threshold");
    add_shared(ext, ext_s);

    std::string est, truth, score_dir;
    auto* score = app.add_subcommand("score", "Jaccard score of estimated against true biclusters");
    score->add_option("--estimated", est, "Estimated bicluster JSON")->required()->check(CLI::ExistingFile);
    score->add_option("--truth", truth, "True bicluster JSON")->required()->check(CLI::ExistingFile);
    score->add_option("--out-dir", score_dir, "Also write score.json here");

    std::vector<int> cases;
    std::vector<std::uint64_t> seeds;
    bool bench_heatmaps = false;
    auto* bench = app.add_subcommand("benchmark", "Simulate, fit and score over cases and seeds");
    bench->add_option("--cases", cases, "Cases, e.g. 1,2,3,4")->delimiter(',')->check(CLI::Range(1, 4));
    bench->add_option("--seeds", seeds, "Seeds, e.g. 1,2,3")->delimiter(',');
    bench->add_flag("--heatmaps", bench_heatmaps, "Write heatmap.csv/.pgm per run");
    add_shared(bench, bench_s, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) return cmd_simulate(case_id, sim_s, sim_heatmap);
        if (*fit) return cmd_fit(matrix, format, labels, merge_labels, fit_s);
        if (*ext) return cmd_extract(model_path, tau_theta, tau_row, tau_col, ext_s);
        if (*score) return cmd_score(est, truth, score_dir);
        if (*bench) return cmd_benchmark(cases, seeds, bench_heatmaps, bench_s);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
