#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdp/pipeline.hpp"

using namespace cdp;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(CDP_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, NewsgroupsSettings) {
    auto c = load_run_config(kConfigs / "newsgroups.json");
    EXPECT_EQ(c.rows.gamma, 10.0);
    EXPECT_EQ(c.rows.beta, std::vector<double>{1.0});
    EXPECT_EQ(c.rows.iterations, 1000u);
    EXPECT_EQ(c.cols.gamma, 100.0);
    EXPECT_EQ(c.cols.beta, std::vector<double>{1.0});
    EXPECT_EQ(c.cols.iterations, 1000u);
}

TEST(Config, ScrnaSettings) {
    auto c = load_run_config(kConfigs / "scrna.json");
    EXPECT_EQ(c.rows.gamma, 10.0);
    EXPECT_EQ(c.rows.beta, std::vector<double>{0.1});
    EXPECT_EQ(c.rows.iterations, 500u);
    EXPECT_EQ(c.cols.gamma, 10.0);
    EXPECT_EQ(c.cols.beta, std::vector<double>{1.0});
    EXPECT_EQ(c.cols.iterations, 500u);
    EXPECT_TRUE(c.input.has_labels);
}

TEST(Config, SyntheticMatchesDefaults) {
    auto file = load_run_config(kConfigs / "synthetic.json", synthetic_defaults());
    auto def = synthetic_defaults();
    EXPECT_EQ(to_json(file).dump(), to_json(def).dump());
    EXPECT_EQ(file.seeds, def.seeds);
}

TEST(Config, OverridesKeepBase) {
    RunConfig base;
    base.rows.gamma = 3.0;
    auto c = parse_run_config(nlohmann::json::parse(R"({"cols":{"gamma":2},"cdp":{"lambda":0.5},"seed":9})"), base);
    EXPECT_EQ(c.rows.gamma, 3.0);
    EXPECT_EQ(c.cols.gamma, 2.0);
    EXPECT_EQ(c.cdp.lambda, 0.5);
    EXPECT_EQ(c.seed, 9u);
}

TEST(Config, Rejections) {
    using nlohmann::json;
    EXPECT_THROW(parse_run_config(json::parse(R"({"rows":{"gama":1}})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"colour":1})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"rows":{"gamma":-1}})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"cdp":{"tau_row":1.5}})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"cases":[5]})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"orientation":"sideways"})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse(R"({"seed":"x"})")), std::invalid_argument);
    EXPECT_THROW(parse_run_config(json::parse("[]")), std::invalid_argument);

    const auto p = fs::temp_directory_path() / "cdp_bad_config.json";
    std::ofstream(p) << "{";
    try {
        load_run_config(p);
        ADD_FAILURE();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
    }
    fs::remove(p);
}

TEST(Pipeline, SeedsDiffer) {
    const auto s = derive_run_seeds(5);
    EXPECT_NE(s.rows, s.cols);
    EXPECT_NE(s.cols, s.cdp);
    EXPECT_EQ(derive_run_seeds(5).cdp, s.cdp);
}

TEST(Pipeline, InputIndicesUndoPreprocessingAndOrientation) {
    Preprocessed pre;
    pre.row_sources = {{0}, {2, 3}};
    pre.col_sources = {1, 4};
    BiclusterSet set{make_bicluster({1}, {0, 1}, 0.5)};
    auto same = to_input_indices(set, pre, Orientation::rows_are_parts);
    EXPECT_EQ(same[0].rows, (std::vector<std::size_t>{2, 3}));
    EXPECT_EQ(same[0].cols, (std::vector<std::size_t>{1, 4}));
    auto swapped = to_input_indices(set, pre, Orientation::rows_are_composites);
    EXPECT_EQ(swapped[0].rows, (std::vector<std::size_t>{1, 4}));
    EXPECT_EQ(swapped[0].cols, (std::vector<std::size_t>{2, 3}));
}

TEST(Pipeline, FitIsDeterministicAndOrientationAware) {
    auto sim = simulate_case(2, 3);
    auto cfg = synthetic_defaults();
    cfg.rows.iterations = cfg.cols.iterations = 60;
    cfg.cdp.iter_u = 10;
    auto a = fit_matrix(sim.matrix, cfg, 3);
    auto b = fit_matrix(sim.matrix, cfg, 3);
    EXPECT_EQ(model_document(a).dump(), model_document(b).dump());
    EXPECT_EQ(a.biclusters, b.biclusters);

    cfg.orientation = Orientation::rows_are_composites;
    auto t = fit_matrix(transpose(sim.matrix), cfg, 3);
    ASSERT_EQ(t.biclusters.size(), a.biclusters.size());
    for (std::size_t k = 0; k < a.biclusters.size(); ++k) {
        EXPECT_EQ(t.biclusters[k].rows, a.biclusters[k].cols);
        EXPECT_EQ(t.biclusters[k].cols, a.biclusters[k].rows);
    }
}

TEST(Pipeline, OutputsOnDisk) {
    const auto dir = fs::temp_directory_path() / "cdp_pipeline_test";
    fs::remove_all(dir);
    auto sim = simulate_case(2, 1);
    write_simulation(sim, dir);
    write_heatmaps(sim.matrix, dir / "heatmap");
    EXPECT_EQ(load_matrix_market(dir / "matrix.mtx"), sim.matrix);
    EXPECT_EQ(load_biclusters(dir / "truth.json"), sim.truth);
    const auto pgm = slurp(dir / "heatmap.pgm");
    EXPECT_EQ(pgm.substr(0, 3), "P5\n");
    std::istringstream hdr(pgm.substr(3));
    std::size_t w = 0, h = 0, maxv = 0;
    hdr >> w >> h >> maxv;
    EXPECT_EQ(w, 20u);
    EXPECT_EQ(h, 20u);
    EXPECT_EQ(maxv, 255u);
    EXPECT_EQ(load_dense_csv(dir / "heatmap.csv", false), sim.matrix);

    auto cfg = synthetic_defaults();
    cfg.rows.iterations = cfg.cols.iterations = 40;
    cfg.cdp.iter_u = 5;
    auto f = fit_matrix(sim.matrix, cfg, 1);
    write_fit_outputs(f, dir / "fit");
    for (const char* name : {"model.json", "biclusters.json", "trace_rows.csv", "trace_rows_k.csv", "trace_cols.csv",
                             "trace_cols_k.csv", "run.json"})
        EXPECT_TRUE(fs::exists(dir / "fit" / name)) << name;
    EXPECT_EQ(load_biclusters(dir / "fit" / "biclusters.json", 20, 20), f.biclusters);
    const auto model = nlohmann::json::parse(slurp(dir / "fit" / "model.json"));
    EXPECT_FALSE(model.contains("fit_s"));
    EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "fit" / "run.json")).contains("fit_s"));
    fs::remove_all(dir);
}

TEST(Pipeline, BenchmarkRunRecordsFailure) {
    auto cfg = synthetic_defaults();
    cfg.rows.iterations = cfg.cols.iterations = 30;
    cfg.cdp.iter_u = 3;
    auto ok = benchmark_run(2, 1, cfg);
    EXPECT_FALSE(ok.failed);
    EXPECT_GE(ok.jaccard, 0.0);
    auto bad = benchmark_run(9, 1, cfg);
    EXPECT_TRUE(bad.failed);
    EXPECT_EQ(bad.jaccard, 0.0);
}
