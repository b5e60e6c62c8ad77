// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "cdp/cdp.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace cdp;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CaseRuns {
    std::vector<RunResult> results;
    std::vector<CdpModel> models;
};

/// The synthetic benchmark with the shipped configuration, one worker per run.
std::map<int, CaseRuns> run_benchmark(const RunConfig& cfg) {
    std::map<int, CaseRuns> out;
    for (int c : cfg.cases)
        for (auto seed : cfg.seeds) {
            FitOutcome f;
            auto r = benchmark_run(c, seed, cfg, &f);
            out[c].results.push_back(r);
            if (!r.failed) out[c].models.push_back(f.fit.model);
        }
    return out;
}

double mean_jaccard(const CaseRuns& runs) {
    double s = 0.0;
    for (const auto& r : runs.results) s += r.jaccard;
    return s / static_cast<double>(runs.results.size());
}

std::size_t failures(const CaseRuns& runs) {
    std::size_t n = 0;
    for (const auto& r : runs.results) n += r.failed;
    return n;
}

Verdict criterion1(const CaseRuns& c2) {
    const double j = mean_jaccard(c2);
    double worst = 0.0;
    for (const auto& r : c2.results) worst = std::max(worst, r.runtime_s);
    return {j >= 0.85 && worst <= 60.0 && failures(c2) == 0,
            "case 2 mean Jaccard " + fmt(j) + " (need >= 0.85), slowest run " + fmt(worst, 2) + " s (need <= 60 s)"};
}

Verdict criterion2(const CaseRuns& c4) {
    const double j = mean_jaccard(c4);
    std::size_t five = 0;
    for (const auto& r : c4.results) five += !r.failed && r.n_biclusters == 5;
    return {j >= 0.65 && five >= 7,
            "case 4 mean Jaccard " + fmt(j) + " (need >= 0.65), exactly 5 biclusters in " + std::to_string(five) + "/" +
                std::to_string(c4.results.size()) + " seeds (need >= 7)"};
}

Verdict criterion3(const CaseRuns& c1, const CaseRuns& c3) {
    const double j1 = mean_jaccard(c1), j3 = mean_jaccard(c3);
    return {j1 >= 0.55 && j3 >= 0.18,
            "case 1 mean Jaccard " + fmt(j1) + " (need >= 0.55), case 3 mean Jaccard " + fmt(j3) + " (need >= 0.18)"};
}

Verdict criterion4() {
    const std::vector<std::vector<count_t>> x{{3, 0, 1}, {2, 1, 0}, {0, 3, 1}, {0, 2, 2}, {1, 1, 1}};
    const double gamma = 1.0;
    const std::vector<double> beta(3, 0.5);
    std::vector<Entry> es;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (x[i][j]) es.push_back({static_cast<index_t>(i), static_cast<index_t>(j), x[i][j]});
    const auto m = SparseCountMatrix::from_triplets(x.size(), 3, es);
    std::vector<std::vector<std::uint64_t>> xs(x.begin(), x.end());
    const auto exact = oracle::partition_posterior(xs, gamma, beta);

    const std::size_t burn = 1000, kept = 50000;
    DpmmConfig cfg;
    cfg.gamma = gamma;
    cfg.beta = beta;
    cfg.iterations = burn + kept;
    cfg.seed = 2024;
    const auto t0 = std::chrono::steady_clock::now();
    const auto trace = run_dpmm(m, cfg);
    const double secs = elapsed(t0);

    std::map<std::vector<int>, double> emp;
    for (std::size_t it = burn; it < trace.size(); ++it) emp[oracle::canonical(trace.labels[it])] += 1.0 / kept;
    double tv = 0.0;
    for (const auto& [p, q] : exact) tv += std::abs(q - (emp.count(p) ? emp[p] : 0.0));
    tv /= 2.0;
    return {exact.size() == 52 && tv <= 0.05 && secs <= 120.0,
            std::to_string(exact.size()) + " partitions, TV distance " + fmt(tv) + " (need <= 0.05) over " + std::to_string(kept) +
                " post-burn-in iterations in " + fmt(secs, 2) + " s (need <= 120 s)"};
}

Verdict criterion5() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) worst = std::max(worst, fixture::theorem1_max_error(fixture::random_token_config(1000 + s)));
    return {worst <= 1e-12, "20 configurations, largest componentwise gap " + [&] {
                std::ostringstream o;
                o << std::scientific << std::setprecision(2) << worst;
                return o.str();
            }() + " (need <= 1e-12), both directions"};
}

/// Largest normalization error of a model: phi columns, theta, and the
/// joint probability summed over all cells.
struct NormErrors {
    double phi = 0.0, theta = 0.0, joint = 0.0;
};

NormErrors normalization_errors(const CdpModel& m) {
    NormErrors e;
    for (const Grid<double>* phi : {&m.phi_r, &m.phi_c})
        for (std::size_t k = 0; k < phi->cols(); ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < phi->rows(); ++r) s += (*phi)(r, k);
            e.phi = std::max(e.phi, std::abs(s - 1.0));
        }
    double t = 0.0;
    for (double v : m.theta.flat()) t += v;
    e.theta = std::abs(t - 1.0);
    double j = 0.0;
    for (std::size_t r = 0; r < m.phi_r.rows(); ++r)
        for (std::size_t c = 0; c < m.phi_c.rows(); ++c) j += joint_prob(m, r, c);
    e.joint = std::abs(j - 1.0);
    return e;
}

Verdict criterion6(const std::map<int, CaseRuns>& bench, RunConfig cfg) {
    NormErrors worst;
    std::size_t models = 0;
    for (const auto& [c, runs] : bench)
        for (const auto& m : runs.models) {
            const auto e = normalization_errors(m);
            worst.phi = std::max(worst.phi, e.phi);
            worst.theta = std::max(worst.theta, e.theta);
            worst.joint = std::max(worst.joint, e.joint);
            ++models;
        }
    // Instrumented runs: every DPMM iteration and every sweep checks its
    // sufficient statistics against a recount and throws on mismatch.
    cfg.check_invariants = true;
    std::size_t instrumented = 0, violations = 0;
    for (int c : cfg.cases) {
        try {
            auto sim = simulate_case(c, 1);
            fit_matrix(sim.matrix, cfg, 1);
            ++instrumented;
        } catch (const std::logic_error& e) {
            ++violations;
            std::cerr << "case " << c << ": " << e.what() << '\n';
        }
    }
    std::size_t expected = 0;
    for (const auto& [c, runs] : bench) expected += runs.results.size();
    const bool ok = models == expected && worst.phi <= 1e-9 && worst.theta <= 1e-9 && worst.joint <= 1e-6 && violations == 0;
    std::ostringstream o;
    o << std::scientific << std::setprecision(2) << models << " models, max error phi " << worst.phi << " theta " << worst.theta
      << " joint " << worst.joint << "; " << instrumented << " instrumented fits, " << violations << " invariant violations";
    return {ok, o.str()};
}

Verdict criterion7() {
    const CellSet a{{0, 0}, {0, 1}, {1, 0}, {1, 1}}, b{{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    const Bicluster A = make_bicluster({0, 1}, {0, 1}), B = make_bicluster({1, 2}, {1, 2}), D = make_bicluster({7, 8}, {7, 8});
    bool hand = jaccard_pair(a, b) == 1.0 / 7.0 && jaccard_pair(A, B) == 1.0 / 7.0 && jaccard_pair(A, A) == 1.0 &&
                jaccard_pair(A, D) == 0.0 && jaccard_pair(CellSet{}, CellSet{}) == 0.0 && jaccard_score({A, B}, {A, B}) == 1.0 &&
                jaccard_score({A}, {A, D}) == 0.5 && jaccard_score({A}, {D}) == 0.0;
    Rng rng(7);
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto s1 = fixture::random_bicluster_set(rng), s2 = fixture::random_bicluster_set(rng);
        const double j12 = jaccard_score(s1, s2), j21 = jaccard_score(s2, s1);
        const double ref = oracle::jaccard_sets(fixture::cell_sets(s1), fixture::cell_sets(s2));
        worst = std::max(worst, std::abs(j12 - ref));
        bad += j12 != j21 || j12 < 0.0 || j12 > 1.0;
    }
    return {hand && bad == 0 && worst <= 1e-15,
            std::string("hand examples ") + (hand ? "exact" : "MISMATCH") + "; 1000 random pairs: " + std::to_string(bad) +
                " symmetry/bound violations, max gap to enumeration " + fmt(worst, 17)};
}

/// Mutual-update time for N tokens spread over a fixed set of J cells with
/// fixed topic counts.
double sweep_seconds(std::size_t n_tokens) {
    const std::size_t side = 200, cells = 2000, k = 5, sweeps = 10;
    Rng rng(31);
    std::vector<Entry> es;
    std::vector<bool> used(side * side, false);
    while (es.size() < cells) {
        const std::size_t idx = rng.below(side * side);
        if (used[idx]) continue;
        used[idx] = true;
        es.push_back({static_cast<index_t>(idx / side), static_cast<index_t>(idx % side), n_tokens / cells});
    }
    const auto m = SparseCountMatrix::from_triplets(side, side, es);
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
        auto tk = to_tokens(m);
        std::vector<index_t> zr(side), zc(side);
        for (std::size_t i = 0; i < side; ++i) zr[i] = static_cast<index_t>(i % k), zc[i] = static_cast<index_t>((i / 7) % k);
        init_token_assignments(tk, zr, zc);
        const auto ix = index_tokens(tk, side, side);
        auto counts = build_counts(tk, side, side, k, k);
        CdpHyper h;
        h.seed = 5;
        h.lambda = 0.1;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t s = 0; s < sweeps; ++s) mutual_update_sweep(tk, ix, counts, h, s);
        best = std::min(best, elapsed(t0));
    }
    return best;
}

Verdict criterion8() {
    const std::vector<std::size_t> ns{10000, 20000, 40000, 80000};
    std::vector<double> lx, ly;
    std::string times;
    for (auto n : ns) {
        const double t = sweep_seconds(n);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(t));
        times += (times.empty() ? "" : ", ") + fmt(t * 1000.0, 1) + " ms";
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size(), my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    return {slope >= 0.8 && slope <= 1.3,
            "log-log slope " + fmt(slope, 3) + " (need 0.8-1.3); N = 1e4..8e4, J = 2000, K_r = K_c = 5: " + times};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int sh(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + CDP_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Verdict criterion9() {
    const fs::path dir = fs::temp_directory_path() / "cdp_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path log = dir / "log.txt";
    const std::string cfg = std::string(CDP_SOURCE_DIR) + "/configs/synthetic.json";
    std::size_t compared = 0, differing = 0, errors = 0;
    auto same = [&](const fs::path& a, const fs::path& b) {
        ++compared;
        if (!fs::exists(a) || slurp(a) != slurp(b)) ++differing;
    };
    for (int c : {2, 4}) {
        const fs::path sim = dir / ("sim" + std::to_string(c));
        errors += sh("simulate --case " + std::to_string(c) + " --seed 5 --out-dir " + sim.string(), log) != 0;
        for (const std::string mode : {"--serial", "--workers 4"}) {
            const std::string tag = mode == "--serial" ? "serial" : "parallel";
            fs::path out[2];
            for (int rep = 0; rep < 2; ++rep) {
                out[rep] = dir / ("fit" + std::to_string(c) + tag + std::to_string(rep));
                errors += sh("fit --matrix " + (sim / "matrix.mtx").string() + " --config " + cfg + " --seed 5 " + mode +
                                 " --out-dir " + out[rep].string(),
                             log) != 0;
                errors += sh("extract --model " + (out[rep] / "model.json").string() + " --tau-theta 0.3 --out-dir " +
                                 (out[rep] / "extract").string(),
                             log) != 0;
            }
            same(out[0] / "model.json", out[1] / "model.json");
            same(out[0] / "biclusters.json", out[1] / "biclusters.json");
            same(out[0] / "extract" / "biclusters.json", out[1] / "extract" / "biclusters.json");
        }
    }
    for (const std::string mode : {"--serial", "--workers 4"}) {
        fs::path out[2];
        for (int rep = 0; rep < 2; ++rep) {
            out[rep] = dir / ("bench" + std::string(mode == "--serial" ? "s" : "p") + std::to_string(rep));
            errors += sh("benchmark --cases 2,4 --seeds 1,2 " + mode + " --out-dir " + out[rep].string(), log) != 0;
        }
        for (const char* run : {"case2/seed1", "case4/seed2"}) {
            same(out[0] / run / "model.json", out[1] / run / "model.json");
            same(out[0] / run / "biclusters.json", out[1] / run / "biclusters.json");
        }
    }
    fs::remove_all(dir);
    return {errors == 0 && differing == 0,
            std::to_string(compared) + " repeated-output comparisons (fit, extract, benchmark; serial and parallel): " +
                std::to_string(differing) + " differ, " + std::to_string(errors) + " command errors"};
}

}  // namespace

int main() {
    log::set_level(log::Level::error);
    auto cfg = load_run_config(fs::path(CDP_SOURCE_DIR) / "configs" / "synthetic.json", synthetic_defaults());
    cfg.workers = 1;

    std::cout << "running synthetic benchmark: cases 1-4 x " << cfg.seeds.size() << " seeds" << std::endl;
    const auto t0 = std::chrono::steady_clock::now();
    const auto bench = run_benchmark(cfg);
    std::cout << "benchmark finished in " << fmt(elapsed(t0), 1) << " s" << std::endl;
    for (const auto& [c, runs] : bench) {
        std::cout << "  case " << c << ": per-seed Jaccard";
        for (const auto& r : runs.results) std::cout << ' ' << fmt(r.jaccard, 3);
        std::cout << '\n';
    }

    std::vector<std::pair<int, Verdict>> verdicts;
    verdicts.emplace_back(1, criterion1(bench.at(2)));
    verdicts.emplace_back(2, criterion2(bench.at(4)));
    verdicts.emplace_back(3, criterion3(bench.at(1), bench.at(3)));
    verdicts.emplace_back(4, criterion4());
    verdicts.emplace_back(5, criterion5());
    verdicts.emplace_back(6, criterion6(bench, cfg));
    verdicts.emplace_back(7, criterion7());
    verdicts.emplace_back(8, criterion8());
    verdicts.emplace_back(9, criterion9());

    bool all = true;
    for (const auto& [n, v] : verdicts) {
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << '\n';
        all &= v.pass;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
