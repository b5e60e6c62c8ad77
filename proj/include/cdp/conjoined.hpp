#pragma once

// The conjoined model: row and column DPMMs fix the topic counts and initial
// topics, token-level Gibbs updates couple the two through the joint
// row-topic × column-topic table, and the resulting count tables give
// phi_r, phi_c, theta and the heavy biclusters.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdp/bicluster.hpp"
#include "cdp/countmat.hpp"
#include "cdp/dpmm.hpp"
#include "cdp/grid.hpp"
#include "cdp/log.hpp"
#include "cdp/parallel.hpp"
#include "cdp/random.hpp"

namespace cdp {

enum class CountSource {
    /// Count tables from the final mutual-update sweep.
    final_sweep,
    /// Count tables summed over every sweep; priors are scaled by iter_u.
    all_sweeps,
};

inline std::string to_string(CountSource s) { return s == CountSource::final_sweep ? "final" : "all_sweeps"; }

inline CountSource parse_count_source(const std::string& s) {
    if (s == "final") return CountSource::final_sweep;
    if (s == "all_sweeps") return CountSource::all_sweeps;
    throw std::invalid_argument("count_source must be \"final\" or \"all_sweeps\", got \"" + s + "\"");
}

struct CdpHyper {
    double alpha_r = 0.0;
    double alpha_c = 0.0;
    double lambda = 0.0;
    std::size_t iter_u = 50;
    double tau_theta = 0.5;
    double tau_row = 0.2;
    double tau_col = 0.2;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Exact sequential token updates. Otherwise batches of tokens are
    /// updated in rounds of `sync_batches` against a snapshot of the shared
    /// counts.
    bool serial = false;
    std::size_t sync_batches = 16;
    CountSource count_source = CountSource::final_sweep;
};

inline void validate(const CdpHyper& h) {
    if (!(h.alpha_r >= 0.0) || !(h.alpha_c >= 0.0) || !(h.lambda >= 0.0))
        throw std::invalid_argument("cdp: alpha_r, alpha_c and lambda must be >= 0");
    if (h.iter_u < 1) throw std::invalid_argument("cdp: iter_u must be >= 1");
    for (double t : {h.tau_theta, h.tau_row, h.tau_col})
        if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("cdp: tau values must be in (0, 1]");
    if (h.workers < 1) throw std::invalid_argument("cdp: workers must be >= 1");
    if (h.sync_batches < 1) throw std::invalid_argument("cdp: sync_batches must be >= 1");
}

/// Token co-assignment counts. row_topic is n_R × K_r (C_nj), col_topic is
/// n_C × K_c (C_mi), joint is K_r × K_c (C_ij); total_r / total_c are the
/// per-topic token totals.
struct TopicCounts {
    Grid<count_t> row_topic;
    Grid<count_t> col_topic;
    Grid<count_t> joint;
    std::vector<count_t> total_r;
    std::vector<count_t> total_c;

    friend bool operator==(const TopicCounts&, const TopicCounts&) = default;
};

struct CdpModel {
    std::size_t k_r = 1;
    std::size_t k_c = 1;
    Grid<double> phi_r;
    Grid<double> phi_c;
    Grid<double> theta;
    Grid<count_t> count_r;
    Grid<count_t> count_c;
    Grid<count_t> count_joint;
};

/// Modal cluster count over the iterations after burn-in (ties go to the
/// smaller count) and the labels of the last such iteration.
struct MapEstimate {
    std::size_t k = 0;
    std::size_t iteration = 0;
    std::vector<index_t> labels;
};

inline MapEstimate map_k(const AssignmentTrace& trace, double burn_in_fraction) {
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
        throw std::invalid_argument("map_k: burn_in_fraction must be in [0, 1)");
    const auto start = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(trace.size()));
    if (start >= trace.size()) throw std::invalid_argument("map_k: no iterations after burn-in");
    std::map<std::size_t, std::size_t> freq;
    for (std::size_t it = start; it < trace.size(); ++it) ++freq[trace.num_clusters[it]];
    std::size_t best_k = 0, best_n = 0;
    for (auto [k, n] : freq)
        if (n > best_n) best_k = k, best_n = n;
    MapEstimate out;
    out.k = best_k;
    for (std::size_t it = trace.size(); it-- > start;)
        if (trace.num_clusters[it] == best_k) {
            out.iteration = it;
            out.labels = trace.labels[it];
            break;
        }
    return out;
}

/// Sets every token's topics from the labels of its row and column.
inline void init_token_assignments(TokenTable& tokens, std::span<const index_t> z_r, std::span<const index_t> z_c) {
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (tokens.row_of[t] >= z_r.size()) throw std::invalid_argument("missing row label for row " + std::to_string(tokens.row_of[t]));
        if (tokens.col_of[t] >= z_c.size()) throw std::invalid_argument("missing column label for column " + std::to_string(tokens.col_of[t]));
        tokens.zr[t] = z_r[tokens.row_of[t]];
        tokens.zc[t] = z_c[tokens.col_of[t]];
    }
}

inline TopicCounts build_counts(const TokenTable& tokens, std::size_t n_rows, std::size_t n_cols, std::size_t k_r, std::size_t k_c) {
    TopicCounts c{Grid<count_t>(n_rows, k_r), Grid<count_t>(n_cols, k_c), Grid<count_t>(k_r, k_c),
                  std::vector<count_t>(k_r, 0), std::vector<count_t>(k_c, 0)};
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const auto i = tokens.zr[t], j = tokens.zc[t];
        if (i >= k_r || j >= k_c) throw std::out_of_range("token topic out of range");
        ++c.row_topic(tokens.row_of[t], i);
        ++c.col_topic(tokens.col_of[t], j);
        ++c.joint(i, j);
        ++c.total_r[i];
        ++c.total_c[j];
    }
    return c;
}

namespace detail {

/// (C + alpha) / (total + n * alpha), or 1/n when the denominator vanishes.
inline double smoothed_share(count_t c, count_t total, double alpha, std::size_t n) {
    const double den = static_cast<double>(total) + static_cast<double>(n) * alpha;
    if (den <= 0.0) return 1.0 / static_cast<double>(n);
    return (static_cast<double>(c) + alpha) / den;
}

/// Normalizes in place; an all-zero vector becomes uniform and false is
/// returned.
inline bool normalize_or_uniform(std::span<double> p) {
    double s = 0.0;
    for (double x : p) s += x;
    if (!(s > 0.0)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return false;
    }
    for (double& x : p) x /= s;
    return true;
}

}  // namespace detail

/// Column-topic conditional for a token in column `col` whose row topic is
/// `zr`, from counts that exclude the token:
///   p(j) ∝ (C_col,j + alpha_c) / (sum_m C_m,j + n_C alpha_c) · (C_zr,j + lambda).
/// Writes the normalized vector to `out` and returns false if the uniform
/// fallback was used.
inline bool conditional_zc(std::size_t col, std::size_t zr, const TopicCounts& c, double alpha_c, double lambda,
                           std::span<double> out) {
    const std::size_t n_c = c.col_topic.rows();
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = detail::smoothed_share(c.col_topic(col, j), c.total_c[j], alpha_c, n_c) *
                 (static_cast<double>(c.joint(zr, j)) + lambda);
    return detail::normalize_or_uniform(out);
}

/// Row-topic conditional, the mirror image of conditional_zc:
///   p(i) ∝ (C_row,i + alpha_r) / (sum_n C_n,i + n_R alpha_r) · (C_i,zc + lambda).
inline bool conditional_zr(std::size_t row, std::size_t zc, const TopicCounts& c, double alpha_r, double lambda,
                           std::span<double> out) {
    const std::size_t n_r = c.row_topic.rows();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = detail::smoothed_share(c.row_topic(row, i), c.total_r[i], alpha_r, n_r) *
                 (static_cast<double>(c.joint(i, zc)) + lambda);
    return detail::normalize_or_uniform(out);
}

/// Token positions grouped by row and by column, for batch sweeps.
struct TokenIndex {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> by_row;
    std::vector<std::size_t> col_ptr;
    std::vector<std::size_t> by_col;
};

inline TokenIndex index_tokens(const TokenTable& tokens, std::size_t n_rows, std::size_t n_cols) {
    TokenIndex ix;
    auto group = [&](const std::vector<index_t>& key, std::size_t n, std::vector<std::size_t>& ptr, std::vector<std::size_t>& order) {
        ptr.assign(n + 1, 0);
        for (auto k : key) ++ptr[k + 1];
        for (std::size_t k = 0; k < n; ++k) ptr[k + 1] += ptr[k];
        order.resize(key.size());
        std::vector<std::size_t> fill(ptr.begin(), ptr.end() - 1);
        for (std::size_t t = 0; t < key.size(); ++t) order[fill[key[t]]++] = t;
    };
    group(tokens.row_of, n_rows, ix.row_ptr, ix.by_row);
    group(tokens.col_of, n_cols, ix.col_ptr, ix.by_col);
    return ix;
}

namespace detail {

/// Per-batch changes to the shared per-topic totals and joint table, with
/// the touched joint cells remembered so clearing is proportional to use.
struct SharedDelta {
    std::vector<std::int64_t> total;
    std::vector<std::int64_t> joint;
    std::vector<std::uint8_t> seen;
    std::vector<std::size_t> touched;

    void reset(std::size_t k_own, std::size_t joint_size) {
        if (total.size() != k_own) total.assign(k_own, 0);
        if (joint.size() != joint_size) {
            joint.assign(joint_size, 0);
            seen.assign(joint_size, 0);
            touched.clear();
        }
        std::fill(total.begin(), total.end(), 0);
        for (auto idx : touched) joint[idx] = 0, seen[idx] = 0;
        touched.clear();
    }
    void add_joint(std::size_t idx, std::int64_t v) {
        if (!seen[idx]) {
            seen[idx] = 1;
            touched.push_back(idx);
        }
        joint[idx] += v;
    }
};

enum class Side { rows, cols };

/// One phase of a sweep: every token gets a new row topic (Side::rows) or
/// column topic (Side::cols). Batches are rows or columns; each round of
/// `round` batches reads the counts as they were at the start of the round
/// plus its own changes, and the changes are merged after the round.
inline std::size_t mutual_phase(Side side, TokenTable& tokens, const TokenIndex& ix, TopicCounts& c, const CdpHyper& h,
                                std::size_t sweep, std::size_t round) {
    const bool rows = side == Side::rows;
    const std::size_t n_batches = rows ? c.row_topic.rows() : c.col_topic.rows();
    const std::size_t k_own = rows ? c.total_r.size() : c.total_c.size();
    const double alpha = rows ? h.alpha_r : h.alpha_c;
    const std::size_t n_own = n_batches;
    const auto& ptr = rows ? ix.row_ptr : ix.col_ptr;
    const auto& order = rows ? ix.by_row : ix.by_col;
    auto& own_topic = rows ? tokens.zr : tokens.zc;
    const auto& other_topic = rows ? tokens.zc : tokens.zr;
    Grid<count_t>& own_counts = rows ? c.row_topic : c.col_topic;
    std::vector<count_t>& totals = rows ? c.total_r : c.total_c;
    const std::size_t joint_cols = c.joint.cols();
    auto joint_index = [&](std::size_t own, std::size_t other) { return rows ? own * joint_cols + other : other * joint_cols + own; };

    std::vector<SharedDelta> deltas(std::min(round, n_batches));
    std::atomic<std::size_t> fallbacks{0};
    for (std::size_t first = 0; first < n_batches; first += round) {
        const std::size_t count = std::min(round, n_batches - first);
        parallel_for(count, h.serial ? 1 : h.workers, [&](std::size_t slot) {
            const std::size_t b = first + slot;
            SharedDelta& d = deltas[slot];
            d.reset(k_own, c.joint.flat().size());
            Rng rng(h.seed, {rows ? 1u : 2u, sweep, b});
            std::vector<double> p(k_own);
            const auto joint = c.joint.flat();
            for (std::size_t q = ptr[b]; q < ptr[b + 1]; ++q) {
                const std::size_t t = order[q];
                const std::size_t other = other_topic[t];
                const std::size_t old = own_topic[t];
                --own_counts(b, old);
                --d.total[old];
                d.add_joint(joint_index(old, other), -1);
                for (std::size_t k = 0; k < k_own; ++k) {
                    const auto tot = static_cast<count_t>(static_cast<std::int64_t>(totals[k]) + d.total[k]);
                    const std::size_t ji = joint_index(k, other);
                    const auto jc = static_cast<count_t>(static_cast<std::int64_t>(joint[ji]) + d.joint[ji]);
                    p[k] = smoothed_share(own_counts(b, k), tot, alpha, n_own) * (static_cast<double>(jc) + h.lambda);
                }
                if (!normalize_or_uniform(p)) fallbacks.fetch_add(1, std::memory_order_relaxed);
                const auto next = sample_discrete(p, rng);
                own_topic[t] = static_cast<index_t>(next);
                ++own_counts(b, next);
                ++d.total[next];
                d.add_joint(joint_index(next, other), 1);
            }
        });
        for (std::size_t slot = 0; slot < count; ++slot) {
            const SharedDelta& d = deltas[slot];
            for (std::size_t k = 0; k < k_own; ++k) totals[k] = static_cast<count_t>(static_cast<std::int64_t>(totals[k]) + d.total[k]);
            auto joint = c.joint.flat();
            for (auto idx : d.touched) joint[idx] = static_cast<count_t>(static_cast<std::int64_t>(joint[idx]) + d.joint[idx]);
        }
    }
    return fallbacks.load();
}

}  // namespace detail

/// One sweep: new row topics for all tokens, then new column topics.
/// Returns the number of tokens whose conditional was all zero and fell
/// back to uniform.
inline std::size_t mutual_update_sweep(TokenTable& tokens, const TokenIndex& ix, TopicCounts& counts, const CdpHyper& h,
                                       std::size_t sweep) {
    const std::size_t round = h.serial ? 1 : h.sync_batches;
    std::size_t fallbacks = detail::mutual_phase(detail::Side::rows, tokens, ix, counts, h, sweep, round);
    fallbacks += detail::mutual_phase(detail::Side::cols, tokens, ix, counts, h, sweep, round);
    if (fallbacks) log::warn("mutual update sweep ", sweep, ": ", fallbacks, " all-zero conditional(s) replaced by uniform");
    return fallbacks;
}

/// Throws std::logic_error if the counts disagree with the token topics.
inline void check_counts(const TokenTable& tokens, const TopicCounts& c) {
    if (!(build_counts(tokens, c.row_topic.rows(), c.col_topic.rows(), c.total_r.size(), c.total_c.size()) == c))
        throw std::logic_error("topic counts out of sync with token assignments");
}

namespace detail {

inline Grid<double> column_normalized(const Grid<count_t>& counts, double alpha) {
    const std::size_t n = counts.rows(), k = counts.cols();
    Grid<double> phi(n, k);
    bool guarded = false;
    for (std::size_t j = 0; j < k; ++j) {
        count_t total = 0;
        for (std::size_t r = 0; r < n; ++r) total += counts(r, j);
        const double den = static_cast<double>(total) + static_cast<double>(n) * alpha;
        for (std::size_t r = 0; r < n; ++r)
            phi(r, j) = den > 0.0 ? (static_cast<double>(counts(r, j)) + alpha) / den : 1.0 / static_cast<double>(n);
        guarded |= !(den > 0.0);
    }
    if (guarded) log::warn("empty topic with zero prior: uniform distribution used");
    return phi;
}

}  // namespace detail

/// phi_c[m, i] = (C_mi + alpha_c) / (sum_m' C_m'i + n_C alpha_c); a column
/// with zero denominator is uniform.
inline Grid<double> compute_phi_c(const Grid<count_t>& count_c, double alpha_c) { return detail::column_normalized(count_c, alpha_c); }

inline Grid<double> compute_phi_r(const Grid<count_t>& count_r, double alpha_r) { return detail::column_normalized(count_r, alpha_r); }

/// theta ∝ C_ij + lambda; uniform when everything is zero.
inline Grid<double> compute_theta(const Grid<count_t>& joint, double lambda) {
    Grid<double> theta(joint.rows(), joint.cols());
    double total = 0.0;
    for (std::size_t i = 0; i < joint.flat().size(); ++i) {
        theta.flat()[i] = static_cast<double>(joint.flat()[i]) + lambda;
        total += theta.flat()[i];
    }
    if (!(total > 0.0)) {
        log::warn("joint table is empty with zero prior: uniform theta used");
        theta.fill(1.0 / static_cast<double>(theta.flat().size()));
        return theta;
    }
    for (double& x : theta.flat()) x /= total;
    return theta;
}

/// P(r, c) = sum_i sum_j phi_r[r, i] phi_c[c, j] theta[i, j].
inline double joint_prob(const CdpModel& m, std::size_t r, std::size_t c) {
    if (r >= m.phi_r.rows() || c >= m.phi_c.rows()) throw std::out_of_range("joint_prob: index out of bounds");
    double s = 0.0;
    for (std::size_t i = 0; i < m.k_r; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < m.k_c; ++j) inner += m.phi_c(c, j) * m.theta(i, j);
        s += m.phi_r(r, i) * inner;
    }
    return s;
}

/// Builds phi_r, phi_c and theta from count tables. With count tables summed
/// over `sweeps` sweeps the priors are scaled by the same factor, which
/// equals smoothing the per-sweep average.
inline CdpModel model_from_counts(Grid<count_t> count_r, Grid<count_t> count_c, Grid<count_t> joint, const CdpHyper& h,
                                  std::size_t sweeps = 1) {
    CdpModel m;
    m.k_r = joint.rows();
    m.k_c = joint.cols();
    const auto s = static_cast<double>(sweeps);
    m.phi_r = compute_phi_r(count_r, h.alpha_r * s);
    m.phi_c = compute_phi_c(count_c, h.alpha_c * s);
    m.theta = compute_theta(joint, h.lambda * s);
    m.count_r = std::move(count_r);
    m.count_c = std::move(count_c);
    m.count_joint = std::move(joint);
    return m;
}

struct CdpTimings {
    double dpmm_rows_s = 0.0;
    double dpmm_cols_s = 0.0;
    double mutual_update_s = 0.0;
    double total_s = 0.0;
};

struct CdpFit {
    CdpModel model;
    TokenTable tokens;
    AssignmentTrace trace_r;
    AssignmentTrace trace_c;
    MapEstimate map_r;
    MapEstimate map_c;
    CdpTimings timings;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Relabels so that topics appear in order of first use, keeping the count.
inline void compact_labels(std::vector<index_t>& labels, std::size_t k) {
    std::vector<index_t> remap(k, static_cast<index_t>(-1));
    index_t next = 0;
    for (auto& l : labels) {
        if (remap[l] == static_cast<index_t>(-1)) remap[l] = next++;
        l = remap[l];
    }
}

}  // namespace detail

/// Runs the row DPMM (rows of m as points) and the column DPMM (rows of the
/// transpose), picks K_r, K_c and initial topics with map_k, runs iter_u
/// mutual-update sweeps and computes the model. The two DPMMs run
/// concurrently unless the run is serial.
inline CdpFit fit_cdp(const SparseCountMatrix& m, const DpmmConfig& cfg_r, const DpmmConfig& cfg_c, const CdpHyper& h,
                      bool check_invariants = false) {
    validate(h);
    validate(cfg_r);
    validate(cfg_c);
    const auto t0 = std::chrono::steady_clock::now();
    CdpFit fit;
    const SparseCountMatrix mt = transpose(m);
    auto run_rows = [&] {
        const auto t = std::chrono::steady_clock::now();
        fit.trace_r = run_dpmm(m, cfg_r);
        fit.timings.dpmm_rows_s = detail::seconds_since(t);
    };
    auto run_cols = [&] {
        const auto t = std::chrono::steady_clock::now();
        fit.trace_c = run_dpmm(mt, cfg_c);
        fit.timings.dpmm_cols_s = detail::seconds_since(t);
    };
    if (h.serial || h.workers <= 1) {
        run_rows();
        run_cols();
    } else {
        auto rows_done = std::async(std::launch::async, run_rows);
        run_cols();
        rows_done.get();
    }
    log::info("dpmm rows: ", fit.timings.dpmm_rows_s, " s, columns: ", fit.timings.dpmm_cols_s, " s");

    fit.map_r = map_k(fit.trace_r, cfg_r.burn_in_fraction);
    fit.map_c = map_k(fit.trace_c, cfg_c.burn_in_fraction);
    detail::compact_labels(fit.map_r.labels, fit.map_r.k);
    detail::compact_labels(fit.map_c.labels, fit.map_c.k);
    const std::size_t k_r = fit.map_r.k, k_c = fit.map_c.k;
    log::info("K_r = ", k_r, " (iteration ", fit.map_r.iteration, "), K_c = ", k_c, " (iteration ", fit.map_c.iteration, ")");

    const auto tu = std::chrono::steady_clock::now();
    fit.tokens = to_tokens(m);
    init_token_assignments(fit.tokens, fit.map_r.labels, fit.map_c.labels);
    const TokenIndex ix = index_tokens(fit.tokens, m.n_rows(), m.n_cols());
    TopicCounts counts = build_counts(fit.tokens, m.n_rows(), m.n_cols(), k_r, k_c);
    TopicCounts summed;
    const bool summing = h.count_source == CountSource::all_sweeps;
    if (summing)
        summed = TopicCounts{Grid<count_t>(m.n_rows(), k_r), Grid<count_t>(m.n_cols(), k_c), Grid<count_t>(k_r, k_c), {}, {}};
    for (std::size_t sweep = 0; sweep < h.iter_u; ++sweep) {
        mutual_update_sweep(fit.tokens, ix, counts, h, sweep);
        if (check_invariants) check_counts(fit.tokens, counts);
        if (summing) {
            auto add = [](Grid<count_t>& into, const Grid<count_t>& from) {
                for (std::size_t i = 0; i < into.flat().size(); ++i) into.flat()[i] += from.flat()[i];
            };
            add(summed.row_topic, counts.row_topic);
            add(summed.col_topic, counts.col_topic);
            add(summed.joint, counts.joint);
        }
    }
    fit.timings.mutual_update_s = detail::seconds_since(tu);
    log::info("mutual update: ", h.iter_u, " sweeps over ", fit.tokens.size(), " tokens in ", fit.timings.mutual_update_s, " s");

    if (summing)
        fit.model = model_from_counts(std::move(summed.row_topic), std::move(summed.col_topic), std::move(summed.joint), h, h.iter_u);
    else
        fit.model = model_from_counts(std::move(counts.row_topic), std::move(counts.col_topic), std::move(counts.joint), h);
    fit.timings.total_s = detail::seconds_since(t0);
    return fit;
}

/// Heavy pairs: theta[i, j] >= tau_theta · max(theta). Row n joins pair
/// (i, j) when count_r[n, i] / (row n's total) >= tau_row; columns likewise
/// with tau_col. Pairs with an empty row or column set are dropped. Output
/// is sorted by weight (descending), then by topic pair.
inline BiclusterSet extract_biclusters(const CdpModel& m, const CdpHyper& h) {
    const auto& th = m.theta.flat();
    const double max_theta = th.empty() ? 0.0 : *std::max_element(th.begin(), th.end());
    auto members = [](const Grid<count_t>& counts, std::size_t topic, double tau) {
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n < counts.rows(); ++n) {
            count_t total = 0;
            for (auto v : counts.row(n)) total += v;
            if (total > 0 && static_cast<double>(counts(n, topic)) >= tau * static_cast<double>(total)) out.push_back(n);
        }
        return out;
    };
    BiclusterSet out;
    for (std::size_t i = 0; i < m.k_r; ++i)
        for (std::size_t j = 0; j < m.k_c; ++j) {
            if (!(m.theta(i, j) >= h.tau_theta * max_theta) || m.theta(i, j) <= 0.0) continue;
            auto rows = members(m.count_r, i, h.tau_row);
            auto cols = members(m.count_c, j, h.tau_col);
            if (rows.empty() || cols.empty()) continue;
            out.push_back(make_bicluster(std::move(rows), std::move(cols), m.theta(i, j), std::array<std::size_t, 2>{i, j}));
        }
    std::stable_sort(out.begin(), out.end(), [](const Bicluster& a, const Bicluster& b) { return a.weight > b.weight; });
    if (out.empty()) log::warn("no heavy bicluster with nonempty rows and columns");
    return out;
}

namespace detail {

template <typename T>
nlohmann::json grid_json(const Grid<T>& g) {
    auto j = nlohmann::json::array();
    for (std::size_t r = 0; r < g.rows(); ++r) j.push_back(std::vector<T>(g.row(r).begin(), g.row(r).end()));
    return j;
}

}  // namespace detail

inline nlohmann::json to_json(const CdpHyper& h) {
    return {{"alpha_r", h.alpha_r},     {"alpha_c", h.alpha_c}, {"lambda", h.lambda},
            {"iter_u", h.iter_u},       {"tau_theta", h.tau_theta}, {"tau_row", h.tau_row},
            {"tau_col", h.tau_col},     {"seed", h.seed},       {"serial", h.serial},
            {"sync_batches", h.sync_batches}, {"count_source", to_string(h.count_source)}};
}

inline nlohmann::json to_json(const CdpModel& m) {
    return {{"K_r", m.k_r},
            {"K_c", m.k_c},
            {"phi_r", detail::grid_json(m.phi_r)},
            {"phi_c", detail::grid_json(m.phi_c)},
            {"theta", detail::grid_json(m.theta)},
            {"count_r", detail::grid_json(m.count_r)},
            {"count_c", detail::grid_json(m.count_c)},
            {"count_joint", detail::grid_json(m.count_joint)}};
}

namespace detail {

template <typename T>
Grid<T> grid_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw FormatError(std::string("model: ") + what + " must be a nonempty matrix");
    const std::size_t cols = j[0].size();
    Grid<T> g(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw FormatError(std::string("model: ") + what + " is ragged");
        for (std::size_t c = 0; c < cols; ++c) g(r, c) = j[r][c].get<T>();
    }
    return g;
}

}  // namespace detail

inline CdpModel model_from_json(const nlohmann::json& j) {
    try {
        CdpModel m;
        m.k_r = j.at("K_r").get<std::size_t>();
        m.k_c = j.at("K_c").get<std::size_t>();
        m.phi_r = detail::grid_from_json<double>(j.at("phi_r"), "phi_r");
        m.phi_c = detail::grid_from_json<double>(j.at("phi_c"), "phi_c");
        m.theta = detail::grid_from_json<double>(j.at("theta"), "theta");
        m.count_r = detail::grid_from_json<count_t>(j.at("count_r"), "count_r");
        m.count_c = detail::grid_from_json<count_t>(j.at("count_c"), "count_c");
        m.count_joint = detail::grid_from_json<count_t>(j.at("count_joint"), "count_joint");
        if (m.theta.rows() != m.k_r || m.theta.cols() != m.k_c || m.phi_r.cols() != m.k_r || m.phi_c.cols() != m.k_c ||
            m.count_r.cols() != m.k_r || m.count_c.cols() != m.k_c)
            throw FormatError("model: matrix shapes disagree with K_r, K_c");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

}  // namespace cdp
