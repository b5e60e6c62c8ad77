#pragma once

// Dirichlet-process mixture of multinomials. Each iteration draws the
// instantiated weights and parameters, runs a restricted Gibbs sweep over
// the occupied clusters (data-parallel), then proposes split/merge moves
// built from two-way sub-cluster launches. Every data point is one row of a
// SparseCountMatrix.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/countmat.hpp"
#include "cdp/log.hpp"
#include "cdp/parallel.hpp"
#include "cdp/random.hpp"

namespace cdp {

struct DpmmConfig {
    double gamma = 1.0;
    /// One entry broadcasts to a symmetric prior over all categories.
    std::vector<double> beta{1.0};
    std::size_t iterations = 100;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    double burn_in_fraction = 0.5;
    /// Split/merge proposals per iteration. Must not depend on the state.
    std::size_t moves_per_iteration = 4;
    /// Sub-cluster Gibbs sweeps used to build each split/merge launch.
    std::size_t launch_sweeps = 3;
    /// Recompute and verify all sufficient statistics after every phase.
    bool check_invariants = false;
};

inline void validate(const DpmmConfig& cfg) {
    if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw std::invalid_argument("dpmm: gamma must be > 0");
    if (cfg.beta.empty()) throw std::invalid_argument("dpmm: beta must not be empty");
    for (double b : cfg.beta)
        if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("dpmm: every beta component must be > 0");
    if (cfg.iterations < 1) throw std::invalid_argument("dpmm: iterations must be >= 1");
    if (cfg.workers < 1) throw std::invalid_argument("dpmm: workers must be >= 1");
    if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0))
        throw std::invalid_argument("dpmm: burn_in_fraction must be in [0, 1)");
}

inline std::vector<double> expand_beta(const std::vector<double>& beta, std::size_t dim) {
    if (beta.size() == 1) return std::vector<double>(dim, beta.front());
    if (beta.size() != dim)
        throw std::invalid_argument("dpmm: beta has " + std::to_string(beta.size()) + " components, data has " +
                                    std::to_string(dim) + " categories");
    return beta;
}

/// log of the Dirichlet-multinomial marginal of an exchangeable count
/// sequence with statistic `stat`:
///   lgamma(sum beta) - lgamma(sum beta + n) + sum_j [lgamma(beta_j + T_j) - lgamma(beta_j)].
/// The multinomial coefficient is omitted; it cancels in every ratio.
inline double log_marginal_dirmult(std::span<const count_t> stat, std::span<const double> beta, double beta_sum) {
    double n = 0.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < stat.size(); ++j) {
        if (stat[j] == 0) continue;
        const auto t = static_cast<double>(stat[j]);
        n += t;
        acc += std::lgamma(beta[j] + t) - std::lgamma(beta[j]);
    }
    if (n == 0.0) return 0.0;
    return std::lgamma(beta_sum) - std::lgamma(beta_sum + n) + acc;
}

inline double log_marginal_dirmult(std::span<const count_t> stat, std::span<const double> beta) {
    return log_marginal_dirmult(stat, beta, std::accumulate(beta.begin(), beta.end(), 0.0));
}

/// A mixture component: member count N, sufficient statistic T (elementwise
/// sum of member count vectors), log multinomial parameter and log weight.
struct SubCluster {
    std::size_t count = 0;
    std::vector<count_t> stat;
    std::vector<double> log_param;
    double log_weight = 0.0;
};

struct ClusterState {
    std::size_t count = 0;
    std::vector<count_t> stat;
    std::vector<double> log_param;
    double log_weight = 0.0;
};

struct DpmmState {
    std::size_t dim = 0;
    std::vector<ClusterState> clusters;
    std::vector<index_t> labels;

    std::size_t num_clusters() const noexcept { return clusters.size(); }
};

/// Two-way sub-cluster split of a set of points, built by a short
/// restricted Gibbs run with two anchor points pinned to opposite sides.
/// After launch_subclusters, `sub[h].log_param/log_weight` hold the
/// parameters from which split proposals are drawn.
struct SubClusterLaunch {
    std::vector<index_t> members;
    std::vector<std::uint8_t> side;
    std::size_t anchor_left = 0;   // position in `members`
    std::size_t anchor_right = 0;  // position in `members`
    std::array<SubCluster, 2> sub;
};

struct AssignmentTrace {
    /// labels[it][i] is the compacted cluster of point i after iteration it.
    std::vector<std::vector<index_t>> labels;
    std::vector<std::size_t> num_clusters;

    std::size_t size() const noexcept { return labels.size(); }
};

namespace detail {

inline ClusterState empty_cluster(std::size_t dim) {
    ClusterState c;
    c.stat.assign(dim, 0);
    c.log_param.assign(dim, -std::log(static_cast<double>(dim)));
    return c;
}

inline void add_point(std::vector<count_t>& stat, std::span<const Entry> point) {
    for (const Entry& e : point) stat[e.col] += e.count;
}

inline double point_loglik(std::span<const Entry> point, std::span<const double> log_param) {
    double s = 0.0;
    for (const Entry& e : point) s += static_cast<double>(e.count) * log_param[e.col];
    return s;
}

inline void draw_log_param(std::span<const count_t> stat, std::span<const double> beta, Rng& rng,
                           std::vector<double>& out, std::vector<double>& scratch) {
    scratch.resize(stat.size());
    for (std::size_t j = 0; j < stat.size(); ++j) scratch[j] = beta[j] + static_cast<double>(stat[j]);
    out.resize(stat.size());
    sample_log_dirichlet(scratch, rng, out);
}

constexpr std::size_t kAssignBlock = 256;
constexpr std::size_t kIndependentAttempts = 3;

}  // namespace detail

/// Recomputes every count and statistic from the labels.
inline void rebuild_statistics(const SparseCountMatrix& points, DpmmState& state) {
    for (auto& c : state.clusters) {
        c.count = 0;
        std::fill(c.stat.begin(), c.stat.end(), 0);
    }
    for (std::size_t i = 0; i < points.n_rows(); ++i) {
        auto& c = state.clusters[state.labels[i]];
        ++c.count;
        detail::add_point(c.stat, points.row(i));
    }
}

/// A single cluster holding every point.
inline DpmmState initial_state(const SparseCountMatrix& points) {
    DpmmState st;
    st.dim = points.n_cols();
    st.clusters.push_back(detail::empty_cluster(st.dim));
    st.labels.assign(points.n_rows(), 0);
    rebuild_statistics(points, st);
    return st;
}

/// Throws std::logic_error when counts, statistics, or parameter
/// normalization disagree with the labels, or when the category totals over
/// all clusters differ from those of the data.
inline void check_state(const SparseCountMatrix& points, const DpmmState& state) {
    auto fail = [](const std::string& what) { throw std::logic_error("dpmm invariant violated: " + what); };
    const std::size_t K = state.clusters.size();
    std::vector<std::size_t> n(K, 0);
    std::vector<std::vector<count_t>> t(K, std::vector<count_t>(state.dim, 0));
    std::vector<count_t> global(state.dim, 0), summed(state.dim, 0);
    for (std::size_t i = 0; i < points.n_rows(); ++i) {
        const auto k = state.labels[i];
        if (k >= K) fail("label out of range");
        ++n[k];
        detail::add_point(t[k], points.row(i));
        detail::add_point(global, points.row(i));
    }
    std::size_t total_points = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& c = state.clusters[k];
        if (c.count == 0) fail("empty cluster " + std::to_string(k));
        if (c.count != n[k] || c.stat != t[k]) fail("cluster " + std::to_string(k) + " statistics stale");
        total_points += c.count;
        for (std::size_t j = 0; j < state.dim; ++j) summed[j] += c.stat[j];
        double mass = 0.0;
        for (double lp : c.log_param) mass += std::exp(lp);
        if (std::abs(mass - 1.0) > 1e-9) fail("cluster parameter does not normalize");
    }
    if (total_points != points.n_rows()) fail("point count not conserved");
    if (summed != global) fail("category totals not conserved");
}

/// Draws the cluster weights from Dirichlet(N_1, ..., N_K, gamma) (the
/// trailing entry is the mass left to unoccupied clusters) and every
/// multinomial parameter from Dirichlet(beta + T_k). Cluster draws use
/// per-cluster streams, so the result does not depend on `workers`.
inline void sample_cluster_params(DpmmState& state, double gamma, std::span<const double> beta, Rng& rng,
                                  std::size_t workers = 1) {
    const std::size_t K = state.clusters.size();
    std::vector<double> conc(K + 1);
    for (std::size_t k = 0; k < K; ++k) {
        if (state.clusters[k].count == 0) throw std::logic_error("dpmm: empty cluster must be pruned before sampling");
        conc[k] = static_cast<double>(state.clusters[k].count);
    }
    conc[K] = gamma;
    auto w = sample_log_dirichlet(conc, rng);
    for (std::size_t k = 0; k < K; ++k) state.clusters[k].log_weight = w[k];

    const std::uint64_t key = rng();
    parallel_for(K, workers, [&](std::size_t k) {
        Rng local(key, {k});
        std::vector<double> scratch;
        detail::draw_log_param(state.clusters[k].stat, beta, local, state.clusters[k].log_param, scratch);
    });
}

struct AssignmentStats {
    std::size_t zero_points = 0;
    /// True when the independent draws kept emptying a cluster and the
    /// sequential sweep was used instead.
    bool sequential_fallback = false;
};

/// Restricted Gibbs update of every label: p(z_i = k) ∝ pi_k Mult(x_i | theta_k)
/// over the K occupied clusters, conditioned on no cluster becoming empty.
/// Labels are first drawn independently in fixed-size blocks with per-block
/// streams (parallel, independent of `workers`); a draw that empties a
/// cluster is discarded and retried a few times, after which a sequential
/// sweep that never moves the last member of a cluster is used. Points with
/// zero total are assigned uniformly at random.
inline AssignmentStats sample_assignments(const SparseCountMatrix& points, DpmmState& state, Rng& rng,
                                          std::size_t workers = 1) {
    const std::size_t n = points.n_rows();
    const std::size_t K = state.clusters.size();
    AssignmentStats stats;
    for (std::size_t i = 0; i < n; ++i)
        if (points.row(i).empty()) ++stats.zero_points;
    if (K == 1) return stats;

    auto scores_for = [&](std::size_t i, std::vector<double>& scores) {
        auto x = points.row(i);
        for (std::size_t k = 0; k < K; ++k)
            scores[k] = state.clusters[k].log_weight + detail::point_loglik(x, state.clusters[k].log_param);
    };

    const std::size_t blocks = (n + detail::kAssignBlock - 1) / detail::kAssignBlock;
    std::vector<index_t> proposal(n);
    for (std::size_t attempt = 0; attempt < detail::kIndependentAttempts; ++attempt) {
        const std::uint64_t key = rng();
        parallel_for(blocks, workers, [&](std::size_t b) {
            Rng local(key, {b});
            std::vector<double> scores(K), scratch;
            const std::size_t end = std::min(n, (b + 1) * detail::kAssignBlock);
            for (std::size_t i = b * detail::kAssignBlock; i < end; ++i) {
                if (points.row(i).empty()) {
                    proposal[i] = static_cast<index_t>(local.below(K));
                    continue;
                }
                scores_for(i, scores);
                proposal[i] = static_cast<index_t>(sample_log_discrete(scores, local, scratch));
            }
        });
        std::vector<std::size_t> occupancy(K, 0);
        for (auto l : proposal) ++occupancy[l];
        if (std::find(occupancy.begin(), occupancy.end(), 0) == occupancy.end()) {
            state.labels = std::move(proposal);
            rebuild_statistics(points, state);
            return stats;
        }
    }

    stats.sequential_fallback = true;
    std::vector<std::size_t> occupancy(K, 0);
    for (auto l : state.labels) ++occupancy[l];
    std::vector<double> scores(K), scratch;
    Rng seq(rng(), {});
    for (std::size_t i = 0; i < n; ++i) {
        const auto current = state.labels[i];
        if (occupancy[current] == 1) continue;
        std::size_t next;
        if (points.row(i).empty()) {
            next = seq.below(K);
        } else {
            scores_for(i, scores);
            next = sample_log_discrete(scores, seq, scratch);
        }
        --occupancy[current];
        ++occupancy[next];
        state.labels[i] = static_cast<index_t>(next);
    }
    rebuild_statistics(points, state);
    return stats;
}

/// Drops clusters with no points and compacts labels, preserving the order
/// of the survivors.
inline void prune_empty(DpmmState& state) {
    std::vector<index_t> remap(state.clusters.size());
    std::vector<ClusterState> kept;
    kept.reserve(state.clusters.size());
    for (std::size_t k = 0; k < state.clusters.size(); ++k) {
        if (state.clusters[k].count == 0) continue;
        remap[k] = static_cast<index_t>(kept.size());
        kept.push_back(std::move(state.clusters[k]));
    }
    const bool changed = kept.size() != state.clusters.size();
    state.clusters = std::move(kept);
    if (changed)
        for (auto& l : state.labels) l = remap[l];
}

/// log H_split for splitting a cluster into parts with counts n_left,
/// n_right and statistics stat_left, stat_right:
///   log gamma + lgamma(N_l) + lgamma(N_r) - lgamma(N_l + N_r) + f(T_l) + f(T_r) - f(T_l + T_r)
/// with f the Dirichlet-multinomial marginal. This is the posterior ratio
/// p(split partition) / p(merged partition). Returns -inf when either part
/// is empty (no split is possible).
inline double log_split_ratio(std::size_t n_left, std::span<const count_t> stat_left, std::size_t n_right,
                              std::span<const count_t> stat_right, double gamma, std::span<const double> beta,
                              double beta_sum) {
    if (n_left == 0 || n_right == 0) return -std::numeric_limits<double>::infinity();
    std::vector<count_t> merged(stat_left.begin(), stat_left.end());
    for (std::size_t j = 0; j < merged.size(); ++j) merged[j] += stat_right[j];
    const auto nl = static_cast<double>(n_left), nr = static_cast<double>(n_right);
    return std::log(gamma) + std::lgamma(nl) + std::lgamma(nr) - std::lgamma(nl + nr) +
           log_marginal_dirmult(stat_left, beta, beta_sum) + log_marginal_dirmult(stat_right, beta, beta_sum) -
           log_marginal_dirmult(merged, beta, beta_sum);
}

inline double log_split_ratio(std::size_t n_left, std::span<const count_t> stat_left, std::size_t n_right,
                              std::span<const count_t> stat_right, double gamma, std::span<const double> beta) {
    return log_split_ratio(n_left, stat_left, n_right, stat_right, gamma, beta,
                           std::accumulate(beta.begin(), beta.end(), 0.0));
}

/// log H_merge for joining clusters a and b: the reciprocal of the split
/// ratio with a and b as the two parts.
inline double log_merge_ratio(const ClusterState& a, const ClusterState& b, double gamma, std::span<const double> beta,
                              double beta_sum) {
    return -log_split_ratio(a.count, a.stat, b.count, b.stat, gamma, beta, beta_sum);
}

namespace detail {

inline void recount_launch(const SparseCountMatrix& points, SubClusterLaunch& launch) {
    for (auto& s : launch.sub) {
        s.count = 0;
        std::fill(s.stat.begin(), s.stat.end(), 0);
    }
    for (std::size_t m = 0; m < launch.members.size(); ++m) {
        auto& s = launch.sub[launch.side[m]];
        ++s.count;
        add_point(s.stat, points.row(launch.members[m]));
    }
}

/// Sub-cluster weights from Dirichlet(N_l + gamma/2, N_r + gamma/2) and
/// parameters from Dirichlet(beta + T_h).
inline void draw_launch_params(SubClusterLaunch& launch, double gamma, std::span<const double> beta, Rng& rng) {
    const std::array<double, 2> conc{static_cast<double>(launch.sub[0].count) + gamma / 2.0,
                                     static_cast<double>(launch.sub[1].count) + gamma / 2.0};
    auto w = sample_log_dirichlet(conc, rng);
    std::vector<double> scratch;
    for (int h = 0; h < 2; ++h) {
        launch.sub[h].log_weight = w[h];
        draw_log_param(launch.sub[h].stat, beta, rng, launch.sub[h].log_param, scratch);
    }
}

/// log p(side = 0) and log p(side = 1) for one point under the launch
/// parameters.
inline std::array<double, 2> side_log_probs(std::span<const Entry> x, const SubClusterLaunch& launch) {
    std::array<double, 2> s{launch.sub[0].log_weight + point_loglik(x, launch.sub[0].log_param),
                            launch.sub[1].log_weight + point_loglik(x, launch.sub[1].log_param)};
    const double norm = log_sum_exp(s);
    return {s[0] - norm, s[1] - norm};
}

}  // namespace detail

/// Builds a sub-cluster launch over `members`: anchors pinned left and right,
/// every other member starts on a uniformly random side, then `sweeps`
/// rounds of {draw sub-cluster weights and parameters, resample sides}, and a
/// final parameter draw. The outcome depends only on the member set, the
/// anchors and `rng`, never on how the members are currently clustered.
inline SubClusterLaunch launch_subclusters(const SparseCountMatrix& points, std::vector<index_t> members,
                                           std::size_t anchor_left, std::size_t anchor_right, double gamma,
                                           std::span<const double> beta, std::size_t sweeps, Rng& rng) {
    if (anchor_left == anchor_right) throw std::invalid_argument("launch anchors must differ");
    SubClusterLaunch launch;
    launch.members = std::move(members);
    launch.anchor_left = anchor_left;
    launch.anchor_right = anchor_right;
    launch.side.resize(launch.members.size());
    for (auto& s : launch.sub) s.stat.assign(points.n_cols(), 0);
    for (std::size_t m = 0; m < launch.members.size(); ++m)
        launch.side[m] = m == anchor_left ? 0 : m == anchor_right ? 1 : static_cast<std::uint8_t>(rng() & 1U);
    detail::recount_launch(points, launch);

    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        detail::draw_launch_params(launch, gamma, beta, rng);
        for (std::size_t m = 0; m < launch.members.size(); ++m) {
            if (m == anchor_left || m == anchor_right) continue;
            auto lp = detail::side_log_probs(points.row(launch.members[m]), launch);
            launch.side[m] = rng.uniform() < std::exp(lp[1]) ? 1 : 0;
        }
        detail::recount_launch(points, launch);
    }
    detail::draw_launch_params(launch, gamma, beta, rng);
    return launch;
}

/// log probability that one independent side draw from the launch
/// parameters reproduces `sides` (anchors excluded).
inline double log_proposal_prob(const SparseCountMatrix& points, const SubClusterLaunch& launch,
                                std::span<const std::uint8_t> sides) {
    double lp = 0.0;
    for (std::size_t m = 0; m < launch.members.size(); ++m) {
        if (m == launch.anchor_left || m == launch.anchor_right) continue;
        lp += detail::side_log_probs(points.row(launch.members[m]), launch)[sides[m]];
    }
    return lp;
}

/// Replaces cluster k by two clusters: members with side 0 keep index k,
/// members with side 1 move to a new cluster appended at the end. `sides`
/// is indexed like `members`, which must list exactly the members of k.
inline std::size_t split_cluster(const SparseCountMatrix& points, DpmmState& state, std::size_t k,
                                 std::span<const index_t> members, std::span<const std::uint8_t> sides) {
    const auto knew = static_cast<index_t>(state.clusters.size());
    auto fresh = detail::empty_cluster(state.dim);
    fresh.log_param = state.clusters[k].log_param;
    fresh.log_weight = state.clusters[k].log_weight - std::log(2.0);
    state.clusters[k].log_weight -= std::log(2.0);
    state.clusters.push_back(std::move(fresh));
    for (std::size_t m = 0; m < members.size(); ++m)
        if (sides[m] == 1) state.labels[members[m]] = knew;
    for (std::size_t c : {k, static_cast<std::size_t>(knew)}) {
        auto& cl = state.clusters[c];
        cl.count = 0;
        std::fill(cl.stat.begin(), cl.stat.end(), 0);
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
        auto& cl = state.clusters[state.labels[members[m]]];
        ++cl.count;
        detail::add_point(cl.stat, points.row(members[m]));
    }
    return knew;
}

/// Merges cluster b into cluster a and prunes the emptied b. The merged
/// cluster keeps a's parameter until the next parameter draw. Returns the
/// index of the merged cluster after pruning.
inline std::size_t merge_clusters(DpmmState& state, std::size_t a, std::size_t b) {
    if (a == b) throw std::invalid_argument("cannot merge a cluster with itself");
    auto& ca = state.clusters[a];
    auto& cb = state.clusters[b];
    ca.count += cb.count;
    for (std::size_t j = 0; j < state.dim; ++j) ca.stat[j] += cb.stat[j];
    ca.log_weight = log_sum_exp(std::array<double, 2>{ca.log_weight, cb.log_weight});
    cb.count = 0;
    std::fill(cb.stat.begin(), cb.stat.end(), 0);
    for (auto& l : state.labels)
        if (l == b) l = static_cast<index_t>(a);
    prune_empty(state);
    return a < b ? a : a - 1;
}

enum class MoveOutcome { rejected, split, merged };

/// One split/merge proposal. An ordered pair of distinct points (i, j) is
/// drawn uniformly. If they share a cluster, a launch over that cluster
/// proposes a split separating them, accepted with probability
/// min(1, H_split / q) where q is the probability of the proposed sides.
/// Otherwise a launch over the union of their clusters gives q for the
/// current two-cluster partition and the merge is accepted with probability
/// min(1, q / H_split). Both directions use the same launch construction, so
/// the move leaves the partition posterior invariant.
inline MoveOutcome propose_split_merge(const SparseCountMatrix& points, DpmmState& state, double gamma,
                                       std::span<const double> beta, std::size_t launch_sweeps, Rng& rng) {
    const std::size_t n = points.n_rows();
    if (n < 2) return MoveOutcome::rejected;
    const double beta_sum = std::accumulate(beta.begin(), beta.end(), 0.0);
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    const auto ci = state.labels[i], cj = state.labels[j];

    std::vector<index_t> members;
    std::vector<std::uint8_t> current;
    std::size_t pos_i = 0, pos_j = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (state.labels[p] != ci && state.labels[p] != cj) continue;
        if (p == i) pos_i = members.size();
        if (p == j) pos_j = members.size();
        members.push_back(static_cast<index_t>(p));
        current.push_back(state.labels[p] == ci ? 0 : 1);
    }
    auto launch = launch_subclusters(points, members, pos_i, pos_j, gamma, beta, launch_sweeps, rng);

    if (ci == cj) {
        std::vector<std::uint8_t> sides(members.size());
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (m == pos_i || m == pos_j) {
                sides[m] = m == pos_i ? 0 : 1;
                continue;
            }
            auto lp = detail::side_log_probs(points.row(members[m]), launch);
            sides[m] = rng.uniform() < std::exp(lp[1]) ? 1 : 0;
        }
        const double log_q = log_proposal_prob(points, launch, sides);
        SubClusterLaunch proposed = launch;
        proposed.side = sides;
        detail::recount_launch(points, proposed);
        const double log_h = log_split_ratio(proposed.sub[0].count, proposed.sub[0].stat, proposed.sub[1].count,
                                             proposed.sub[1].stat, gamma, beta, beta_sum);
        if (std::log(rng.uniform_pos()) < log_h - log_q) {
            split_cluster(points, state, ci, members, sides);
            return MoveOutcome::split;
        }
        return MoveOutcome::rejected;
    }

    const double log_q = log_proposal_prob(points, launch, current);
    const double log_h = -log_merge_ratio(state.clusters[ci], state.clusters[cj], gamma, beta, beta_sum);
    if (std::log(rng.uniform_pos()) < log_q - log_h) {
        merge_clusters(state, ci, cj);
        return MoveOutcome::merged;
    }
    return MoveOutcome::rejected;
}

/// Called after every iteration with the iteration index and the compacted
/// state.
using DpmmObserver = std::function<void(std::size_t, const DpmmState&)>;

/// Runs the sampler from a single all-points cluster and records the labels
/// after every iteration. Each iteration: parameter draw, restricted Gibbs
/// assignment sweep, then a round of split/merge proposals.
inline AssignmentTrace run_dpmm(const SparseCountMatrix& points, const DpmmConfig& cfg, const DpmmObserver& observer = {}) {
    validate(cfg);
    if (points.n_rows() == 0 || points.total() == 0)
        throw std::invalid_argument("dpmm: need at least one point with positive total");
    const auto beta = expand_beta(cfg.beta, points.n_cols());

    DpmmState state = initial_state(points);
    AssignmentTrace trace;
    trace.labels.reserve(cfg.iterations);
    trace.num_clusters.reserve(cfg.iterations);

    auto verify = [&] {
        if (cfg.check_invariants) check_state(points, state);
    };
    AssignmentStats last;
    std::size_t fallbacks = 0;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Rng params_rng(cfg.seed, {1, it});
        Rng assign_rng(cfg.seed, {2, it});
        Rng move_rng(cfg.seed, {3, it});

        sample_cluster_params(state, cfg.gamma, beta, params_rng, cfg.workers);
        verify();
        last = sample_assignments(points, state, assign_rng, cfg.workers);
        fallbacks += last.sequential_fallback;
        verify();
        for (std::size_t m = 0; m < cfg.moves_per_iteration; ++m) propose_split_merge(points, state, cfg.gamma, beta, cfg.launch_sweeps, move_rng);
        verify();

        trace.labels.push_back(state.labels);
        trace.num_clusters.push_back(state.clusters.size());
        if (observer) observer(it, state);
    }
    if (last.zero_points)
        log::warn("dpmm: ", last.zero_points, " point(s) with zero total were assigned uniformly at random each iteration");
    if (fallbacks) log::debug("dpmm: sequential assignment fallback used in ", fallbacks, " iteration(s)");
    return trace;
}

inline void write_trace_csv(const AssignmentTrace& trace, std::ostream& out) {
    out << "iteration,point_index,label\n";
    for (std::size_t it = 0; it < trace.size(); ++it)
        for (std::size_t i = 0; i < trace.labels[it].size(); ++i) out << it << ',' << i << ',' << trace.labels[it][i] << '\n';
}

inline void write_trace_summary_csv(const AssignmentTrace& trace, std::ostream& out) {
    out << "iteration,K\n";
    for (std::size_t it = 0; it < trace.size(); ++it) out << it << ',' << trace.num_clusters[it] << '\n';
}

}  // namespace cdp
