#pragma once

// Planted-bicluster count matrices: a probability matrix with mass p spread
// over a set of blocks, and one multinomial draw of N counts from it.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/bicluster.hpp"
#include "cdp/countmat.hpp"
#include "cdp/grid.hpp"
#include "cdp/random.hpp"

namespace cdp {

/// Half-open row range [row_begin, row_end) × column range [col_begin, col_end).
struct Block {
    std::size_t row_begin = 0, row_end = 0;
    std::size_t col_begin = 0, col_end = 0;

    std::size_t area() const noexcept { return (row_end - row_begin) * (col_end - col_begin); }
    bool contains(std::size_t r, std::size_t c) const noexcept {
        return r >= row_begin && r < row_end && c >= col_begin && c < col_end;
    }
    friend bool operator==(const Block&, const Block&) = default;
};

struct SynthSpec {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::uint64_t total = 0;
    double p = 0.5;
    std::vector<Block> blocks;
    std::uint64_t seed = 0;
};

inline void validate(const SynthSpec& spec) {
    if (spec.rows == 0 || spec.cols == 0) throw std::invalid_argument("synth: shape must be positive");
    if (!(spec.p > 0.0 && spec.p < 1.0)) throw std::invalid_argument("synth: p must be in (0, 1)");
    if (spec.blocks.empty()) throw std::invalid_argument("synth: at least one block required");
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
        const auto& bl = spec.blocks[b];
        if (bl.row_end > spec.rows || bl.col_end > spec.cols)
            throw std::invalid_argument("synth: block " + std::to_string(b) + " out of bounds");
        if (bl.row_begin >= bl.row_end || bl.col_begin >= bl.col_end)
            throw std::invalid_argument("synth: block " + std::to_string(b) + " has zero area");
    }
}

/// `count` square blocks of side `side` down the main diagonal starting at 0.
inline std::vector<Block> diagonal_blocks(std::size_t count, std::size_t side) {
    std::vector<Block> out;
    for (std::size_t b = 0; b < count; ++b) out.push_back({b * side, (b + 1) * side, b * side, (b + 1) * side});
    return out;
}

/// The four benchmark designs.
///   1: one block, N=4000, 50×50, p=0.8
///   2: two disjoint blocks, N=4000, 20×20, p=0.5
///   3: three blocks, the last two sharing half their rows and columns, N=4000, 50×50, p=0.7
///   4: five disjoint blocks, N=10000, 100×100, p=0.7
/// Cases 1-3 use side floor(min(R, C) / (blocks + 1)). Case 4 uses side 10,
/// which gives the intended ~70% zero cells (side 16 gives ~62%).
inline SynthSpec case_presets(int case_id, std::uint64_t seed = 0) {
    SynthSpec s;
    s.seed = seed;
    switch (case_id) {
        case 1:
            s.rows = s.cols = 50;
            s.total = 4000;
            s.p = 0.8;
            s.blocks = diagonal_blocks(1, 50 / 2);
            break;
        case 2:
            s.rows = s.cols = 20;
            s.total = 4000;
            s.p = 0.5;
            s.blocks = diagonal_blocks(2, 20 / 3);
            break;
        case 3: {
            s.rows = s.cols = 50;
            s.total = 4000;
            s.p = 0.7;
            const std::size_t side = 50 / 4;
            s.blocks = diagonal_blocks(2, side);
            const std::size_t start = side + side / 2;
            s.blocks.push_back({start, start + side, start, start + side});
            break;
        }
        case 4:
            s.rows = s.cols = 100;
            s.total = 10000;
            s.p = 0.7;
            s.blocks = diagonal_blocks(5, 10);
            break;
        default:
            throw std::invalid_argument("unknown simulation case " + std::to_string(case_id) + " (expected 1-4)");
    }
    return s;
}

/// Mass p / B spread uniformly over each block (overlapping cells collect
/// every covering block's share), 1 - p spread uniformly over cells outside
/// all blocks. If the blocks cover the whole matrix the block mass is
/// rescaled to 1.
inline Grid<double> make_theta(const SynthSpec& spec) {
    validate(spec);
    Grid<double> theta(spec.rows, spec.cols, 0.0);
    const double share = spec.p / static_cast<double>(spec.blocks.size());
    for (const auto& b : spec.blocks) {
        const double per_cell = share / static_cast<double>(b.area());
        for (std::size_t r = b.row_begin; r < b.row_end; ++r)
            for (std::size_t c = b.col_begin; c < b.col_end; ++c) theta(r, c) += per_cell;
    }
    std::size_t outside = 0;
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c)
            outside += std::none_of(spec.blocks.begin(), spec.blocks.end(), [&](const Block& b) { return b.contains(r, c); });
    if (outside == 0) {
        for (double& x : theta.flat()) x /= spec.p;
        return theta;
    }
    const double background = (1.0 - spec.p) / static_cast<double>(outside);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c)
            if (std::none_of(spec.blocks.begin(), spec.blocks.end(), [&](const Block& b) { return b.contains(r, c); }))
                theta(r, c) = background;
    return theta;
}

/// One multinomial draw of `total` counts over the cells of `theta`, by
/// sequential conditional binomials in row-major order.
inline SparseCountMatrix sample_counts(const Grid<double>& theta, std::uint64_t total, std::uint64_t seed) {
    const auto cells = theta.flat();
    std::vector<double> tail(cells.size() + 1, 0.0);
    for (std::size_t i = cells.size(); i-- > 0;) tail[i] = tail[i + 1] + cells[i];
    Rng rng(seed, {0x5e17});
    std::vector<Entry> entries;
    std::uint64_t remaining = total;
    for (std::size_t i = 0; i < cells.size() && remaining > 0; ++i) {
        if (cells[i] <= 0.0) continue;
        const double q = tail[i] > 0.0 ? std::clamp(cells[i] / tail[i], 0.0, 1.0) : 1.0;
        std::uint64_t k = remaining;
        if (q < 1.0 && i + 1 < cells.size() && tail[i + 1] > 0.0) {
            std::binomial_distribution<std::uint64_t> binom(remaining, q);
            k = binom(rng);
        }
        if (k == 0) continue;
        entries.push_back({static_cast<index_t>(i / theta.cols()), static_cast<index_t>(i % theta.cols()), k});
        remaining -= k;
    }
    return SparseCountMatrix::from_triplets(theta.rows(), theta.cols(), std::move(entries));
}

inline SparseCountMatrix sample_counts(const SynthSpec& spec) { return sample_counts(make_theta(spec), spec.total, spec.seed); }

/// One ground-truth bicluster per block, weighted by its share of p.
inline BiclusterSet true_biclusters(const SynthSpec& spec) {
    BiclusterSet out;
    for (const auto& b : spec.blocks) {
        std::vector<std::size_t> rows, cols;
        for (auto r = b.row_begin; r < b.row_end; ++r) rows.push_back(r);
        for (auto c = b.col_begin; c < b.col_end; ++c) cols.push_back(c);
        out.push_back(make_bicluster(std::move(rows), std::move(cols), spec.p / static_cast<double>(spec.blocks.size())));
    }
    return out;
}

}  // namespace cdp
