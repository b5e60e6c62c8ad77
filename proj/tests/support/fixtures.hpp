#pragma once

// Randomized inputs shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cdp/cdp.hpp"
#include "oracles.hpp"

namespace fixture {

/// A small token table with random positions and topics.
struct TokenConfig {
    cdp::TokenTable tokens;
    std::size_t n_rows = 0, n_cols = 0, k_r = 0, k_c = 0;
    double alpha_r = 0.0, alpha_c = 0.0, lambda = 0.0;
};

inline TokenConfig random_token_config(std::uint64_t seed) {
    cdp::Rng rng(seed, {0x7e57});
    TokenConfig c;
    c.n_rows = 2 + rng.below(5);
    c.n_cols = 2 + rng.below(5);
    c.k_r = 1 + rng.below(4);
    c.k_c = 1 + rng.below(4);
    const std::size_t n = 5 + rng.below(40);
    for (std::size_t t = 0; t < n; ++t) {
        c.tokens.row_of.push_back(static_cast<cdp::index_t>(rng.below(c.n_rows)));
        c.tokens.col_of.push_back(static_cast<cdp::index_t>(rng.below(c.n_cols)));
        c.tokens.zr.push_back(static_cast<cdp::index_t>(rng.below(c.k_r)));
        c.tokens.zc.push_back(static_cast<cdp::index_t>(rng.below(c.k_c)));
    }
    // Every third configuration has a zero prior on one side.
    c.alpha_r = seed % 3 == 0 ? 0.0 : 0.01 + rng.uniform();
    c.alpha_c = seed % 3 == 1 ? 0.0 : 0.01 + rng.uniform();
    c.lambda = 0.01 + 2.0 * rng.uniform();
    return c;
}

/// Largest componentwise gap between the library conditionals and the
/// collapsed-LDA reference, over every token of the configuration and both
/// directions.
inline double theorem1_max_error(const TokenConfig& c) {
    const auto& tk = c.tokens;
    const auto full = cdp::build_counts(tk, c.n_rows, c.n_cols, c.k_r, c.k_c);
    std::vector<std::size_t> row_of(tk.row_of.begin(), tk.row_of.end()), col_of(tk.col_of.begin(), tk.col_of.end());
    std::vector<std::size_t> zr(tk.zr.begin(), tk.zr.end()), zc(tk.zc.begin(), tk.zc.end());
    double worst = 0.0;
    for (std::size_t t = 0; t < tk.size(); ++t) {
        auto loo = full;
        --loo.row_topic(tk.row_of[t], tk.zr[t]);
        --loo.col_topic(tk.col_of[t], tk.zc[t]);
        --loo.joint(tk.zr[t], tk.zc[t]);
        --loo.total_r[tk.zr[t]];
        --loo.total_c[tk.zc[t]];

        std::vector<double> p(c.k_c);
        cdp::conditional_zc(tk.col_of[t], tk.zr[t], loo, c.alpha_c, c.lambda, p);
        const auto q = oracle::lda_conditional(zr, col_of, zc, t, c.k_c, c.n_cols, c.lambda, c.alpha_c);
        for (std::size_t j = 0; j < c.k_c; ++j) worst = std::max(worst, std::abs(p[j] - q[j]));

        std::vector<double> pr(c.k_r);
        cdp::conditional_zr(tk.row_of[t], tk.zc[t], loo, c.alpha_r, c.lambda, pr);
        const auto qr = oracle::lda_conditional(zc, row_of, zr, t, c.k_r, c.n_rows, c.lambda, c.alpha_r);
        for (std::size_t i = 0; i < c.k_r; ++i) worst = std::max(worst, std::abs(pr[i] - qr[i]));
    }
    return worst;
}

inline cdp::Bicluster random_bicluster(cdp::Rng& rng, std::size_t n_rows, std::size_t n_cols) {
    std::vector<std::size_t> rows, cols;
    for (std::size_t r = 0; r < n_rows; ++r)
        if (rng.uniform() < 0.35) rows.push_back(r);
    for (std::size_t c = 0; c < n_cols; ++c)
        if (rng.uniform() < 0.35) cols.push_back(c);
    if (rows.empty()) rows.push_back(rng.below(n_rows));
    if (cols.empty()) cols.push_back(rng.below(n_cols));
    return cdp::make_bicluster(std::move(rows), std::move(cols), rng.uniform());
}

inline cdp::BiclusterSet random_bicluster_set(cdp::Rng& rng, std::size_t n_rows = 8, std::size_t n_cols = 8) {
    cdp::BiclusterSet s(1 + rng.below(4));
    for (auto& b : s) b = random_bicluster(rng, n_rows, n_cols);
    return s;
}

inline std::vector<std::set<oracle::Cell>> cell_sets(const cdp::BiclusterSet& s) {
    std::vector<std::set<oracle::Cell>> out;
    for (const auto& b : s) out.push_back(oracle::product(b.rows, b.cols));
    return out;
}

}  // namespace fixture
