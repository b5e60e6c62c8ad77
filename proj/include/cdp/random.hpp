#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace cdp {

/// SplitMix64 finalizer. Used both as the engine step and to derive
/// independent stream seeds from structured keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hashes a seed together with a path of stream coordinates, e.g.
/// (seed, phase, iteration, block). Distinct paths give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x9e3779b97f4a7c15ULL));
    return h;
}

/// Small counter-style engine (SplitMix64). Cheap to construct, so a fresh
/// stream can be keyed per block of work without shared state.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}
    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
        : state_(derive_seed(seed, path)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe to take the log of.
    double uniform_pos() noexcept { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

    std::size_t below(std::size_t n) noexcept {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

  private:
    std::uint64_t state_;
};

/// log of a Gamma(shape, 1) variate. For shape < 1 the identity
/// Gamma(a) = Gamma(a + 1) * U^(1/a) is applied in log space so tiny draws
/// do not underflow to zero.
inline double sample_log_gamma(double shape, Rng& rng) {
    if (shape >= 1.0) {
        std::gamma_distribution<double> g(shape, 1.0);
        return std::log(g(rng));
    }
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    return std::log(g(rng)) + std::log(rng.uniform_pos()) / shape;
}

inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

/// Draws log(p) for p ~ Dirichlet(concentration). All entries must be > 0.
inline void sample_log_dirichlet(std::span<const double> concentration, Rng& rng, std::span<double> out) {
    for (std::size_t i = 0; i < concentration.size(); ++i) out[i] = sample_log_gamma(concentration[i], rng);
    const double norm = log_sum_exp(out);
    for (double& x : out) x -= norm;
}

inline std::vector<double> sample_log_dirichlet(std::span<const double> concentration, Rng& rng) {
    std::vector<double> out(concentration.size());
    sample_log_dirichlet(concentration, rng, out);
    return out;
}

/// Turns unnormalized log weights into probabilities in place via the
/// max-shifted transform.
inline void normalize_log_weights(std::span<double> w) {
    const double m = *std::max_element(w.begin(), w.end());
    double s = 0.0;
    for (double& x : w) {
        x = std::exp(x - m);
        s += x;
    }
    for (double& x : w) x /= s;
}

/// Samples an index proportional to the given nonnegative weights.
inline std::size_t sample_discrete(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) return i;
    }
    // Rounding can leave u marginally >= 0; fall back to the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

/// Samples an index from unnormalized log weights. `scratch` is overwritten.
inline std::size_t sample_log_discrete(std::span<const double> log_weights, Rng& rng, std::vector<double>& scratch) {
    scratch.assign(log_weights.begin(), log_weights.end());
    normalize_log_weights(scratch);
    return sample_discrete(scratch, rng);
}

}  // namespace cdp
