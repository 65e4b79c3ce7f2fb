#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gridcount/bag.hpp"
#include "gridcount/counting_grid.hpp"

namespace gridcount {

/// Posterior over window anchors for one bag.
struct PosteriorMap {
    GridGeometry geometry;
    std::vector<double> q;
    // Set when the bag had no positive counts and q fell back to uniform.
    bool degenerate = false;

    // Lowest-index argmax.
    std::size_t map_anchor() const;
};

struct TrainConfig {
    std::size_t max_iters = 200;
    // Stop once |B_t - B_{t-1}| <= rel_tol * |B_{t-1}|.
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    double init_noise = 0.1;
    // Added to every cell/word after the multiplicative update.
    double pseudocount = 1e-8;

    // Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

struct FitResult {
    CountingGrid grid;
    std::vector<PosteriorMap> posteriors;
    // Bound of the initial grid, then one entry per completed iteration.
    std::vector<double> bound_trace;
    std::size_t iterations = 0;
    bool converged = false;
    // Largest observed decrease of B between consecutive iterations,
    // relative to |B|; zero when the trace is monotone.
    double max_relative_drop = 0.0;
};

using IterationCallback = std::function<void(std::size_t iteration, double bound)>;

// pi[i, z] proportional to 1 + init_noise * u with u ~ U(0, 1) drawn from a
// generator seeded with `seed`, then normalized and floored.
CountingGrid init_grid(const GridGeometry& geometry, std::size_t vocab_size, std::uint64_t seed,
                       double init_noise);

// Log-space scores s[k] = sum_z c_z log h[k, z] for every anchor.
std::vector<double> anchor_scores(const GridField& log_histograms, const Bag& bag);

GridField log_of(const GridField& field);

/**
 * Exact posterior over anchors: q[k] proportional to exp(s[k]), normalized
 * with the max-subtraction trick. A bag without positive counts yields a
 * uniform map flagged as degenerate.
 */
PosteriorMap e_step(const GridField& histograms, const Bag& bag);
std::vector<PosteriorMap> e_step(const GridField& histograms, std::span<const Bag> bags);

/**
 * Multiplicative re-estimation of the grid.
 *
 * phi[k, z] = sum_t c_z^t q_t[k] / h[k, z] is pushed back onto the cells
 * with the reverse window sum and the grid becomes
 * pi[i, z] * u[i, z] + pseudocount, renormalized and floored. A cell that
 * no bag reaches (all-zero row with zero pseudocount) keeps its old row.
 */
CountingGrid m_step(const CountingGrid& grid, const GridField& histograms, std::span<const Bag> bags,
                    std::span<const PosteriorMap> posteriors, double pseudocount);
CountingGrid m_step(const CountingGrid& grid, std::span<const Bag> bags,
                    std::span<const PosteriorMap> posteriors, double pseudocount);

// B = sum_t [ -sum_k q log q + sum_k q sum_z c_z log h[k, z] ], with 0 log 0 = 0.
double variational_bound(const GridField& histograms, std::span<const Bag> bags,
                         std::span<const PosteriorMap> posteriors);

// log p(bag) under a uniform anchor prior: logsumexp(s) - log(cells).
double log_evidence(const GridField& histograms, const Bag& bag);

/**
 * Variational EM from init_grid (or `initial`, when given) until the
 * relative bound change drops to rel_tol or max_iters M-steps have run.
 * Posteriors in the result belong to the returned grid.
 */
FitResult fit(std::span<const Bag> bags, const GridGeometry& geometry, std::size_t vocab_size,
              const TrainConfig& config, const std::optional<CountingGrid>& initial = std::nullopt,
              const IterationCallback& on_iteration = {});

}  // namespace gridcount
