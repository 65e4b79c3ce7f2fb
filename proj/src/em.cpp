#include "gridcount/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "gridcount/parallel.hpp"
#include "gridcount/window_sum.hpp"
#include "random.hpp"

namespace gridcount {
namespace {

void check_vocabulary(const Bag& bag, std::size_t vocab_size) {
    for (const auto& e : bag.entries) {
        if (e.word >= vocab_size) {
            throw std::invalid_argument("word id " + std::to_string(e.word) +
                                        " out of range for vocabulary of size " +
                                        std::to_string(vocab_size));
        }
    }
}

void check_aligned(std::span<const Bag> bags, std::span<const PosteriorMap> posteriors,
                   const GridGeometry& geometry) {
    if (bags.size() != posteriors.size()) {
        throw std::invalid_argument(std::to_string(bags.size()) + " bags but " +
                                    std::to_string(posteriors.size()) + " posteriors");
    }
    for (const auto& post : posteriors) {
        if (post.geometry != geometry || post.q.size() != geometry.cells()) {
            throw std::invalid_argument("posterior geometry does not match the grid");
        }
    }
}

PosteriorMap posterior_from_scores(const GridGeometry& geometry, std::vector<double> scores) {
    PosteriorMap post{geometry, std::move(scores), false};
    const double top = *std::max_element(post.q.begin(), post.q.end());
    double sum = 0.0;
    for (double& v : post.q) {
        v = std::exp(v - top);
        sum += v;
    }
    for (double& v : post.q) v /= sum;
    return post;
}

PosteriorMap posterior_for(const GridField& histograms, const GridField& log_h, const Bag& bag) {
    check_vocabulary(bag, histograms.channels());
    const auto& geometry = histograms.geometry();
    if (bag.empty_counts()) {
        return PosteriorMap{geometry,
                            std::vector<double>(geometry.cells(), 1.0 / static_cast<double>(geometry.cells())),
                            true};
    }
    return posterior_from_scores(geometry, anchor_scores(log_h, bag));
}

double logsumexp(std::span<const double> values) {
    const double top = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) sum += std::exp(v - top);
    return top + std::log(sum);
}

}  // namespace

std::size_t PosteriorMap::map_anchor() const {
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

void TrainConfig::validate() const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (!(init_noise > 0.0 && init_noise <= 1.0)) {
        throw std::invalid_argument("init_noise must lie in (0, 1]");
    }
    if (!(pseudocount >= 0.0) || !std::isfinite(pseudocount)) {
        throw std::invalid_argument("pseudocount must be a non-negative finite number");
    }
}

CountingGrid init_grid(const GridGeometry& geometry, std::size_t vocab_size, std::uint64_t seed,
                       double init_noise) {
    if (vocab_size == 0) throw std::invalid_argument("vocabulary must be non-empty");
    GridField pi(geometry, vocab_size);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < pi.cells(); ++i) {
        auto row = pi.row(i);
        for (double& v : row) v = 1.0 + init_noise * detail::unit_uniform(rng);
        normalize_with_floor(row, kProbFloor);
    }
    return CountingGrid(std::move(pi));
}

GridField log_of(const GridField& field) {
    GridField out = field;
    for (double& v : out.values()) v = std::log(v);
    return out;
}

std::vector<double> anchor_scores(const GridField& log_histograms, const Bag& bag) {
    std::vector<double> scores(log_histograms.cells(), 0.0);
    for (std::size_t k = 0; k < scores.size(); ++k) {
        const auto row = log_histograms.row(k);
        double s = 0.0;
        for (const auto& e : bag.entries) {
            if (e.count > 0.0) s += e.count * row[e.word];
        }
        scores[k] = s;
    }
    return scores;
}

PosteriorMap e_step(const GridField& histograms, const Bag& bag) {
    return posterior_for(histograms, log_of(histograms), bag);
}

std::vector<PosteriorMap> e_step(const GridField& histograms, std::span<const Bag> bags) {
    const GridField log_h = log_of(histograms);
    std::vector<std::optional<PosteriorMap>> slots(bags.size());
    parallel_for(bags.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) slots[t] = posterior_for(histograms, log_h, bags[t]);
    });
    std::vector<PosteriorMap> out;
    out.reserve(bags.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

CountingGrid m_step(const CountingGrid& grid, const GridField& histograms, std::span<const Bag> bags,
                    std::span<const PosteriorMap> posteriors, double pseudocount) {
    const auto& geometry = grid.geometry();
    check_aligned(bags, posteriors, geometry);
    if (histograms.geometry() != geometry || histograms.channels() != grid.vocab_size()) {
        throw std::invalid_argument("histograms do not match the grid");
    }
    for (const auto& bag : bags) check_vocabulary(bag, grid.vocab_size());

    // phi[k, z] = sum_t c_z q_t[k] / h[k, z]. Each worker owns a range of
    // anchors and visits bags in order, so the sum order is fixed.
    GridField phi(geometry, grid.vocab_size());
    parallel_for(geometry.cells(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = 0; t < bags.size(); ++t) {
            const auto& q = posteriors[t].q;
            for (std::size_t k = begin; k < end; ++k) {
                if (q[k] == 0.0) continue;
                auto row = phi.row(k);
                for (const auto& e : bags[t].entries) row[e.word] += e.count * q[k];
            }
        }
        for (std::size_t k = begin; k < end; ++k) {
            auto row = phi.row(k);
            const auto h = histograms.row(k);
            for (std::size_t z = 0; z < row.size(); ++z) row[z] /= h[z];
        }
    });

    GridField pi = window_sum(phi, WindowDirection::reverse);
    parallel_for(geometry.cells(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto row = pi.row(i);
            const auto old = grid.pi().row(i);
            double sum = 0.0;
            for (std::size_t z = 0; z < row.size(); ++z) {
                // Rounding in the reverse sum can leave tiny negatives where
                // nothing was mapped.
                row[z] = old[z] * std::max(row[z], 0.0) + pseudocount;
                sum += row[z];
            }
            if (sum > 0.0) {
                normalize_with_floor(row, kProbFloor);
            } else {
                std::copy(old.begin(), old.end(), row.begin());
            }
        }
    });
    return CountingGrid(std::move(pi));
}

CountingGrid m_step(const CountingGrid& grid, std::span<const Bag> bags,
                    std::span<const PosteriorMap> posteriors, double pseudocount) {
    return m_step(grid, compute_histograms(grid), bags, posteriors, pseudocount);
}

double variational_bound(const GridField& histograms, std::span<const Bag> bags,
                         std::span<const PosteriorMap> posteriors) {
    check_aligned(bags, posteriors, histograms.geometry());
    const GridField log_h = log_of(histograms);
    std::vector<double> per_bag(bags.size(), 0.0);
    parallel_for(bags.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            check_vocabulary(bags[t], histograms.channels());
            const auto scores = anchor_scores(log_h, bags[t]);
            const auto& q = posteriors[t].q;
            double b = 0.0;
            for (std::size_t k = 0; k < q.size(); ++k) {
                if (q[k] > 0.0) b += q[k] * (scores[k] - std::log(q[k]));
            }
            per_bag[t] = b;
        }
    });
    double total = 0.0;
    for (const double b : per_bag) total += b;
    return total;
}

double log_evidence(const GridField& histograms, const Bag& bag) {
    check_vocabulary(bag, histograms.channels());
    const auto scores = anchor_scores(log_of(histograms), bag);
    return logsumexp(scores) - std::log(static_cast<double>(histograms.cells()));
}

FitResult fit(std::span<const Bag> bags, const GridGeometry& geometry, std::size_t vocab_size,
              const TrainConfig& config, const std::optional<CountingGrid>& initial,
              const IterationCallback& on_iteration) {
    config.validate();
    if (bags.empty()) throw std::invalid_argument("cannot fit an empty corpus");
    for (std::size_t t = 0; t < bags.size(); ++t) {
        check_vocabulary(bags[t], vocab_size);
        if (bags[t].empty_counts()) {
            throw std::invalid_argument("bag " + std::to_string(t + 1) + " has no positive counts");
        }
    }

    CountingGrid grid = initial ? *initial : init_grid(geometry, vocab_size, config.seed, config.init_noise);
    if (grid.geometry() != geometry || grid.vocab_size() != vocab_size) {
        throw std::invalid_argument("initial grid does not match the requested geometry");
    }

    GridField h = compute_histograms(grid);
    std::vector<PosteriorMap> posteriors = e_step(h, bags);
    double bound = variational_bound(h, bags, posteriors);

    FitResult result{grid, {}, {bound}, 0, false, 0.0};
    if (on_iteration) on_iteration(0, bound);

    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        grid = m_step(grid, h, bags, posteriors, config.pseudocount);
        h = compute_histograms(grid);
        posteriors = e_step(h, bags);
        const double previous = bound;
        bound = variational_bound(h, bags, posteriors);

        result.bound_trace.push_back(bound);
        result.iterations = iter;
        if (on_iteration) on_iteration(iter, bound);
        if (bound < previous) {
            result.max_relative_drop =
                std::max(result.max_relative_drop, (previous - bound) / std::abs(previous));
        }
        if (std::abs(bound - previous) <= config.rel_tol * std::abs(previous)) {
            result.converged = true;
            break;
        }
    }
    result.grid = std::move(grid);
    result.posteriors = std::move(posteriors);
    return result;
}

}  // namespace gridcount
