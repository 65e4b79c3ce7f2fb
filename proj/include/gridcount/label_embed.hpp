#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gridcount/counting_grid.hpp"
#include "gridcount/em.hpp"

namespace gridcount {

enum class TargetKind { discrete, continuous };

const char* to_string(TargetKind kind);
// Accepts "discrete" or "continuous"; throws std::invalid_argument otherwise.
TargetKind parse_target_kind(const std::string& text);

/// One target per bag. Discrete labels are stored as integral values >= 0.
struct Targets {
    TargetKind kind = TargetKind::discrete;
    std::vector<double> values;

    // Largest label + 1 for discrete targets, 1 for continuous ones.
    std::size_t class_count() const;

    bool operator==(const Targets&) const = default;
};

/**
 * Labels spread over the grid through the training posteriors.
 *
 * gamma holds cells x classes entries for discrete targets (a label
 * distribution per cell) and one expected value per cell for continuous
 * ones. mass[i] is the posterior mass reaching cell i, summed over bags.
 */
struct LabelEmbedding {
    GridGeometry geometry;
    TargetKind kind = TargetKind::discrete;
    std::size_t classes = 1;
    std::vector<double> gamma;
    std::vector<double> mass;

    double at(std::size_t cell, std::size_t label = 0) const { return gamma[cell * classes + label]; }

    bool operator==(const LabelEmbedding&) const = default;
};

struct Prediction {
    TargetKind kind = TargetKind::discrete;
    std::size_t label = 0;
    // Posterior-weighted estimate (continuous) or winning score (discrete).
    double value = 0.0;
    // Per-class scores; empty for continuous targets.
    std::vector<double> scores;
};

struct MetricReport {
    // "accuracy" or "pearson_r".
    std::string metric;
    double value = 0.0;
    // False when the metric is undefined (e.g. zero-variance targets).
    bool defined = true;
    std::size_t folds = 0;
    std::vector<double> predictions;

    // Flat "key=value" lines: metric, value, defined, folds.
    std::string to_text() const;
};

/**
 * Embeds targets on the grid:
 *   gamma(i, l) = (num(i, l) + alpha * prior_l) / (mass(i) + alpha)
 * where num and mass are reverse window sums of the label-weighted and
 * plain posteriors, and prior is the global label frequency (or the global
 * mean for continuous targets). `classes` of zero infers L from the data.
 */
LabelEmbedding embed(std::span<const PosteriorMap> posteriors, const Targets& targets,
                     double alpha = 1e-6, std::size_t classes = 0);

// p(i) = (1 / |W|) * sum of q over the anchors whose window contains i.
std::vector<double> cell_occupancy(const PosteriorMap& posterior);

Prediction predict(const LabelEmbedding& embedding, const PosteriorMap& posterior);
// Runs the E-step for `bag` under `grid` first.
Prediction predict(const CountingGrid& grid, const LabelEmbedding& embedding, const Bag& bag);

/**
 * Leave-one-out readout: each bag is predicted from an embedding built on
 * every other bag, reusing its existing posterior. The grid is not refit.
 * Reports accuracy for discrete targets and Pearson correlation for
 * continuous ones.
 */
MetricReport loo_evaluate(std::span<const PosteriorMap> posteriors, const Targets& targets,
                          double alpha = 1e-6, std::size_t classes = 0);

// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace gridcount
