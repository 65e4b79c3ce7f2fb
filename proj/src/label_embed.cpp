#include "gridcount/label_embed.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gridcount/window_sum.hpp"

namespace gridcount {
namespace {

constexpr std::size_t kLooChunk = 64;

void check_inputs(std::span<const PosteriorMap> posteriors, const Targets& targets, std::size_t classes) {
    if (posteriors.empty()) throw std::invalid_argument("no posteriors to embed");
    if (posteriors.size() != targets.values.size()) {
        throw std::invalid_argument(std::to_string(posteriors.size()) + " posteriors but " +
                                    std::to_string(targets.values.size()) + " targets");
    }
    const auto& geometry = posteriors.front().geometry;
    for (const auto& post : posteriors) {
        if (post.geometry != geometry || post.q.size() != geometry.cells()) {
            throw std::invalid_argument("posteriors disagree on the grid geometry");
        }
    }
    for (std::size_t t = 0; t < targets.values.size(); ++t) {
        const double y = targets.values[t];
        if (!std::isfinite(y)) throw std::invalid_argument("target " + std::to_string(t + 1) + " is not finite");
        if (targets.kind == TargetKind::discrete &&
            (y < 0.0 || y != std::floor(y) || y >= static_cast<double>(classes))) {
            throw std::invalid_argument("label " + std::to_string(t + 1) + " out of range for " +
                                        std::to_string(classes) + " classes");
        }
    }
}

std::size_t resolve_classes(const Targets& targets, std::size_t classes) {
    if (targets.kind == TargetKind::continuous) return 1;
    return classes != 0 ? classes : targets.class_count();
}

// Channels 0..L-1 hold label-weighted posteriors (or y-weighted for
// continuous targets), channel L holds the plain posterior mass; all are
// pushed onto the cells with one reverse window sum.
GridField reverse_label_sums(std::span<const PosteriorMap> posteriors, const Targets& targets,
                             std::size_t classes) {
    const auto& geometry = posteriors.front().geometry;
    GridField anchors(geometry, classes + 1);
    for (std::size_t t = 0; t < posteriors.size(); ++t) {
        const auto& q = posteriors[t].q;
        const double y = targets.values[t];
        for (std::size_t k = 0; k < q.size(); ++k) {
            auto row = anchors.row(k);
            if (targets.kind == TargetKind::discrete) {
                row[static_cast<std::size_t>(y)] += q[k];
            } else {
                row[0] += q[k] * y;
            }
            row[classes] += q[k];
        }
    }
    return window_sum(anchors, WindowDirection::reverse);
}

std::vector<double> label_prior(const Targets& targets, std::size_t classes) {
    std::vector<double> prior(classes, 0.0);
    for (const double y : targets.values) {
        if (targets.kind == TargetKind::discrete) {
            prior[static_cast<std::size_t>(y)] += 1.0;
        } else {
            prior[0] += y;
        }
    }
    for (double& p : prior) p /= static_cast<double>(targets.values.size());
    return prior;
}

Prediction readout(TargetKind kind, std::span<const double> scores) {
    Prediction out;
    out.kind = kind;
    if (kind == TargetKind::continuous) {
        out.value = scores[0];
        return out;
    }
    out.scores.assign(scores.begin(), scores.end());
    out.label = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    out.value = scores[out.label];
    return out;
}

}  // namespace

const char* to_string(TargetKind kind) {
    return kind == TargetKind::discrete ? "discrete" : "continuous";
}

TargetKind parse_target_kind(const std::string& text) {
    if (text == "discrete") return TargetKind::discrete;
    if (text == "continuous") return TargetKind::continuous;
    throw std::invalid_argument("unknown target kind '" + text + "'");
}

std::size_t Targets::class_count() const {
    if (kind == TargetKind::continuous) return 1;
    double top = -1.0;
    for (const double y : values) top = std::max(top, y);
    return static_cast<std::size_t>(std::max(top, 0.0)) + 1;
}

std::string MetricReport::to_text() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "metric=" << metric << '\n';
    out << "value=" << (defined ? value : std::numeric_limits<double>::quiet_NaN()) << '\n';
    out << "defined=" << (defined ? "true" : "false") << '\n';
    out << "folds=" << folds << '\n';
    return out.str();
}

LabelEmbedding embed(std::span<const PosteriorMap> posteriors, const Targets& targets, double alpha,
                     std::size_t classes) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    classes = resolve_classes(targets, classes);
    check_inputs(posteriors, targets, classes);

    const GridField sums = reverse_label_sums(posteriors, targets, classes);
    const auto prior = label_prior(targets, classes);
    const auto& geometry = posteriors.front().geometry;

    LabelEmbedding out{geometry, targets.kind, classes, std::vector<double>(geometry.cells() * classes),
                       std::vector<double>(geometry.cells())};
    for (std::size_t i = 0; i < geometry.cells(); ++i) {
        const auto row = sums.row(i);
        const double mass = std::max(row[classes], 0.0);
        out.mass[i] = mass;
        for (std::size_t l = 0; l < classes; ++l) {
            out.gamma[i * classes + l] = (row[l] + alpha * prior[l]) / (mass + alpha);
        }
    }
    return out;
}

std::vector<double> cell_occupancy(const PosteriorMap& posterior) {
    GridField q(posterior.geometry, 1, posterior.q);
    GridField spread = window_sum(q, WindowDirection::reverse);
    const double inv_volume = 1.0 / static_cast<double>(posterior.geometry.window_cells());
    std::vector<double> p = std::move(spread.values());
    for (double& v : p) v = std::max(v, 0.0) * inv_volume;
    return p;
}

Prediction predict(const LabelEmbedding& embedding, const PosteriorMap& posterior) {
    if (posterior.geometry != embedding.geometry) {
        throw std::invalid_argument("posterior geometry does not match the embedding");
    }
    const auto p = cell_occupancy(posterior);
    std::vector<double> scores(embedding.classes, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        for (std::size_t l = 0; l < embedding.classes; ++l) scores[l] += p[i] * embedding.at(i, l);
    }
    return readout(embedding.kind, scores);
}

Prediction predict(const CountingGrid& grid, const LabelEmbedding& embedding, const Bag& bag) {
    if (grid.geometry() != embedding.geometry) {
        throw std::invalid_argument("embedding geometry does not match the grid");
    }
    return predict(embedding, e_step(compute_histograms(grid), bag));
}

MetricReport loo_evaluate(std::span<const PosteriorMap> posteriors, const Targets& targets, double alpha,
                          std::size_t classes) {
    if (posteriors.size() < 2) throw std::invalid_argument("leave-one-out needs at least two bags");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    classes = resolve_classes(targets, classes);
    check_inputs(posteriors, targets, classes);

    const auto& geometry = posteriors.front().geometry;
    const std::size_t cells = geometry.cells();
    const std::size_t bags = posteriors.size();
    const double inv_volume = 1.0 / static_cast<double>(geometry.window_cells());
    const bool discrete = targets.kind == TargetKind::discrete;

    const GridField totals = reverse_label_sums(posteriors, targets, classes);
    std::vector<double> label_totals(classes, 0.0);
    for (const double y : targets.values) {
        if (discrete) {
            label_totals[static_cast<std::size_t>(y)] += 1.0;
        } else {
            label_totals[0] += y;
        }
    }
    const double rest = static_cast<double>(bags - 1);

    MetricReport report;
    report.metric = discrete ? "accuracy" : "pearson_r";
    report.folds = bags;
    report.predictions.resize(bags);

    std::vector<double> prior(classes);
    std::vector<double> scores(classes);
    for (std::size_t first = 0; first < bags; first += kLooChunk) {
        const std::size_t count = std::min(kLooChunk, bags - first);
        // Reverse sums of each held-out posterior in this chunk, one channel per bag.
        GridField held(geometry, count);
        for (std::size_t c = 0; c < count; ++c) {
            const auto& q = posteriors[first + c].q;
            for (std::size_t k = 0; k < cells; ++k) held.at(k, c) = q[k];
        }
        const GridField spread = window_sum(held, WindowDirection::reverse);

        for (std::size_t c = 0; c < count; ++c) {
            const std::size_t t = first + c;
            const double y = targets.values[t];
            for (std::size_t l = 0; l < classes; ++l) {
                double remaining = label_totals[l];
                if (!discrete) {
                    remaining -= y;
                } else if (static_cast<std::size_t>(y) == l) {
                    remaining -= 1.0;
                }
                prior[l] = remaining / rest;
            }
            std::fill(scores.begin(), scores.end(), 0.0);
            for (std::size_t i = 0; i < cells; ++i) {
                const double own = std::max(spread.at(i, c), 0.0);
                if (own == 0.0) continue;
                const auto row = totals.row(i);
                // Subtracting the held-out share can round slightly negative.
                const double mass = std::max(row[classes] - own, 0.0);
                const double p = own * inv_volume;
                for (std::size_t l = 0; l < classes; ++l) {
                    double num = row[l];
                    if (!discrete) {
                        num -= own * y;
                    } else if (static_cast<std::size_t>(y) == l) {
                        num = std::max(num - own, 0.0);
                    }
                    scores[l] += p * (num + alpha * prior[l]) / (mass + alpha);
                }
            }
            const Prediction pred = readout(targets.kind, scores);
            report.predictions[t] = discrete ? static_cast<double>(pred.label) : pred.value;
        }
    }

    if (discrete) {
        std::size_t hits = 0;
        for (std::size_t t = 0; t < bags; ++t) hits += report.predictions[t] == targets.values[t];
        report.value = static_cast<double>(hits) / static_cast<double>(bags);
    } else {
        report.value = pearson(report.predictions, targets.values);
        report.defined = std::isfinite(report.value);
    }
    return report;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson needs equal-length samples");
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - mean_a) * (b[i] - mean_b);
        var_a += (a[i] - mean_a) * (a[i] - mean_a);
        var_b += (b[i] - mean_b) * (b[i] - mean_b);
    }
    if (var_a <= 0.0 || var_b <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace gridcount
