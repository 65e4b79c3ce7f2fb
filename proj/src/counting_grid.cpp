#include "gridcount/counting_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gridcount/window_sum.hpp"

namespace gridcount {

CountingGrid::CountingGrid(GridField pi) : pi_(std::move(pi)) {
    for (std::size_t i = 0; i < pi_.cells(); ++i) {
        double sum = 0.0;
        for (const double v : pi_.row(i)) {
            if (!std::isfinite(v) || v < kProbFloor) {
                throw std::invalid_argument("grid cell " + std::to_string(i) +
                                            " has an entry below the probability floor");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("grid cell " + std::to_string(i) + " does not sum to one");
        }
    }
}

void normalize_with_floor(std::span<double> row, double floor) {
    if (floor * static_cast<double>(row.size()) >= 1.0) {
        throw std::invalid_argument("probability floor too large for the row size");
    }
    double sum = 0.0;
    for (const double v : row) sum += v;
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        throw std::invalid_argument("cannot normalize a row with non-positive or non-finite mass");
    }
    for (double& v : row) v /= sum;

    // Each pass pins everything at or below the floor and rescales the
    // rest; the pinned set only grows, so this terminates.
    for (;;) {
        double pinned = 0.0;
        double free_mass = 0.0;
        for (const double v : row) {
            if (v <= floor) {
                pinned += floor;
            } else {
                free_mass += v;
            }
        }
        const double scale = (1.0 - pinned) / free_mass;
        bool dipped = false;
        for (double& v : row) {
            if (v <= floor) {
                v = floor;
            } else {
                v *= scale;
                dipped = dipped || v <= floor;
            }
        }
        if (!dipped) return;
    }
}

GridField compute_histograms(const CountingGrid& grid) {
    GridField h = window_sum(grid.pi(), WindowDirection::forward);
    const double inv_volume = 1.0 / static_cast<double>(grid.geometry().window_cells());
    for (double& v : h.values()) {
        // The cumulative table can round a window of floored cells a hair
        // under the floor.
        v = std::max(v * inv_volume, kProbFloor);
    }
    return h;
}

double bag_log_likelihood(const Bag& bag, const GridField& histograms, std::size_t anchor) {
    if (anchor >= histograms.cells()) throw std::invalid_argument("anchor outside the grid");
    const auto h = histograms.row(anchor);
    double sum = 0.0;
    for (const auto& e : bag.entries) {
        if (e.word >= h.size()) {
            throw std::invalid_argument("word id " + std::to_string(e.word) +
                                        " out of range for vocabulary of size " +
                                        std::to_string(h.size()));
        }
        if (e.count > 0.0) sum += e.count * std::log(h[e.word]);
    }
    return sum;
}

}  // namespace gridcount
