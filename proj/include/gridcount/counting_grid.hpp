#pragma once

#include <cstddef>
#include <span>

#include "gridcount/bag.hpp"
#include "gridcount/grid_field.hpp"

namespace gridcount {

// Lower bound applied to every probability after normalization.
inline constexpr double kProbFloor = 1e-10;

/**
 * A grid of word distributions pi[i, z].
 *
 * Every row is a probability vector over the vocabulary with entries no
 * smaller than kProbFloor.
 */
class CountingGrid {
public:
    // Validates row sums (within 1e-9) and the floor; throws
    // std::invalid_argument on violation.
    explicit CountingGrid(GridField pi);

    const GridGeometry& geometry() const { return pi_.geometry(); }
    std::size_t vocab_size() const { return pi_.channels(); }
    const GridField& pi() const { return pi_; }

    bool operator==(const CountingGrid&) const = default;

private:
    GridField pi_;
};

/**
 * Rescales `row` to sum to one, then lifts entries below `floor` to
 * exactly `floor` while rescaling the rest so the row still sums to one.
 * Entries that are already floored stay at `floor`. Requires a positive
 * row sum and floor * size < 1.
 */
void normalize_with_floor(std::span<double> row, double floor);

// h[k] = average of pi over the window anchored at k.
GridField compute_histograms(const CountingGrid& grid);

// Sum over the bag's entries of c_z * log h[k, z].
double bag_log_likelihood(const Bag& bag, const GridField& histograms, std::size_t anchor);

}  // namespace gridcount
