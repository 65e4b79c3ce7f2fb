#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gridcount {

using Extents = std::vector<std::size_t>;

/**
 * Extents and window size of a D-dimensional toroidal counting grid.
 *
 * Cells are addressed either by a coordinate vector (0-based) or by a
 * row-major linear index with dimension 0 varying slowest. Every
 * coordinate is taken modulo the extent, so the grid wraps around along
 * each dimension.
 */
class GridGeometry {
public:
    // Throws std::invalid_argument when D == 0, extents/window lengths
    // differ, any entry is zero, W_d > E_d, or the cell count overflows.
    GridGeometry(Extents extents, Extents window);

    std::size_t dims() const { return extents_.size(); }
    const Extents& extents() const { return extents_; }
    const Extents& window() const { return window_; }

    std::size_t cells() const { return cells_; }
    std::size_t window_cells() const { return window_cells_; }

    // Ratio of grid volume to window volume; need not be integral.
    double capacity() const;

    std::size_t linear_index(std::span<const std::size_t> coords) const;
    std::vector<std::size_t> coords(std::size_t index) const;

    // Index of (index + offset) taken modulo the extents; offsets may be
    // negative.
    std::size_t translate(std::size_t index, std::span<const long long> offset) const;

    // Linear indices of the window cells anchored at `anchor`, in
    // row-major order of the window.
    std::vector<std::size_t> window_cells_of(std::size_t anchor) const;

    bool operator==(const GridGeometry&) const = default;

private:
    Extents extents_;
    Extents window_;
    std::size_t cells_ = 0;
    std::size_t window_cells_ = 0;
};

}  // namespace gridcount
