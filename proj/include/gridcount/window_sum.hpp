#pragma once

#include "gridcount/grid_field.hpp"

namespace gridcount {

enum class WindowDirection {
    // out[k] = sum of field over the window anchored at k.
    forward,
    // out[i] = sum of field over every anchor k whose window contains i.
    reverse,
};

/**
 * Toroidal window sums over every anchor of the grid, for all channels.
 *
 * The field is replicate-padded by W_d - 1 leading slices along each
 * dimension, accumulated into a D-dimensional cumulative sum, and each
 * window total is then read from the 2^D corners of its hypercube with
 * alternating signs. Cost is linear in cells x channels for fixed D.
 *
 * The reverse sum is the adjoint of the forward sum: it equals the
 * forward sum anchored at i - W + 1.
 */
GridField window_sum(const GridField& field, WindowDirection direction = WindowDirection::forward);

}  // namespace gridcount
