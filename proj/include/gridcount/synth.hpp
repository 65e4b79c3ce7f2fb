#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gridcount/bag.hpp"
#include "gridcount/counting_grid.hpp"

namespace gridcount {

using AnchorLabeler = std::function<std::size_t(std::size_t anchor)>;

struct SynthSpec {
    GridGeometry geometry;
    std::size_t vocab_size = 1;
    // Explicit planted grid; when empty a blocky grid is drawn from `seed`.
    std::optional<CountingGrid> planted{};
    // Concentration of the blocky per-block distributions.
    double sharpness = 10.0;
    std::size_t docs = 1;
    // Document length is drawn uniformly from [words_min, words_max].
    std::size_t words_min = 1;
    std::size_t words_max = 1;
    std::uint64_t seed = 0;
    AnchorLabeler labeler{};
};

struct SynthCorpus {
    std::vector<Bag> bags;
    std::vector<std::size_t> anchors;
    CountingGrid planted;
};

/**
 * Blocky grid: the torus is cut into ceil(E_d / W_d) blocks per dimension
 * and every cell of a block shares one distribution
 * p_z proportional to exp(sharpness * u_z), u_z ~ U(0, 1).
 */
CountingGrid blocky_grid(const GridGeometry& geometry, std::size_t vocab_size, double sharpness,
                         std::uint64_t seed);

// Index of the block (as in blocky_grid) holding cell `cell`.
std::size_t block_of(const GridGeometry& geometry, std::size_t cell);

// Labels an anchor with the block containing its window's center cell
// (k + floor(W / 2)).
AnchorLabeler block_labeler(const GridGeometry& geometry);

// Anchors are uniform over all cells; words are i.i.d. draws from h_k.
// Document t uses its own generator derived from (seed, t).
SynthCorpus generate(const SynthSpec& spec);

}  // namespace gridcount
