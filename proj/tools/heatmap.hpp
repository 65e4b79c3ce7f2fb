#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gridcount/geometry.hpp"

namespace gridcount::tools {

// One 2D image of a grid quantity. 1D grids give a single-row strip;
// grids with D >= 3 give one slice per combination of the trailing indices.
struct HeatmapSlice {
    // "" for D <= 2, otherwise "_s<i3>[_<i4>...]".
    std::string suffix;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
};

std::vector<HeatmapSlice> slice_grid(const GridGeometry& geometry,
                                     const std::function<double(std::size_t cell)>& value);

void write_csv(const std::filesystem::path& path, const HeatmapSlice& slice);

// Binary greyscale PGM, linearly scaled from [lo, hi] to [0, 255].
void write_pgm(const std::filesystem::path& path, const HeatmapSlice& slice, double lo, double hi);

}  // namespace gridcount::tools
