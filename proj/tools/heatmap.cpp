#include "heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "gridcount/errors.hpp"

namespace gridcount::tools {

std::vector<HeatmapSlice> slice_grid(const GridGeometry& geometry,
                                     const std::function<double(std::size_t cell)>& value) {
    const auto& e = geometry.extents();
    const std::size_t rows = geometry.dims() == 1 ? 1 : e[0];
    const std::size_t cols = geometry.dims() == 1 ? e[0] : e[1];
    const std::size_t per_slice = rows * cols;
    const std::size_t slices = geometry.cells() / per_slice;

    std::vector<HeatmapSlice> out(slices);
    std::vector<std::size_t> c(geometry.dims(), 0);
    for (std::size_t s = 0; s < slices; ++s) {
        auto& slice = out[s];
        slice.rows = rows;
        slice.cols = cols;
        slice.values.resize(per_slice);
        // Trailing coordinates for this slice, row-major over dims 3..D.
        std::size_t rest = s;
        for (std::size_t d = geometry.dims(); d-- > 2;) {
            c[d] = rest % e[d];
            rest /= e[d];
        }
        for (std::size_t d = 2; d < geometry.dims(); ++d) {
            slice.suffix += (d == 2 ? "_s" : "_") + std::to_string(c[d]);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t col = 0; col < cols; ++col) {
                if (geometry.dims() == 1) {
                    c[0] = col;
                } else {
                    c[0] = r;
                    c[1] = col;
                }
                slice.values[r * cols + col] = value(geometry.linear_index(c));
            }
        }
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const HeatmapSlice& slice) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    char buf[64];
    for (std::size_t r = 0; r < slice.rows; ++r) {
        for (std::size_t c = 0; c < slice.cols; ++c) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, slice.values[r * slice.cols + c]);
            if (c > 0) out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

void write_pgm(const std::filesystem::path& path, const HeatmapSlice& slice, double lo, double hi) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "P5\n" << slice.cols << ' ' << slice.rows << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (const double v : slice.values) {
        const double t = std::clamp((v - lo) / span, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
    }
}

}  // namespace gridcount::tools
