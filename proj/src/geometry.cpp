#include "gridcount/geometry.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace gridcount {

GridGeometry::GridGeometry(Extents extents, Extents window)
    : extents_(std::move(extents)), window_(std::move(window)) {
    if (extents_.empty()) {
        throw std::invalid_argument("grid needs at least one dimension");
    }
    if (extents_.size() != window_.size()) {
        throw std::invalid_argument("extent has " + std::to_string(extents_.size()) +
                                    " dimensions but window has " + std::to_string(window_.size()));
    }
    constexpr auto max_size = std::numeric_limits<std::size_t>::max();
    cells_ = 1;
    window_cells_ = 1;
    for (std::size_t d = 0; d < extents_.size(); ++d) {
        const auto dim = std::to_string(d + 1);
        if (extents_[d] == 0) throw std::invalid_argument("extent is zero in dim " + dim);
        if (window_[d] == 0) throw std::invalid_argument("window is zero in dim " + dim);
        if (window_[d] > extents_[d]) {
            throw std::invalid_argument("window exceeds extent in dim " + dim);
        }
        if (cells_ > max_size / extents_[d]) {
            throw std::invalid_argument("grid cell count overflows the addressable range");
        }
        cells_ *= extents_[d];
        window_cells_ *= window_[d];
    }
}

double GridGeometry::capacity() const {
    return static_cast<double>(cells_) / static_cast<double>(window_cells_);
}

std::size_t GridGeometry::linear_index(std::span<const std::size_t> coords) const {
    if (coords.size() != dims()) throw std::invalid_argument("coordinate dimension mismatch");
    std::size_t index = 0;
    for (std::size_t d = 0; d < dims(); ++d) {
        index = index * extents_[d] + coords[d] % extents_[d];
    }
    return index;
}

std::vector<std::size_t> GridGeometry::coords(std::size_t index) const {
    std::vector<std::size_t> out(dims());
    for (std::size_t d = dims(); d-- > 0;) {
        out[d] = index % extents_[d];
        index /= extents_[d];
    }
    return out;
}

std::size_t GridGeometry::translate(std::size_t index, std::span<const long long> offset) const {
    if (offset.size() != dims()) throw std::invalid_argument("offset dimension mismatch");
    auto c = coords(index);
    for (std::size_t d = 0; d < dims(); ++d) {
        const auto e = static_cast<long long>(extents_[d]);
        const long long shifted = (static_cast<long long>(c[d]) + offset[d] % e + e) % e;
        c[d] = static_cast<std::size_t>(shifted);
    }
    return linear_index(c);
}

std::vector<std::size_t> GridGeometry::window_cells_of(std::size_t anchor) const {
    const auto base = coords(anchor);
    std::vector<std::size_t> out;
    out.reserve(window_cells_);
    std::vector<std::size_t> step(dims(), 0);
    std::vector<std::size_t> c(dims());
    for (std::size_t n = 0; n < window_cells_; ++n) {
        for (std::size_t d = 0; d < dims(); ++d) c[d] = (base[d] + step[d]) % extents_[d];
        out.push_back(linear_index(c));
        for (std::size_t d = dims(); d-- > 0;) {
            if (++step[d] < window_[d]) break;
            step[d] = 0;
        }
    }
    return out;
}

}  // namespace gridcount
