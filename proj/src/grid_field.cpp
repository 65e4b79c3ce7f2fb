#include "gridcount/grid_field.hpp"

#include <stdexcept>
#include <string>

namespace gridcount {

GridField::GridField(GridGeometry geometry, std::size_t channels, double fill)
    : geometry_(std::move(geometry)), channels_(channels) {
    if (channels_ == 0) throw std::invalid_argument("grid field needs at least one channel");
    values_.assign(geometry_.cells() * channels_, fill);
}

GridField::GridField(GridGeometry geometry, std::size_t channels, std::vector<double> values)
    : geometry_(std::move(geometry)), channels_(channels), values_(std::move(values)) {
    if (channels_ == 0) throw std::invalid_argument("grid field needs at least one channel");
    if (values_.size() != geometry_.cells() * channels_) {
        throw std::invalid_argument("grid field has " + std::to_string(values_.size()) +
                                    " values, expected " +
                                    std::to_string(geometry_.cells() * channels_));
    }
}

GridField translate(const GridField& field, std::span<const long long> offset) {
    GridField out(field.geometry(), field.channels());
    for (std::size_t i = 0; i < field.cells(); ++i) {
        const auto src = field.row(i);
        auto dst = out.row(field.geometry().translate(i, offset));
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

}  // namespace gridcount
