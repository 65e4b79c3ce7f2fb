#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gridcount/geometry.hpp"

namespace gridcount {

/// Dense real tensor over grid cells x channels, channels innermost.
class GridField {
public:
    GridField(GridGeometry geometry, std::size_t channels, double fill = 0.0);
    // Throws std::invalid_argument if values.size() != cells * channels.
    GridField(GridGeometry geometry, std::size_t channels, std::vector<double> values);

    const GridGeometry& geometry() const { return geometry_; }
    std::size_t channels() const { return channels_; }
    std::size_t cells() const { return geometry_.cells(); }

    double& at(std::size_t cell, std::size_t channel) { return values_[cell * channels_ + channel]; }
    double at(std::size_t cell, std::size_t channel) const { return values_[cell * channels_ + channel]; }

    std::span<double> row(std::size_t cell) { return {values_.data() + cell * channels_, channels_}; }
    std::span<const double> row(std::size_t cell) const {
        return {values_.data() + cell * channels_, channels_};
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const GridField&) const = default;

private:
    GridGeometry geometry_;
    std::size_t channels_;
    std::vector<double> values_;
};

// out[(i + offset) mod E] = field[i] for every cell.
GridField translate(const GridField& field, std::span<const long long> offset);

}  // namespace gridcount
