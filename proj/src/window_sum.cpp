#include "gridcount/window_sum.hpp"

#include <algorithm>
#include <vector>

#include "gridcount/parallel.hpp"

namespace gridcount {
namespace {

// Channels accumulated together in one cumulative table.
constexpr std::size_t kChannelBlock = 32;

// Cumulative table over the replicate-padded grid for one channel block.
// Coordinates along dimension d run over 0..E_d + W_d - 1, where 0 is the
// zero border and p >= 1 holds the cumulative sum through padded slice
// p - 1. Sums are kept in long double so window totals read back from
// large cumulative values keep their absolute accuracy.
class CumulativeTable {
public:
    CumulativeTable(const GridGeometry& geometry, std::size_t block)
        : geometry_(geometry), block_(block) {
        const std::size_t dims = geometry.dims();
        size_.resize(dims);
        stride_.resize(dims);
        std::size_t total = block_;
        for (std::size_t d = dims; d-- > 0;) {
            size_[d] = geometry.extents()[d] + geometry.window()[d];
            stride_[d] = total;
            total *= size_[d];
        }
        table_.assign(total, 0.0L);
    }

    void build(const GridField& field, std::size_t first_channel, std::size_t count) {
        std::fill(table_.begin(), table_.end(), 0.0L);
        const std::size_t dims = geometry_.dims();
        const auto& extents = geometry_.extents();

        // Scatter: padded slice p along d reads source coordinate p mod E_d.
        std::vector<std::size_t> p(dims, 0);
        std::vector<std::size_t> src(dims, 0);
        for (;;) {
            std::size_t dst = 0;
            for (std::size_t d = 0; d < dims; ++d) {
                src[d] = p[d] % extents[d];
                dst += (p[d] + 1) * stride_[d];
            }
            const auto row = field.row(geometry_.linear_index(src));
            for (std::size_t c = 0; c < count; ++c) table_[dst + c] = row[first_channel + c];

            std::size_t d = dims;
            while (d-- > 0) {
                if (++p[d] < size_[d] - 1) break;
                p[d] = 0;
            }
            if (d == static_cast<std::size_t>(-1)) break;
        }

        // Prefix sums along each dimension in turn.
        for (std::size_t d = 0; d < dims; ++d) {
            const std::size_t inner = stride_[d];
            const std::size_t span = size_[d] * inner;
            for (std::size_t outer = 0; outer < table_.size(); outer += span) {
                for (std::size_t s = 1; s < size_[d]; ++s) {
                    long double* cur = table_.data() + outer + s * inner;
                    const long double* prev = cur - inner;
                    for (std::size_t t = 0; t < inner; ++t) cur[t] += prev[t];
                }
            }
        }
    }

    std::size_t stride(std::size_t d) const { return stride_[d]; }
    const long double* data() const { return table_.data(); }

private:
    const GridGeometry& geometry_;
    std::size_t block_;
    std::vector<std::size_t> size_;
    std::vector<std::size_t> stride_;
    std::vector<long double> table_;
};

}  // namespace

GridField window_sum(const GridField& field, WindowDirection direction) {
    const GridGeometry& geometry = field.geometry();
    const std::size_t dims = geometry.dims();
    const std::size_t channels = field.channels();
    const std::size_t block = std::min(channels, kChannelBlock);
    const std::size_t blocks = (channels + block - 1) / block;

    // Reverse sums land on the cell W - 1 past the forward anchor.
    std::vector<std::size_t> shift(dims, 0);
    std::vector<std::size_t> cell_stride(dims, 1);
    for (std::size_t d = dims; d-- > 0;) {
        if (direction == WindowDirection::reverse) shift[d] = geometry.window()[d] - 1;
        if (d + 1 < dims) cell_stride[d] = cell_stride[d + 1] * geometry.extents()[d + 1];
    }

    GridField out(geometry, channels);
    parallel_for(blocks, [&](std::size_t begin, std::size_t end) {
        CumulativeTable table(geometry, block);

        // Corner offsets and signs of the 2^D inclusion-exclusion terms.
        const std::size_t corners = std::size_t{1} << dims;
        std::vector<std::size_t> corner_offset(corners, 0);
        std::vector<int> corner_sign(corners, 1);
        for (std::size_t v = 0; v < corners; ++v) {
            int sign = 1;
            for (std::size_t d = 0; d < dims; ++d) {
                if (v >> d & 1U) {
                    corner_offset[v] += geometry.window()[d] * table.stride(d);
                } else {
                    sign = -sign;
                }
            }
            corner_sign[v] = sign;
        }

        std::vector<long double> acc(block);
        for (std::size_t b = begin; b < end; ++b) {
            const std::size_t first = b * block;
            const std::size_t count = std::min(block, channels - first);
            table.build(field, first, count);

            std::vector<std::size_t> k(dims, 0);
            for (std::size_t n = 0; n < geometry.cells(); ++n) {
                std::size_t base = 0;
                std::size_t dest = 0;
                for (std::size_t d = 0; d < dims; ++d) {
                    base += k[d] * table.stride(d);
                    dest += (k[d] + shift[d]) % geometry.extents()[d] * cell_stride[d];
                }

                std::fill(acc.begin(), acc.end(), 0.0L);
                for (std::size_t v = 0; v < corners; ++v) {
                    const long double* corner = table.data() + base + corner_offset[v];
                    if (corner_sign[v] > 0) {
                        for (std::size_t c = 0; c < count; ++c) acc[c] += corner[c];
                    } else {
                        for (std::size_t c = 0; c < count; ++c) acc[c] -= corner[c];
                    }
                }
                auto row = out.row(dest);
                for (std::size_t c = 0; c < count; ++c) row[first + c] = static_cast<double>(acc[c]);

                for (std::size_t d = dims; d-- > 0;) {
                    if (++k[d] < geometry.extents()[d]) break;
                    k[d] = 0;
                }
            }
        }
    });
    return out;
}

}  // namespace gridcount
