#include "gridcount/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "gridcount/grid_field.hpp"
#include "random.hpp"

namespace gridcount {

std::size_t block_of(const GridGeometry& geometry, std::size_t cell) {
    const auto c = geometry.coords(cell);
    std::size_t block = 0;
    for (std::size_t d = 0; d < geometry.dims(); ++d) {
        const std::size_t per_dim = (geometry.extents()[d] + geometry.window()[d] - 1) / geometry.window()[d];
        block = block * per_dim + c[d] / geometry.window()[d];
    }
    return block;
}

CountingGrid blocky_grid(const GridGeometry& geometry, std::size_t vocab_size, double sharpness,
                         std::uint64_t seed) {
    if (vocab_size == 0) throw std::invalid_argument("vocabulary must be non-empty");
    if (!(sharpness >= 0.0) || !std::isfinite(sharpness)) {
        throw std::invalid_argument("sharpness must be a non-negative finite number");
    }
    std::mt19937_64 rng(seed);
    std::map<std::size_t, std::vector<double>> blocks;
    GridField pi(geometry, vocab_size);
    for (std::size_t i = 0; i < geometry.cells(); ++i) {
        auto [it, fresh] = blocks.try_emplace(block_of(geometry, i));
        if (fresh) {
            auto& dist = it->second;
            dist.resize(vocab_size);
            for (double& v : dist) v = std::exp(sharpness * detail::unit_uniform(rng));
            normalize_with_floor(dist, kProbFloor);
        }
        std::copy(it->second.begin(), it->second.end(), pi.row(i).begin());
    }
    return CountingGrid(std::move(pi));
}

AnchorLabeler block_labeler(const GridGeometry& geometry) {
    std::vector<long long> half(geometry.dims());
    for (std::size_t d = 0; d < geometry.dims(); ++d) half[d] = static_cast<long long>(geometry.window()[d] / 2);
    return [geometry, half](std::size_t anchor) { return block_of(geometry, geometry.translate(anchor, half)); };
}

SynthCorpus generate(const SynthSpec& spec) {
    if (spec.docs == 0) throw std::invalid_argument("synthetic corpus needs at least one document");
    if (spec.words_min == 0 || spec.words_max < spec.words_min) {
        throw std::invalid_argument("document length range must satisfy 1 <= min <= max");
    }
    CountingGrid planted = spec.planted ? *spec.planted
                                        : blocky_grid(spec.geometry, spec.vocab_size, spec.sharpness, spec.seed);
    if (planted.geometry() != spec.geometry || planted.vocab_size() != spec.vocab_size) {
        throw std::invalid_argument("planted grid does not match the synth geometry");
    }

    const GridField h = compute_histograms(planted);
    const std::size_t vocab = spec.vocab_size;
    // Per-anchor cumulative distributions for inverse-CDF sampling.
    std::vector<double> cdf(h.values().size());
    for (std::size_t k = 0; k < h.cells(); ++k) {
        const auto row = h.row(k);
        double acc = 0.0;
        for (std::size_t z = 0; z < vocab; ++z) {
            acc += row[z];
            cdf[k * vocab + z] = acc;
        }
    }

    SynthCorpus out{{}, {}, planted};
    out.bags.reserve(spec.docs);
    out.anchors.reserve(spec.docs);
    std::vector<double> counts(vocab);
    for (std::size_t t = 0; t < spec.docs; ++t) {
        std::mt19937_64 rng(detail::derive_seed(spec.seed, t));
        const std::size_t anchor = detail::uniform_index(rng, h.cells());
        const std::size_t words = spec.words_min + detail::uniform_index(rng, spec.words_max - spec.words_min + 1);

        const double* first = cdf.data() + anchor * vocab;
        const double total = first[vocab - 1];
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t n = 0; n < words; ++n) {
            const double u = detail::unit_uniform(rng) * total;
            const auto z = static_cast<std::size_t>(std::upper_bound(first, first + vocab, u) - first);
            counts[std::min(z, vocab - 1)] += 1.0;
        }

        Bag bag;
        bag.id = std::to_string(t + 1);
        for (std::size_t z = 0; z < vocab; ++z) {
            if (counts[z] > 0.0) bag.entries.push_back({static_cast<WordId>(z), counts[z]});
        }
        if (spec.labeler) bag.target = static_cast<double>(spec.labeler(anchor));
        out.bags.push_back(std::move(bag));
        out.anchors.push_back(anchor);
    }
    return out;
}

}  // namespace gridcount
