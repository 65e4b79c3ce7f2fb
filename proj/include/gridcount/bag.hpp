#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridcount {

using WordId = std::uint32_t;

struct WordCount {
    WordId word;
    double count;

    bool operator==(const WordCount&) const = default;
};

/// Sparse bag of words. Entries are kept sorted by word id.
struct Bag {
    std::vector<WordCount> entries;
    std::string id;
    // Discrete labels are stored as integral values.
    std::optional<double> target;

    double total() const;
    bool empty_counts() const;

    bool operator==(const Bag&) const = default;
};

// Builds a bag from (word, count) pairs; sorts and rejects duplicates or
// negative counts with std::invalid_argument.
Bag make_bag(std::vector<WordCount> entries, std::string id = {});

}  // namespace gridcount
