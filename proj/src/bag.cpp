#include "gridcount/bag.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gridcount {

double Bag::total() const {
    double sum = 0.0;
    for (const auto& e : entries) sum += e.count;
    return sum;
}

bool Bag::empty_counts() const {
    return std::none_of(entries.begin(), entries.end(), [](const WordCount& e) { return e.count > 0.0; });
}

Bag make_bag(std::vector<WordCount> entries, std::string id) {
    std::sort(entries.begin(), entries.end(),
              [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
    for (std::size_t n = 0; n < entries.size(); ++n) {
        if (!std::isfinite(entries[n].count) || entries[n].count < 0.0) {
            throw std::invalid_argument("negative or non-finite count for word " +
                                        std::to_string(entries[n].word));
        }
        if (n > 0 && entries[n].word == entries[n - 1].word) {
            throw std::invalid_argument("duplicate word id " + std::to_string(entries[n].word));
        }
    }
    Bag bag;
    bag.entries = std::move(entries);
    bag.id = std::move(id);
    return bag;
}

}  // namespace gridcount
