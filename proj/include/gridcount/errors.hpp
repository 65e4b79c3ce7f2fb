#pragma once

#include <stdexcept>
#include <string>

namespace gridcount {

// Malformed or inconsistent input data (files, targets, vocabularies).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced a numerically invalid state, e.g. the bound dropped
// beyond the allowed slack.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gridcount
