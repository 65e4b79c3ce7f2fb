#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridcount/bag.hpp"
#include "gridcount/counting_grid.hpp"
#include "gridcount/label_embed.hpp"

namespace gridcount {

struct Corpus {
    std::vector<Bag> bags;
    std::size_t vocab_size = 0;
    // Optional word strings, one per id.
    std::vector<std::string> vocab;
};

/**
 * UCI docword text format:
 *
 *     T
 *     Z
 *     NNZ
 *     docID wordID count      (NNZ lines, ids 1-based)
 *
 * Ids become 0-based in memory; documents without entries become empty
 * bags. Malformed headers, out-of-range ids, duplicate (doc, word) pairs,
 * negative counts and entry-count mismatches raise DataError naming the
 * line.
 */
Corpus read_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, const std::string& source = "<stream>");

// Entries are written sorted by (doc, word); counts use the shortest
// round-trip decimal form.
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
void write_corpus(std::ostream& out, const Corpus& corpus);

// One word per line; the line count must equal `vocab_size`.
std::vector<std::string> read_vocab(const std::filesystem::path& path, std::size_t vocab_size);

// One value per line, line t binding to bag t. Discrete values must be
// integers >= 0, continuous ones finite reals.
Targets read_targets(const std::filesystem::path& path, TargetKind kind,
                     std::optional<std::size_t> expected_count = std::nullopt);
Targets parse_targets(std::istream& in, TargetKind kind, std::optional<std::size_t> expected_count = std::nullopt,
                      const std::string& source = "<stream>");
void write_targets(const std::filesystem::path& path, const Targets& targets);

inline constexpr int kModelFormatVersion = 1;

struct Model {
    CountingGrid grid;
    std::optional<LabelEmbedding> embedding;
};

/**
 * Model file: a short text header followed by little-endian IEEE-754
 * doubles.
 *
 *     gridcount-model
 *     version 1
 *     dims D
 *     extent E_1 ... E_D
 *     window W_1 ... W_D
 *     vocab Z
 *     labels none | labels discrete L | labels continuous
 *     payload <byte count>
 *     <pi: cells x Z><gamma: cells x L><mass: cells>
 *
 * The gamma and mass blocks are present only when labels is not "none"
 * (L = 1 for continuous labels).
 */
void write_model(const std::filesystem::path& path, const Model& model);
void write_model(std::ostream& out, const Model& model);
Model read_model(const std::filesystem::path& path);
Model parse_model(std::istream& in);

}  // namespace gridcount
