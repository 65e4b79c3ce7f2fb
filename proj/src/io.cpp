#include "gridcount/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gridcount/errors.hpp"

namespace gridcount {
namespace {

std::string located(const std::string& source, std::size_t line, const std::string& what) {
    return source + ":" + std::to_string(line) + ": " + what;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > start) out.push_back(line.substr(start, pos - start));
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view token) {
    T value{};
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

// Reads lines, rejecting blank lines that are followed by content.
class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++number_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) {
            const std::size_t blank_at = number_;
            std::string rest;
            while (std::getline(in_, rest)) {
                ++number_;
                if (!is_blank(rest)) throw DataError(located(source_, blank_at, "unexpected blank line"));
            }
            return false;
        }
        return true;
    }

    std::size_t number() const { return number_; }
    const std::string& source() const { return source_; }
    [[noreturn]] void fail(const std::string& what) const { throw DataError(located(source_, number_, what)); }

private:
    std::istream& in_;
    std::string source_;
    std::size_t number_ = 0;
};

std::size_t read_header_count(LineReader& reader, const char* name) {
    std::string line;
    if (!reader.next(line)) {
        throw DataError(located(reader.source(), reader.number() + 1, std::string("missing header line for ") + name));
    }
    const auto tokens = split(line);
    const auto value = tokens.size() == 1 ? parse_number<std::size_t>(tokens[0]) : std::nullopt;
    if (!value) reader.fail(std::string("malformed header: expected ") + name + ", got '" + line + "'");
    return *value;
}

void put_u64(std::ostream& out, std::uint64_t bits) {
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    out.write(bytes, 8);
}

void put_doubles(std::ostream& out, const std::vector<double>& values) {
    for (const double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::vector<double> get_doubles(std::istream& in, std::size_t count) {
    std::vector<double> out(count);
    char bytes[8];
    for (std::size_t n = 0; n < count; ++n) {
        if (!in.read(bytes, 8)) throw DataError("unexpected end of model payload");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b])) << (8 * b);
        out[n] = std::bit_cast<double>(bits);
    }
    return out;
}

std::vector<std::string_view> header_line(std::istream& in, std::string& line, std::string_view key,
                                          std::size_t min_values) {
    if (!std::getline(in, line)) throw DataError("model header ends before '" + std::string(key) + "'");
    auto tokens = split(line);
    if (tokens.empty() || tokens[0] != key || tokens.size() < min_values + 1) {
        throw DataError("malformed model header line '" + line + "', expected '" + std::string(key) + "'");
    }
    tokens.erase(tokens.begin());
    return tokens;
}

std::size_t header_count(std::string_view token) {
    const auto v = parse_number<std::size_t>(token);
    if (!v) throw DataError("malformed number '" + std::string(token) + "' in model header");
    return *v;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    const std::size_t docs = read_header_count(reader, "document count");
    const std::size_t vocab = read_header_count(reader, "vocabulary size");
    const std::size_t nnz = read_header_count(reader, "entry count");

    Corpus corpus;
    corpus.vocab_size = vocab;
    corpus.bags.resize(docs);
    for (std::size_t t = 0; t < docs; ++t) corpus.bags[t].id = std::to_string(t + 1);

    std::string line;
    std::size_t found = 0;
    while (reader.next(line)) {
        ++found;
        if (found > nnz) {
            std::size_t extra = found;
            while (reader.next(line)) ++extra;
            throw DataError(located(source, reader.number(),
                                    "entry count mismatch: expected " + std::to_string(nnz) + " entries, found " +
                                        std::to_string(extra)));
        }
        const auto tokens = split(line);
        if (tokens.size() != 3) reader.fail("expected 'docID wordID count', got '" + line + "'");
        const auto doc = parse_number<std::size_t>(tokens[0]);
        const auto word = parse_number<std::size_t>(tokens[1]);
        const auto count = parse_number<double>(tokens[2]);
        if (!doc || *doc < 1 || *doc > docs) reader.fail("document id '" + std::string(tokens[0]) + "' out of range");
        if (!word || *word < 1 || *word > vocab) reader.fail("word id '" + std::string(tokens[1]) + "' out of range");
        if (!count || !std::isfinite(*count)) reader.fail("malformed count '" + std::string(tokens[2]) + "'");
        if (*count < 0.0) reader.fail("negative count " + std::string(tokens[2]));

        auto& entries = corpus.bags[*doc - 1].entries;
        const WordCount entry{static_cast<WordId>(*word - 1), *count};
        const auto pos = std::lower_bound(entries.begin(), entries.end(), entry,
                                          [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
        if (pos != entries.end() && pos->word == entry.word) {
            reader.fail("duplicate entry for document " + std::to_string(*doc) + ", word " + std::to_string(*word));
        }
        entries.insert(pos, entry);
    }
    if (found != nnz) {
        throw DataError(located(source, reader.number(),
                                "entry count mismatch: expected " + std::to_string(nnz) + " entries, found " +
                                    std::to_string(found)));
    }
    return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    std::size_t nnz = 0;
    for (const auto& bag : corpus.bags) {
        nnz += bag.entries.size();
        for (const auto& e : bag.entries) {
            if (e.word >= corpus.vocab_size) throw std::invalid_argument("corpus word id exceeds vocabulary");
        }
    }
    out << corpus.bags.size() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
    for (std::size_t t = 0; t < corpus.bags.size(); ++t) {
        auto entries = corpus.bags[t].entries;
        std::sort(entries.begin(), entries.end(), [](const WordCount& a, const WordCount& b) { return a.word < b.word; });
        for (const auto& e : entries) out << t + 1 << ' ' << e.word + 1 << ' ' << format_number(e.count) << '\n';
    }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    auto out = open_output(path);
    write_corpus(out, corpus);
    if (!out) throw DataError("failed writing " + path.string());
}

std::vector<std::string> read_vocab(const std::filesystem::path& path, std::size_t vocab_size) {
    auto in = open_input(path);
    LineReader reader(in, path.string());
    std::vector<std::string> words;
    std::string line;
    while (reader.next(line)) {
        const auto tokens = split(line);
        if (tokens.size() != 1) reader.fail("expected one word per line");
        words.emplace_back(tokens[0]);
    }
    if (words.size() != vocab_size) {
        throw DataError(path.string() + ": vocabulary has " + std::to_string(words.size()) + " words, expected " +
                        std::to_string(vocab_size));
    }
    return words;
}

Targets parse_targets(std::istream& in, TargetKind kind, std::optional<std::size_t> expected_count,
                      const std::string& source) {
    LineReader reader(in, source);
    Targets targets;
    targets.kind = kind;
    std::string line;
    while (reader.next(line)) {
        const auto tokens = split(line);
        if (tokens.size() != 1) reader.fail("expected one value per line");
        if (kind == TargetKind::discrete) {
            const auto label = parse_number<long long>(tokens[0]);
            if (!label || *label < 0) reader.fail("expected a non-negative integer label, got '" + line + "'");
            targets.values.push_back(static_cast<double>(*label));
        } else {
            const auto value = parse_number<double>(tokens[0]);
            if (!value || !std::isfinite(*value)) reader.fail("expected a finite real value, got '" + line + "'");
            targets.values.push_back(*value);
        }
    }
    if (expected_count && targets.values.size() != *expected_count) {
        throw DataError(source + ": " + std::to_string(targets.values.size()) + " targets for " +
                        std::to_string(*expected_count) + " bags");
    }
    return targets;
}

Targets read_targets(const std::filesystem::path& path, TargetKind kind, std::optional<std::size_t> expected_count) {
    auto in = open_input(path);
    return parse_targets(in, kind, expected_count, path.string());
}

void write_targets(const std::filesystem::path& path, const Targets& targets) {
    auto out = open_output(path);
    for (const double y : targets.values) out << format_number(y) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

void write_model(std::ostream& out, const Model& model) {
    const auto& geometry = model.grid.geometry();
    const std::size_t cells = geometry.cells();
    std::size_t doubles = cells * model.grid.vocab_size();

    out << "gridcount-model\n";
    out << "version " << kModelFormatVersion << '\n';
    out << "dims " << geometry.dims() << '\n';
    out << "extent";
    for (const auto e : geometry.extents()) out << ' ' << e;
    out << "\nwindow";
    for (const auto w : geometry.window()) out << ' ' << w;
    out << "\nvocab " << model.grid.vocab_size() << '\n';
    if (model.embedding) {
        const auto& emb = *model.embedding;
        if (emb.geometry != geometry) throw std::invalid_argument("embedding geometry does not match the grid");
        out << "labels " << to_string(emb.kind);
        if (emb.kind == TargetKind::discrete) out << ' ' << emb.classes;
        out << '\n';
        doubles += cells * emb.classes + cells;
    } else {
        out << "labels none\n";
    }
    out << "payload " << doubles * 8 << '\n';

    put_doubles(out, model.grid.pi().values());
    if (model.embedding) {
        put_doubles(out, model.embedding->gamma);
        put_doubles(out, model.embedding->mass);
    }
}

void write_model(const std::filesystem::path& path, const Model& model) {
    auto out = open_output(path, std::ios::binary);
    write_model(out, model);
    if (!out) throw DataError("failed writing " + path.string());
}

Model parse_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "gridcount-model") throw DataError("not a gridcount model file");
    const auto version = header_count(header_line(in, line, "version", 1)[0]);
    if (version != static_cast<std::size_t>(kModelFormatVersion)) {
        throw DataError("model format version mismatch: file has " + std::to_string(version) + ", expected " +
                        std::to_string(kModelFormatVersion));
    }
    const std::size_t dims = header_count(header_line(in, line, "dims", 1)[0]);
    Extents extent, window;
    for (const auto t : header_line(in, line, "extent", dims)) extent.push_back(header_count(t));
    for (const auto t : header_line(in, line, "window", dims)) window.push_back(header_count(t));
    if (extent.size() != dims || window.size() != dims) throw DataError("model header dimension mismatch");
    const std::size_t vocab = header_count(header_line(in, line, "vocab", 1)[0]);
    const auto labels = header_line(in, line, "labels", 1);

    std::optional<GridGeometry> geometry;
    try {
        geometry.emplace(extent, window);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid model geometry: ") + e.what());
    }
    const std::size_t cells = geometry->cells();

    std::optional<TargetKind> kind;
    std::size_t classes = 1;
    if (labels[0] == "discrete") {
        if (labels.size() != 2) throw DataError("discrete labels need a class count");
        kind = TargetKind::discrete;
        classes = header_count(labels[1]);
        if (classes == 0) throw DataError("discrete labels need at least one class");
    } else if (labels[0] == "continuous" && labels.size() == 1) {
        kind = TargetKind::continuous;
    } else if (!(labels[0] == "none" && labels.size() == 1)) {
        throw DataError("malformed labels line '" + line + "'");
    }

    const std::size_t payload = header_count(header_line(in, line, "payload", 1)[0]);
    const std::size_t doubles = cells * vocab + (kind ? cells * classes + cells : 0);
    if (payload != doubles * 8) {
        throw DataError("model payload size " + std::to_string(payload) + " does not match declared dimensions (" +
                        std::to_string(doubles * 8) + " bytes)");
    }

    auto pi = get_doubles(in, cells * vocab);
    std::optional<LabelEmbedding> embedding;
    if (kind) {
        auto gamma = get_doubles(in, cells * classes);
        auto mass = get_doubles(in, cells);
        embedding = LabelEmbedding{*geometry, *kind, classes, std::move(gamma), std::move(mass)};
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after model payload");

    try {
        CountingGrid grid(GridField(*geometry, vocab, std::move(pi)));
        if (embedding) {
            for (const double v : embedding->gamma) {
                if (!std::isfinite(v)) throw std::invalid_argument("non-finite label embedding value");
            }
            for (const double v : embedding->mass) {
                if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("invalid label mass");
            }
        }
        return Model{std::move(grid), std::move(embedding)};
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("model violates invariants: ") + e.what());
    }
}

Model read_model(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::binary);
    return parse_model(in);
}

}  // namespace gridcount
