// gridcount: train, embed, evaluate and inspect counting grids.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridcount/em.hpp"
#include "gridcount/errors.hpp"
#include "gridcount/io.hpp"
#include "gridcount/label_embed.hpp"
#include "gridcount/parallel.hpp"
#include "gridcount/synth.hpp"
#include "heatmap.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace gridcount;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Allowed relative bound drop per iteration with pseudocounts and floors on.
constexpr double kBoundSlack = 1e-6;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PhaseTimer {
public:
    void start(std::string name) {
        name_ = std::move(name);
        begin_ = std::chrono::steady_clock::now();
    }
    void stop() {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
        phases_[name_] = elapsed;
    }
    const ordered_json& json() const { return phases_; }

private:
    std::string name_;
    std::chrono::steady_clock::time_point begin_;
    ordered_json phases_ = ordered_json::object();
};

struct GeometryFlags {
    std::size_t dims = 0;
    Extents extent;
    Extents window;

    void add_to(CLI::App& cmd, bool required) {
        auto* d = cmd.add_option("--dims", dims, "Number of grid dimensions D");
        auto* e = cmd.add_option("--extent", extent, "Grid extent per dimension")->expected(1, -1);
        auto* w = cmd.add_option("--window", window, "Window size per dimension")->expected(1, -1);
        if (required) {
            d->required();
            e->required();
            w->required();
        }
    }

    bool given() const { return dims != 0 || !extent.empty() || !window.empty(); }

    GridGeometry resolve() const {
        if (dims == 0) throw UsageError("--dims must be at least 1");
        if (extent.size() != dims) {
            throw UsageError("--extent has " + std::to_string(extent.size()) + " values but --dims is " +
                             std::to_string(dims));
        }
        if (window.size() != dims) {
            throw UsageError("--window has " + std::to_string(window.size()) + " values but --dims is " +
                             std::to_string(dims));
        }
        try {
            return GridGeometry(extent, window);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
};

struct TrainFlags {
    TrainConfig config;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--iters", config.max_iters, "Maximum EM iterations")->capture_default_str();
        cmd.add_option("--tol", config.rel_tol, "Relative bound-change stopping tolerance")->capture_default_str();
        cmd.add_option("--seed", config.seed, "Random seed")->capture_default_str();
        cmd.add_option("--noise", config.init_noise, "Initialization noise in (0, 1]")->capture_default_str();
        cmd.add_option("--pseudocount", config.pseudocount, "Additive smoothing after each M-step")
            ->capture_default_str();
    }

    const TrainConfig& resolve() const {
        try {
            config.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return config;
    }
};

ordered_json geometry_json(const GridGeometry& g) {
    return ordered_json{{"dims", g.dims()}, {"extent", g.extents()}, {"window", g.window()}, {"capacity", g.capacity()}};
}

ordered_json config_json(const TrainConfig& c) {
    return ordered_json{{"max_iters", c.max_iters},
                        {"rel_tol", c.rel_tol},
                        {"seed", c.seed},
                        {"init_noise", c.init_noise},
                        {"pseudocount", c.pseudocount}};
}

ordered_json fit_json(const FitResult& r) {
    return ordered_json{{"iterations", r.iterations},
                        {"converged", r.converged},
                        {"initial_bound", r.bound_trace.front()},
                        {"final_bound", r.bound_trace.back()},
                        {"max_relative_drop", r.max_relative_drop}};
}

ordered_json report_json(const MetricReport& r) {
    ordered_json j{{"metric", r.metric}, {"defined", r.defined}, {"folds", r.folds}};
    j["value"] = r.defined ? ordered_json(r.value) : ordered_json(nullptr);
    return j;
}

void write_manifest(const fs::path& path, const ordered_json& manifest) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Targets targets_of(const std::vector<Bag>& bags, TargetKind kind) {
    Targets targets{kind, {}};
    for (const auto& bag : bags) {
        if (bag.target) targets.values.push_back(*bag.target);
    }
    return targets;
}

FitResult train_checked(const Corpus& corpus, const GridGeometry& geometry, const TrainConfig& config, bool verbose) {
    const auto result = fit(corpus.bags, geometry, corpus.vocab_size, config, std::nullopt,
                            [verbose](std::size_t iter, double bound) {
                                if (verbose) std::cout << "iter " << iter << " bound " << format_double(bound) << '\n';
                            });
    if (result.max_relative_drop > kBoundSlack) {
        throw NumericError("variational bound decreased by " + format_double(result.max_relative_drop) +
                           " (relative), beyond the allowed slack");
    }
    return result;
}

void check_vocab(const Corpus& corpus, const CountingGrid& grid) {
    if (corpus.vocab_size != grid.vocab_size()) {
        throw DataError("vocabulary mismatch: corpus has " + std::to_string(corpus.vocab_size) +
                        " words, model has " + std::to_string(grid.vocab_size()));
    }
}

// ---------------------------------------------------------------- train

struct TrainCmd {
    fs::path corpus;
    fs::path out;
    fs::path manifest;
    bool quiet = false;
    GeometryFlags geometry;
    TrainFlags train;

    void add_to(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Fit a counting grid to a docword corpus");
        cmd->add_option("corpus", corpus, "UCI docword corpus")->required();
        geometry.add_to(*cmd, true);
        train.add_to(*cmd);
        cmd->add_option("--out", out, "Output model file")->required();
        cmd->add_option("--manifest", manifest, "Run manifest (default: <out>.manifest.json)");
        cmd->add_flag("--quiet", quiet, "Do not print per-iteration bounds");
        cmd->callback([this] { run(); });
    }

    void run() {
        const GridGeometry g = geometry.resolve();
        const TrainConfig& config = train.resolve();
        if (manifest.empty()) manifest = fs::path(out.string() + ".manifest.json");

        PhaseTimer timer;
        timer.start("read");
        const Corpus data = read_corpus(corpus);
        timer.stop();

        timer.start("train");
        const auto result = train_checked(data, g, config, !quiet);
        timer.stop();

        timer.start("write");
        write_model(out, Model{result.grid, std::nullopt});
        timer.stop();

        std::cout << "capacity " << format_double(g.capacity()) << '\n';
        std::cout << "final bound " << format_double(result.bound_trace.back()) << " after " << result.iterations
                  << " iterations" << (result.converged ? " (converged)" : "") << '\n';

        ordered_json m;
        m["command"] = "train";
        m["geometry"] = geometry_json(g);
        m["vocab_size"] = data.vocab_size;
        m["documents"] = data.bags.size();
        m["config"] = config_json(config);
        m["threads"] = worker_count();
        m["inputs"] = {{"corpus", corpus.string()}};
        m["outputs"] = {{"model", out.string()}, {"manifest", manifest.string()}};
        m["timings_sec"] = timer.json();
        m["result"] = fit_json(result);
        write_manifest(manifest, m);
    }
};

// ---------------------------------------------------------------- embed

struct EmbedCmd {
    fs::path model;
    fs::path corpus;
    fs::path targets;
    std::string kind = "discrete";
    double alpha = 1e-6;
    std::size_t classes = 0;
    fs::path out;

    void add_to(CLI::App& app) {
        auto* cmd = app.add_subcommand("embed", "Embed targets into a model and predict the corpus");
        cmd->add_option("model", model, "Model file; the label block is written back into it")->required();
        cmd->add_option("corpus", corpus, "UCI docword corpus")->required();
        cmd->add_option("targets", targets, "One target per line")->required();
        cmd->add_option("--kind", kind, "discrete or continuous")
            ->check(CLI::IsMember({"discrete", "continuous"}))
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "Prior smoothing strength")->capture_default_str();
        cmd->add_option("--classes", classes, "Number of classes (0 = from the data)")->capture_default_str();
        cmd->add_option("--out", out, "Predictions, one per line")->required();
        cmd->callback([this] { run(); });
    }

    void run() {
        if (!(alpha > 0.0)) throw UsageError("--alpha must be positive");
        const TargetKind target_kind = parse_target_kind(kind);
        Model m = read_model(model);
        const Corpus data = read_corpus(corpus);
        check_vocab(data, m.grid);
        const Targets y = read_targets(targets, target_kind, data.bags.size());

        const auto posteriors = e_step(compute_histograms(m.grid), data.bags);
        m.embedding = embed(posteriors, y, alpha, classes);
        write_model(model, m);

        std::ofstream pred(out);
        if (!pred) throw DataError("cannot write " + out.string());
        for (const auto& post : posteriors) {
            const auto p = predict(*m.embedding, post);
            if (target_kind == TargetKind::discrete) {
                pred << p.label << '\n';
            } else {
                pred << format_double(p.value) << '\n';
            }
        }
        std::cout << "embedded " << y.values.size() << " " << kind << " targets into " << model.string() << '\n';
    }
};

// ---------------------------------------------------------------- loo

struct LooCmd {
    fs::path corpus;
    fs::path targets;
    std::string kind = "discrete";
    double alpha = 1e-6;
    std::size_t classes = 0;
    fs::path model;
    fs::path manifest;
    fs::path predictions;
    GeometryFlags geometry;
    TrainFlags train;

    void add_to(CLI::App& app) {
        auto* cmd = app.add_subcommand("loo", "Leave-one-out label readout over a trained grid");
        cmd->add_option("corpus", corpus, "UCI docword corpus")->required();
        cmd->add_option("targets", targets, "One target per line")->required();
        cmd->add_option("--kind", kind, "discrete or continuous")
            ->check(CLI::IsMember({"discrete", "continuous"}))
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "Prior smoothing strength")->capture_default_str();
        cmd->add_option("--classes", classes, "Number of classes (0 = from the data)")->capture_default_str();
        cmd->add_option("--model", model, "Use this trained model instead of training");
        geometry.add_to(*cmd, false);
        train.add_to(*cmd);
        cmd->add_option("--manifest", manifest, "Run manifest (default: <corpus>.loo.manifest.json)");
        cmd->add_option("--predictions", predictions, "Write the per-bag LOO predictions here");
        cmd->callback([this] { run(); });
    }

    void run() {
        if (!(alpha > 0.0)) throw UsageError("--alpha must be positive");
        if (model.empty() == !geometry.given()) {
            throw UsageError("give either --model or --dims/--extent/--window");
        }
        const TargetKind target_kind = parse_target_kind(kind);
        std::optional<GridGeometry> g;
        if (!geometry.given()) {
            // geometry comes from the model
        } else {
            g = geometry.resolve();
        }
        const TrainConfig& config = train.resolve();
        if (manifest.empty()) manifest = fs::path(corpus.string() + ".loo.manifest.json");

        PhaseTimer timer;
        timer.start("read");
        const Corpus data = read_corpus(corpus);
        const Targets y = read_targets(targets, target_kind, data.bags.size());
        timer.stop();

        ordered_json m;
        m["command"] = "loo";
        std::vector<PosteriorMap> posteriors;
        if (!model.empty()) {
            timer.start("infer");
            const Model trained = read_model(model);
            check_vocab(data, trained.grid);
            posteriors = e_step(compute_histograms(trained.grid), data.bags);
            timer.stop();
            m["geometry"] = geometry_json(trained.grid.geometry());
        } else {
            timer.start("train");
            const auto result = train_checked(data, *g, config, false);
            timer.stop();
            posteriors = result.posteriors;
            m["geometry"] = geometry_json(*g);
            m["config"] = config_json(config);
            m["fit"] = fit_json(result);
        }

        timer.start("evaluate");
        const auto report = loo_evaluate(posteriors, y, alpha, classes);
        timer.stop();

        std::cout << report.to_text();
        if (!predictions.empty()) {
            std::ofstream out(predictions);
            if (!out) throw DataError("cannot write " + predictions.string());
            for (const double p : report.predictions) out << format_double(p) << '\n';
        }

        m["vocab_size"] = data.vocab_size;
        m["documents"] = data.bags.size();
        m["kind"] = kind;
        m["alpha"] = alpha;
        m["threads"] = worker_count();
        m["inputs"] = {{"corpus", corpus.string()}, {"targets", targets.string()}};
        if (!model.empty()) m["inputs"]["model"] = model.string();
        m["outputs"] = {{"manifest", manifest.string()}};
        if (!predictions.empty()) m["outputs"]["predictions"] = predictions.string();
        m["timings_sec"] = timer.json();
        m["metrics"] = report_json(report);
        write_manifest(manifest, m);
    }
};

// ---------------------------------------------------------------- synth

struct SynthCmd {
    GeometryFlags geometry;
    std::size_t vocab = 0;
    std::size_t docs = 0;
    std::size_t words = 0;
    std::size_t words_min = 0;
    std::size_t words_max = 0;
    std::uint64_t seed = 0;
    double sharpness = 10.0;
    std::string labels = "none";
    fs::path planted;
    std::string out;

    void add_to(CLI::App& app) {
        auto* cmd = app.add_subcommand("synth", "Sample a corpus from a planted counting grid");
        geometry.add_to(*cmd, true);
        cmd->add_option("--vocab", vocab, "Vocabulary size Z")->required();
        cmd->add_option("--docs", docs, "Number of documents")->required();
        auto* fixed = cmd->add_option("--words", words, "Words per document");
        auto* lo = cmd->add_option("--words-min", words_min, "Minimum words per document");
        auto* hi = cmd->add_option("--words-max", words_max, "Maximum words per document");
        fixed->excludes(lo)->excludes(hi);
        lo->needs(hi);
        hi->needs(lo);
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
        cmd->add_option("--sharpness", sharpness, "Concentration of blocky distributions")->capture_default_str();
        cmd->add_option("--labels", labels, "Label documents: none or block")
            ->check(CLI::IsMember({"none", "block"}))
            ->capture_default_str();
        cmd->add_option("--planted", planted, "Sample from this model instead of a blocky grid");
        cmd->add_option("--out", out, "Output prefix")->required();
        cmd->callback([this] { run(); });
    }

    void run() {
        const GridGeometry g = geometry.resolve();
        SynthSpec spec{.geometry = g, .vocab_size = vocab};
        spec.docs = docs;
        spec.seed = seed;
        spec.sharpness = sharpness;
        if (words != 0) {
            spec.words_min = spec.words_max = words;
        } else if (words_min != 0) {
            spec.words_min = words_min;
            spec.words_max = words_max;
        } else {
            throw UsageError("give --words or --words-min/--words-max");
        }
        if (!planted.empty()) {
            spec.planted = read_model(planted).grid;
            if (spec.planted->geometry() != g || spec.planted->vocab_size() != vocab) {
                throw UsageError("--planted model does not match --extent/--window/--vocab");
            }
        }
        if (labels == "block") spec.labeler = block_labeler(g);

        const SynthCorpus corpus = [&] {
            try {
                return generate(spec);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
        }();

        const fs::path docword = out + ".docword.txt";
        const fs::path anchors = out + ".anchors.txt";
        const fs::path truth = out + ".planted.model";
        write_corpus(docword, Corpus{corpus.bags, vocab, {}});
        write_model(truth, Model{corpus.planted, std::nullopt});
        {
            std::ofstream a(anchors);
            if (!a) throw DataError("cannot write " + anchors.string());
            for (const auto k : corpus.anchors) {
                a << k;
                for (const auto c : g.coords(k)) a << ' ' << c;
                a << '\n';
            }
        }
        ordered_json m;
        m["command"] = "synth";
        m["geometry"] = geometry_json(g);
        m["vocab_size"] = vocab;
        m["documents"] = docs;
        m["words_min"] = spec.words_min;
        m["words_max"] = spec.words_max;
        m["seed"] = seed;
        m["planted"] = planted.empty() ? ordered_json("blocky") : ordered_json(planted.string());
        if (planted.empty()) m["sharpness"] = sharpness;
        m["labels"] = labels;
        m["outputs"] = {{"corpus", docword.string()}, {"anchors", anchors.string()}, {"planted", truth.string()}};
        if (labels == "block") {
            const fs::path target_path = out + ".targets.txt";
            write_targets(target_path, targets_of(corpus.bags, TargetKind::discrete));
            m["outputs"]["targets"] = target_path.string();
        }
        write_manifest(out + ".manifest.json", m);
        std::cout << "wrote " << docs << " documents to " << docword.string() << '\n';
    }
};

// ---------------------------------------------------------------- info

struct InfoCmd {
    fs::path model;
    fs::path vocab;
    std::size_t top = 0;
    std::string heatmap;
    std::string format = "csv";
    std::vector<std::size_t> words;

    void add_to(CLI::App& app) {
        auto* cmd = app.add_subcommand("info", "Describe a model and export heatmaps");
        cmd->add_option("model", model, "Model file")->required();
        cmd->add_option("--vocab", vocab, "Vocabulary file, one word per line");
        cmd->add_option("--top", top, "Print the top-m words of every cell");
        cmd->add_option("--heatmap", heatmap, "Output prefix for heatmap exports");
        cmd->add_option("--format", format, "Heatmap format: csv, pgm or both")
            ->check(CLI::IsMember({"csv", "pgm", "both"}))
            ->capture_default_str();
        cmd->add_option("--word", words, "Export pi of these word ids (0-based)")->expected(1, -1);
        cmd->callback([this] { run(); });
    }

    void export_field(const std::string& name, const GridGeometry& g,
                      const std::function<double(std::size_t)>& value) const {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < g.cells(); ++i) {
            lo = std::min(lo, value(i));
            hi = std::max(hi, value(i));
        }
        for (const auto& slice : tools::slice_grid(g, value)) {
            const std::string base = heatmap + "_" + name + slice.suffix;
            if (format != "pgm") tools::write_csv(base + ".csv", slice);
            if (format != "csv") tools::write_pgm(base + ".pgm", slice, lo, hi);
        }
    }

    void run() {
        const Model m = read_model(model);
        const auto& g = m.grid.geometry();
        const std::size_t z_count = m.grid.vocab_size();

        std::cout << "dims " << g.dims() << '\n';
        std::cout << "extent";
        for (const auto e : g.extents()) std::cout << ' ' << e;
        std::cout << "\nwindow";
        for (const auto w : g.window()) std::cout << ' ' << w;
        std::cout << "\ncapacity " << format_double(g.capacity()) << '\n';
        std::cout << "vocab " << z_count << '\n';
        if (m.embedding) {
            std::cout << "labels " << to_string(m.embedding->kind);
            if (m.embedding->kind == TargetKind::discrete) std::cout << ' ' << m.embedding->classes;
            std::cout << '\n';
        } else {
            std::cout << "labels none\n";
        }

        std::vector<std::string> names;
        if (!vocab.empty()) names = read_vocab(vocab, z_count);
        if (top == 0 && !names.empty()) top = 5;
        if (top > 0) {
            const std::size_t m_top = std::min(top, z_count);
            std::vector<std::size_t> order(z_count);
            for (std::size_t i = 0; i < g.cells(); ++i) {
                const auto row = m.grid.pi().row(i);
                std::iota(order.begin(), order.end(), 0);
                std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m_top), order.end(),
                                  [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
                std::cout << "cell";
                for (const auto c : g.coords(i)) std::cout << ' ' << c;
                std::cout << ':';
                for (std::size_t n = 0; n < m_top; ++n) {
                    std::cout << ' ' << (names.empty() ? std::to_string(order[n]) : names[order[n]]);
                }
                std::cout << '\n';
            }
        }

        if (!heatmap.empty()) {
            for (const auto z : words) {
                if (z >= z_count) throw UsageError("--word " + std::to_string(z) + " exceeds the vocabulary");
                export_field("pi_w" + std::to_string(z), g, [&](std::size_t i) { return m.grid.pi().at(i, z); });
            }
            if (m.embedding) {
                const auto& emb = *m.embedding;
                if (emb.kind == TargetKind::continuous) {
                    export_field("gamma", g, [&](std::size_t i) { return emb.at(i); });
                } else {
                    for (std::size_t l = 0; l < emb.classes; ++l) {
                        export_field("gamma_l" + std::to_string(l), g, [&](std::size_t i) { return emb.at(i, l); });
                    }
                }
                export_field("mass", g, [&](std::size_t i) { return emb.mass[i]; });
            }
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counting grids over bags of words"};
    app.require_subcommand(1);

    TrainCmd train;
    EmbedCmd embed_cmd;
    LooCmd loo;
    SynthCmd synth;
    InfoCmd info;
    train.add_to(app);
    embed_cmd.add_to(app);
    loo.add_to(app);
    synth.add_to(app);
    info.add_to(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
