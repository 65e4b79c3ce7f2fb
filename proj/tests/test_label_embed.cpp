#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "gridcount/label_embed.hpp"
#include "gridcount/synth.hpp"
#include "oracles.hpp"

using namespace gridcount;

namespace {

PosteriorMap point_mass(const GridGeometry& g, std::size_t anchor) {
    std::vector<double> q(g.cells(), 0.0);
    q[anchor] = 1.0;
    return PosteriorMap{g, q, false};
}

PosteriorMap random_posterior(const GridGeometry& g, std::mt19937_64& rng) {
    auto q = oracle::random_values(g.cells(), rng);
    for (double& v : q) v = v * v * v * v;
    const double sum = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& v : q) v /= sum;
    return PosteriorMap{g, q, false};
}

bool in_window(const GridGeometry& g, std::size_t anchor, std::size_t cell) {
    const auto cells = g.window_cells_of(anchor);
    return std::find(cells.begin(), cells.end(), cell) != cells.end();
}

}  // namespace

TEST_CASE("embed: a single class fills the grid") {
    std::mt19937_64 rng(1);
    const GridGeometry g({5, 4}, {2, 2});
    std::vector<PosteriorMap> post;
    for (int t = 0; t < 6; ++t) post.push_back(random_posterior(g, rng));
    const Targets targets{TargetKind::discrete, std::vector<double>(6, 2.0)};
    const auto emb = embed(post, targets);
    CHECK(emb.classes == 3);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        if (emb.mass[i] > 0.0) CHECK(emb.at(i, 2) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("embed: point mass lands on its window") {
    const GridGeometry g({6, 5}, {2, 3});
    const std::size_t k0 = g.linear_index(std::vector<std::size_t>{5, 3});
    const std::vector<PosteriorMap> post{point_mass(g, k0)};
    const auto emb = embed(post, Targets{TargetKind::discrete, {0.0}}, 1e-6, 2);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        if (in_window(g, k0, i)) {
            CHECK(emb.mass[i] == 1.0);
            CHECK(emb.at(i, 0) == doctest::Approx(1.0).epsilon(1e-15));
        } else {
            CHECK(emb.mass[i] == 0.0);
            // Prior: the only observed label is 0.
            CHECK(emb.at(i, 0) == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(emb.at(i, 1) == 0.0);
        }
    }
}

TEST_CASE("embed: continuous targets on disjoint windows") {
    const GridGeometry g({8}, {2});
    const std::vector<PosteriorMap> post{point_mass(g, 0), point_mass(g, 4)};
    const auto emb = embed(post, Targets{TargetKind::continuous, {2.0, 4.0}});
    for (std::size_t i = 0; i < 8; ++i) {
        const double want = (i < 2) ? 2.0 : (i == 4 || i == 5) ? 4.0 : 3.0;
        CHECK(std::abs(emb.at(i) - want) <= 1e-5);
    }
}

TEST_CASE("embed: continuous gamma stays within the target range") {
    std::mt19937_64 rng(8);
    const GridGeometry g({6, 6}, {3, 2});
    std::vector<PosteriorMap> post;
    Targets targets{TargetKind::continuous, {}};
    for (int t = 0; t < 10; ++t) {
        post.push_back(random_posterior(g, rng));
        targets.values.push_back(std::uniform_real_distribution<double>(-5.0, 7.0)(rng));
    }
    const auto emb = embed(post, targets);
    const auto [lo, hi] = std::minmax_element(targets.values.begin(), targets.values.end());
    for (std::size_t i = 0; i < g.cells(); ++i) {
        CHECK(emb.at(i) >= *lo - 1e-12);
        CHECK(emb.at(i) <= *hi + 1e-12);
    }
}

TEST_CASE("embed: discrete rows are distributions") {
    std::mt19937_64 rng(4);
    const GridGeometry g({4, 4, 3}, {2, 2, 2});
    std::vector<PosteriorMap> post;
    Targets targets{TargetKind::discrete, {}};
    for (int t = 0; t < 12; ++t) {
        post.push_back(random_posterior(g, rng));
        targets.values.push_back(static_cast<double>(t % 4));
    }
    const auto emb = embed(post, targets);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        double sum = 0.0;
        for (std::size_t l = 0; l < 4; ++l) {
            CHECK(emb.at(i, l) >= 0.0);
            sum += emb.at(i, l);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("embed: errors") {
    const GridGeometry g({4}, {2});
    CHECK_THROWS_AS(embed(std::vector<PosteriorMap>{}, Targets{}), std::invalid_argument);
    const std::vector<PosteriorMap> post{point_mass(g, 0)};
    CHECK_THROWS_AS(embed(post, Targets{TargetKind::discrete, {3.0}}, 1e-6, 2), std::invalid_argument);
    CHECK_THROWS_AS(embed(post, Targets{TargetKind::discrete, {0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(embed(post, Targets{TargetKind::discrete, {0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("cell occupancy is a distribution") {
    std::mt19937_64 rng(6);
    const GridGeometry g({7, 5}, {3, 4});
    for (int n = 0; n < 5; ++n) {
        const auto p = cell_occupancy(random_posterior(g, rng));
        CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
    }
}

TEST_CASE("predict") {
    const GridGeometry g({8}, {2});
    SUBCASE("uninformative embedding ties to class 0") {
        LabelEmbedding emb{g, TargetKind::discrete, 3, std::vector<double>(24, 1.0 / 3.0), std::vector<double>(8, 1.0)};
        const auto pred = predict(emb, point_mass(g, 5));
        CHECK(pred.label == 0);
        for (const double s : pred.scores) CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("concentrated posterior reads its window") {
        LabelEmbedding emb{g, TargetKind::discrete, 3, std::vector<double>(24, 0.0), std::vector<double>(8, 1.0)};
        for (std::size_t i = 0; i < 8; ++i) emb.gamma[i * 3 + ((i == 3 || i == 4) ? 2 : 0)] = 1.0;
        const auto pred = predict(emb, point_mass(g, 3));
        CHECK(pred.label == 2);
        CHECK(pred.value == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("continuous estimate averages over the occupancy") {
        LabelEmbedding emb{g, TargetKind::continuous, 1, {2, 2, 2, 2, 4, 4, 4, 4}, std::vector<double>(8, 1.0)};
        std::vector<double> q(8, 0.0);
        q[0] = 0.75;
        q[4] = 0.25;
        const auto pred = predict(emb, PosteriorMap{g, q, false});
        CHECK(pred.value == doctest::Approx(2.5).epsilon(1e-15));
    }
    SUBCASE("increasing affine transform of gamma keeps the label") {
        std::mt19937_64 rng(12);
        LabelEmbedding emb{g, TargetKind::discrete, 4, oracle::random_values(32, rng), std::vector<double>(8, 1.0)};
        auto moved = emb;
        for (double& v : moved.gamma) v = 3.0 * v + 7.0;
        for (int n = 0; n < 20; ++n) {
            const auto post = random_posterior(g, rng);
            CHECK(predict(emb, post).label == predict(moved, post).label);
        }
    }
    SUBCASE("training bag with an isolated window predicts its own target") {
        const std::vector<PosteriorMap> post{point_mass(g, 0), point_mass(g, 3), point_mass(g, 6)};
        const Targets y{TargetKind::continuous, {1.5, -2.0, 9.0}};
        const auto emb = embed(post, y, 1e-6);
        for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(predict(emb, post[t]).value - y.values[t]) <= 1e-5);
    }
    SUBCASE("geometry mismatch") {
        LabelEmbedding emb{g, TargetKind::continuous, 1, std::vector<double>(8, 0.0), std::vector<double>(8, 0.0)};
        CHECK_THROWS_AS(predict(emb, point_mass(GridGeometry({4}, {2}), 0)), std::invalid_argument);
    }
}

TEST_CASE("loo_evaluate: two isolated bags fall back to each other's label") {
    const GridGeometry g({8}, {2});
    const std::vector<PosteriorMap> post{point_mass(g, 0), point_mass(g, 4)};
    const auto report = loo_evaluate(post, Targets{TargetKind::discrete, {0.0, 1.0}});
    CHECK(report.predictions == std::vector<double>{1.0, 0.0});
    CHECK(report.value == 0.0);
    CHECK(report.folds == 2);
}

TEST_CASE("loo_evaluate matches an embedding rebuilt without each bag") {
    std::mt19937_64 rng(21);
    const GridGeometry g({5, 6}, {2, 3});
    std::vector<PosteriorMap> post;
    Targets discrete{TargetKind::discrete, {}};
    Targets continuous{TargetKind::continuous, {}};
    for (int t = 0; t < 9; ++t) {
        post.push_back(random_posterior(g, rng));
        discrete.values.push_back(static_cast<double>(t % 3));
        continuous.values.push_back(std::uniform_real_distribution<double>(0.0, 10.0)(rng));
    }
    const auto d_report = loo_evaluate(post, discrete, 1e-3);
    const auto c_report = loo_evaluate(post, continuous, 1e-3);
    std::vector<double> c_pred;
    for (std::size_t t = 0; t < post.size(); ++t) {
        std::vector<PosteriorMap> rest;
        Targets d_rest{TargetKind::discrete, {}}, c_rest{TargetKind::continuous, {}};
        for (std::size_t s = 0; s < post.size(); ++s) {
            if (s == t) continue;
            rest.push_back(post[s]);
            d_rest.values.push_back(discrete.values[s]);
            c_rest.values.push_back(continuous.values[s]);
        }
        CHECK(d_report.predictions[t] == static_cast<double>(predict(embed(rest, d_rest, 1e-3, 3), post[t]).label));
        const double want = predict(embed(rest, c_rest, 1e-3), post[t]).value;
        CHECK(std::abs(c_report.predictions[t] - want) <= 1e-9);
        c_pred.push_back(want);
    }
    CHECK(c_report.value == doctest::Approx(pearson(c_pred, continuous.values)).epsilon(1e-9));
}

TEST_CASE("loo_evaluate: degenerate cases") {
    std::mt19937_64 rng(2);
    const GridGeometry g({4, 4}, {2, 2});
    std::vector<PosteriorMap> post;
    for (int t = 0; t < 5; ++t) post.push_back(random_posterior(g, rng));
    const auto flat = loo_evaluate(post, Targets{TargetKind::continuous, std::vector<double>(5, 1.25)});
    CHECK_FALSE(flat.defined);
    CHECK(flat.to_text().find("defined=false") != std::string::npos);

    const auto single = loo_evaluate(post, Targets{TargetKind::discrete, std::vector<double>(5, 0.0)});
    CHECK(single.value == 1.0);
    CHECK(single.to_text() == "metric=accuracy\nvalue=1\ndefined=true\nfolds=5\n");

    CHECK_THROWS_AS(loo_evaluate(std::vector<PosteriorMap>{post[0]}, Targets{TargetKind::discrete, {0.0}}),
                    std::invalid_argument);
}

TEST_CASE("loo_evaluate on a planted corpus labelled by block") {
    const GridGeometry g({8, 8}, {4, 4});
    SynthSpec spec{g, 24};
    spec.docs = 120;
    spec.words_min = spec.words_max = 60;
    spec.seed = 5;
    spec.labeler = block_labeler(g);
    const auto corpus = generate(spec);
    Targets labels{TargetKind::discrete, {}};
    for (const auto& bag : corpus.bags) labels.values.push_back(*bag.target);

    TrainConfig cfg;
    cfg.max_iters = 80;
    const auto result = fit(corpus.bags, g, 24, cfg);
    const auto report = loo_evaluate(result.posteriors, labels, 1e-6, 4);
    MESSAGE("planted LOO accuracy: " << report.value);
    CHECK(report.value >= 0.6);
}

TEST_CASE("pearson") {
    CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(std::isnan(pearson(std::vector<double>{1, 1}, std::vector<double>{0, 3})));
}
