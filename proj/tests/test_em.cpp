#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "gridcount/em.hpp"
#include "gridcount/synth.hpp"
#include "oracles.hpp"

using namespace gridcount;

namespace {

double entropy(const std::vector<double>& q) {
    double h = 0.0;
    for (const double v : q) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

std::vector<Bag> toy_corpus(std::size_t docs, std::size_t vocab, std::size_t words, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Bag> bags;
    for (std::size_t t = 0; t < docs; ++t) bags.push_back(oracle::random_bag(vocab, words, rng));
    return bags;
}

double mean_word_log_evidence(const CountingGrid& grid, const std::vector<Bag>& bags) {
    const auto h = compute_histograms(grid);
    double ll = 0.0, words = 0.0;
    for (const auto& bag : bags) {
        ll += log_evidence(h, bag);
        words += bag.total();
    }
    return ll / words;
}

}  // namespace

TEST_CASE("init_grid") {
    const GridGeometry g({4, 5}, {2, 2});
    const auto a = init_grid(g, 7, 42, 0.1);
    const auto b = init_grid(g, 7, 42, 0.1);
    const auto c = init_grid(g, 7, 43, 0.1);
    CHECK(a.pi().values() == b.pi().values());
    CHECK(a.pi().values() != c.pi().values());

    const auto flat = init_grid(g, 7, 42, 1e-300);
    for (const double v : flat.pi().values()) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-15));

    for (std::size_t i = 0; i < a.pi().cells(); ++i) {
        const auto row = a.pi().row(i);
        CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
    }
}

TEST_CASE("e_step") {
    SUBCASE("uniform histograms give a uniform posterior") {
        const GridGeometry g({3, 4}, {2, 2});
        const GridField h(g, 5, 0.2);
        const auto post = e_step(h, make_bag({{1, 3.0}, {4, 2.0}}));
        for (const double v : post.q) CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
        CHECK_FALSE(post.degenerate);
    }
    SUBCASE("two-cell posterior follows the word probabilities") {
        const GridGeometry g({2}, {1});
        const CountingGrid grid(GridField(g, 2, std::vector<double>{0.9, 0.1, 0.1, 0.9}));
        const auto post = e_step(compute_histograms(grid), make_bag({{0, 1.0}}));
        CHECK(post.q[0] == doctest::Approx(0.9).epsilon(1e-14));
        CHECK(post.q[1] == doctest::Approx(0.1).epsilon(1e-14));
    }
    SUBCASE("scaling counts sharpens the posterior") {
        const GridGeometry g({6}, {2});
        const auto grid = init_grid(g, 4, 9, 1.0);
        const auto h = compute_histograms(grid);
        const auto base = make_bag({{0, 1.0}, {2, 2.0}, {3, 1.0}});
        auto scaled = base;
        for (auto& e : scaled.entries) e.count *= 10.0;
        const auto q1 = e_step(h, base);
        const auto q10 = e_step(h, scaled);
        CHECK(q1.map_anchor() == q10.map_anchor());
        CHECK(entropy(q10.q) < entropy(q1.q));
    }
    SUBCASE("all-zero bag falls back to a flagged uniform posterior") {
        const GridGeometry g({4}, {2});
        const auto post = e_step(compute_histograms(init_grid(g, 3, 1, 0.5)), make_bag({{1, 0.0}}));
        CHECK(post.degenerate);
        for (const double v : post.q) CHECK(v == 0.25);
    }
    SUBCASE("out-of-range word id") {
        const GridGeometry g({4}, {2});
        CHECK_THROWS_AS(e_step(compute_histograms(init_grid(g, 3, 1, 0.5)), make_bag({{3, 1.0}})),
                        std::invalid_argument);
    }
    SUBCASE("posteriors sum to one") {
        const GridGeometry g({5, 5}, {3, 2});
        const auto h = compute_histograms(init_grid(g, 10, 4, 1.0));
        const auto bags = toy_corpus(20, 10, 200, 8);
        for (const auto& post : e_step(h, bags)) {
            CHECK(std::abs(std::accumulate(post.q.begin(), post.q.end(), 0.0) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("m_step with a single effective window converges to pooled frequencies") {
    const GridGeometry g({3, 2}, {3, 2});
    const std::vector<Bag> bags{make_bag({{0, 4.0}, {1, 1.0}}), make_bag({{1, 2.0}, {2, 3.0}}),
                                make_bag({{0, 1.0}, {2, 1.0}})};
    const double pooled[3] = {5.0 / 12.0, 3.0 / 12.0, 4.0 / 12.0};
    auto grid = init_grid(g, 3, 5, 0.5);
    for (int iter = 0; iter < 3000; ++iter) {
        const auto h = compute_histograms(grid);
        grid = m_step(grid, h, bags, e_step(h, bags), 0.0);
    }
    const auto h = compute_histograms(grid);
    for (std::size_t k = 0; k < h.cells(); ++k) {
        for (std::size_t z = 0; z < 3; ++z) CHECK(h.at(k, z) == doctest::Approx(pooled[z]).epsilon(1e-9));
    }
}

TEST_CASE("m_step with unit windows is the multinomial mixture M-step") {
    const GridGeometry g({2, 2}, {1, 1});
    const auto bags = toy_corpus(8, 5, 12, 77);
    auto grid = init_grid(g, 5, 3, 1.0);
    oracle::MixtureEm ref{4, 5, grid.pi().values()};
    for (int iter = 0; iter < 10; ++iter) {
        const auto h = compute_histograms(grid);
        const auto post = e_step(h, bags);
        const auto ref_q = ref.e_step(bags);
        for (std::size_t t = 0; t < bags.size(); ++t) {
            for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(post[t].q[k] - ref_q[t][k]) <= 1e-9);
        }
        grid = m_step(grid, h, bags, post, 1e-3);
        ref.m_step(bags, ref_q, 1e-3);
        for (std::size_t n = 0; n < ref.theta.size(); ++n) CHECK(std::abs(grid.pi().values()[n] - ref.theta[n]) <= 1e-9);
    }
}

TEST_CASE("m_step keeps unreached cells valid") {
    const GridGeometry g({4}, {1});
    GridField pi(g, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        pi.at(i, 0) = kProbFloor;
        pi.at(i, 1) = 0.5 - kProbFloor;
        pi.at(i, 2) = 0.5;
    }
    const CountingGrid grid(pi);
    const std::vector<Bag> bags{make_bag({{1, 2.0}})};
    std::vector<double> q(4, 0.0);
    q[0] = 1.0;
    const std::vector<PosteriorMap> post{PosteriorMap{g, q, false}};
    const auto next = m_step(grid, bags, post, 0.0);
    CHECK(next.pi().row(2)[2] == 0.5);
    CHECK(next.pi().at(0, 1) == doctest::Approx(1.0));
    CHECK(next.pi().at(0, 0) == kProbFloor);
    CHECK_THROWS_AS(m_step(grid, bags, std::vector<PosteriorMap>{}, 0.0), std::invalid_argument);
}

TEST_CASE("variational_bound") {
    SUBCASE("point mass gives the log-likelihood at that anchor") {
        const GridGeometry g({5}, {2});
        const auto h = compute_histograms(init_grid(g, 4, 2, 1.0));
        const std::vector<Bag> bags{make_bag({{0, 2.0}, {3, 1.0}})};
        std::vector<double> q(5, 0.0);
        q[3] = 1.0;
        const std::vector<PosteriorMap> post{PosteriorMap{g, q, false}};
        CHECK(variational_bound(h, bags, post) == doctest::Approx(bag_log_likelihood(bags[0], h, 3)).epsilon(1e-14));
    }
    SUBCASE("uniform histograms: entropy plus N log(1/Z)") {
        const GridGeometry g({4}, {2});
        const GridField h(g, 5, 0.2);
        const std::vector<Bag> bags{make_bag({{0, 2.0}, {3, 4.0}})};
        const std::vector<double> q{0.1, 0.2, 0.3, 0.4};
        const std::vector<PosteriorMap> post{PosteriorMap{g, q, false}};
        CHECK(variational_bound(h, bags, post) == doctest::Approx(entropy(q) + 6.0 * std::log(0.2)).epsilon(1e-14));
        const std::vector<PosteriorMap> flat{PosteriorMap{g, std::vector<double>(4, 0.25), false}};
        CHECK(variational_bound(h, bags, flat) > variational_bound(h, bags, post));
    }
    SUBCASE("after the E-step the bound is the log-sum-exp of the scores") {
        const GridGeometry g({4, 3}, {2, 2});
        const auto h = compute_histograms(init_grid(g, 6, 12, 1.0));
        const auto bags = toy_corpus(5, 6, 30, 3);
        double want = 0.0;
        for (const auto& bag : bags) {
            std::vector<double> s;
            for (std::size_t k = 0; k < g.cells(); ++k) s.push_back(bag_log_likelihood(bag, h, k));
            const double top = *std::max_element(s.begin(), s.end());
            double sum = 0.0;
            for (const double v : s) sum += std::exp(v - top);
            want += top + std::log(sum);
        }
        CHECK(std::abs(variational_bound(h, bags, e_step(h, bags)) - want) <= 1e-9);
    }
}

TEST_CASE("fit") {
    const GridGeometry g({4, 4}, {2, 2});
    const auto bags = toy_corpus(20, 8, 60, 21);

    SUBCASE("zero iterations returns the initial grid and its posteriors") {
        TrainConfig cfg;
        cfg.max_iters = 0;
        cfg.seed = 9;
        const auto result = fit(bags, g, 8, cfg);
        const auto init = init_grid(g, 8, 9, cfg.init_noise);
        CHECK(result.grid == init);
        CHECK(result.bound_trace.size() == 1);
        const auto post = e_step(compute_histograms(init), bags);
        for (std::size_t t = 0; t < bags.size(); ++t) CHECK(result.posteriors[t].q == post[t].q);
    }
    SUBCASE("bound trace is non-decreasing") {
        TrainConfig cfg;
        cfg.rel_tol = 1e-6;
        cfg.pseudocount = 0.0;
        cfg.seed = 4;
        const auto result = fit(bags, g, 8, cfg);
        REQUIRE(result.bound_trace.size() >= 2);
        for (std::size_t n = 1; n < result.bound_trace.size(); ++n) {
            const double prev = result.bound_trace[n - 1];
            CHECK(result.bound_trace[n] >= prev - 1e-9 * std::abs(prev));
        }
        CHECK(result.max_relative_drop <= 1e-9);
    }
    SUBCASE("identical inputs give bit-identical results") {
        TrainConfig cfg;
        cfg.max_iters = 15;
        const auto a = fit(bags, g, 8, cfg);
        const auto b = fit(bags, g, 8, cfg);
        CHECK(a.grid == b.grid);
        CHECK(a.bound_trace == b.bound_trace);
    }
    SUBCASE("invalid inputs") {
        TrainConfig cfg;
        CHECK_THROWS_AS(fit(std::vector<Bag>{}, g, 8, cfg), std::invalid_argument);
        CHECK_THROWS_AS(fit(std::vector<Bag>{make_bag({{8, 1.0}})}, g, 8, cfg), std::invalid_argument);
        CHECK_THROWS_AS(fit(std::vector<Bag>{make_bag({{1, 0.0}})}, g, 8, cfg), std::invalid_argument);
        cfg.init_noise = 0.0;
        CHECK_THROWS_AS(fit(bags, g, 8, cfg), std::invalid_argument);
    }
}

TEST_CASE("fit commutes with torus translation") {
    const GridGeometry g({5, 4}, {2, 2});
    const auto bags = toy_corpus(15, 6, 40, 99);
    TrainConfig cfg;
    cfg.max_iters = 40;
    cfg.rel_tol = 1e-300;
    const auto init = init_grid(g, 6, 5, 0.5);
    const std::vector<long long> offset{2, 3};
    const auto plain = fit(bags, g, 6, cfg, init);
    const auto shifted = fit(bags, g, 6, cfg, CountingGrid(translate(init.pi(), offset)));
    const auto expect = translate(plain.grid.pi(), offset);
    for (std::size_t n = 0; n < expect.values().size(); ++n) {
        CHECK(std::abs(shifted.grid.pi().values()[n] - expect.values()[n]) <= 1e-9);
    }
    for (std::size_t t = 0; t < bags.size(); ++t) {
        for (std::size_t k = 0; k < g.cells(); ++k) {
            CHECK(std::abs(shifted.posteriors[t].q[g.translate(k, offset)] - plain.posteriors[t].q[k]) <= 1e-9);
        }
    }
}

TEST_CASE("matched geometry beats the single-window fit on held-out planted data") {
    const GridGeometry g({8, 8}, {2, 2});
    SynthSpec spec{g, 20};
    spec.docs = 150;
    spec.words_min = spec.words_max = 50;
    spec.seed = 31;
    const auto train = generate(spec);
    spec.planted = train.planted;
    spec.seed = 32;
    spec.docs = 50;
    const auto held = generate(spec);

    TrainConfig cfg;
    cfg.max_iters = 100;
    const auto matched = fit(train.bags, g, 20, cfg);
    const GridGeometry flat({8, 8}, {8, 8});
    const auto baseline = fit(train.bags, flat, 20, cfg);
    CHECK(mean_word_log_evidence(matched.grid, held.bags) >= mean_word_log_evidence(baseline.grid, held.bags));
}
