#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "snapcp/error.hpp"
#include "snapcp/graph.hpp"
#include "snapcp/matrixio.hpp"
#include "test_util.hpp"

using namespace snapcp;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return v; }

void check_against_oracle(const DenseMatrix& x, std::size_t k) {
    const auto g = build_knn_graph(x, {.k = k});
    const auto expected = oracle::brute_force_knn(x, k);
    REQUIRE(g.num_nodes() == x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto nb = g.neighbors(i);
        const auto w = g.weights(i);
        REQUIRE(nb.size() == expected[i].size());
        for (std::size_t r = 0; r < nb.size(); ++r) {
            CHECK(nb[r] == expected[i][r].first);
            CHECK(w[r] == doctest::Approx(expected[i][r].second).epsilon(1e-6));
        }
    }
}

}  // namespace

TEST_CASE("cosine similarity") {
    CHECK(cosine_similarity(vec({1, 0}), vec({1, 0})) == doctest::Approx(1.0));
    CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK(cosine_similarity(vec({3, 4}), vec({4, 3})) == doctest::Approx(0.96));
    CHECK(cosine_similarity(vec({0, 0}), vec({4, 3})) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), ValidationError);
}

TEST_CASE("sparse graph from pairs keeps degrees and rejects duplicates") {
    const std::vector<std::pair<NodeId, NodeId>> pairs{{1, 0}, {0, 1}, {0, 2}};
    const auto g = SparseGraph::from_pairs(3, pairs);
    CHECK(g.num_arcs() == 3);
    CHECK(g.degree(0) == 2.0);
    CHECK(g.degree(2) == 0.0);
    CHECK(g.neighbors(0)[0] == 1);
    CHECK_THROWS_AS(SparseGraph(2, {0, 2, 2}, {1, 1}, {1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(SparseGraph(2, {0, 1, 1}, {5}, {1.0}), ValidationError);
}

TEST_CASE("knn: three-node example") {
    const DenseMatrix x(3, 2, {1, 0, 1, 0.01, 0, 1});
    const auto g = build_knn_graph(x, {.k = 1});
    REQUIRE(g.num_arcs() == 3);
    CHECK(g.neighbors(0)[0] == 1);
    CHECK(g.neighbors(1)[0] == 0);
    CHECK(g.neighbors(2)[0] == 1);
}

TEST_CASE("knn: k = 0 gives an empty graph") {
    std::mt19937_64 rng(1);
    const auto g = build_knn_graph(oracle::random_matrix(20, 3, rng), {.k = 0});
    CHECK(g.num_arcs() == 0);
    for (std::size_t i = 0; i < 20; ++i) CHECK(g.degree(i) == 0.0);
}

TEST_CASE("knn: duplicate rows pick each other with weight one") {
    const DenseMatrix x(2, 3, {0.2, 0.4, 0.1, 0.2, 0.4, 0.1});
    const auto g = build_knn_graph(x, {.k = 1});
    CHECK(g.neighbors(0)[0] == 1);
    CHECK(g.neighbors(1)[0] == 0);
    CHECK(g.weights(0)[0] == doctest::Approx(1.0));
}

TEST_CASE("knn: zero-norm rows have no candidates and are counted") {
    const DenseMatrix x(3, 2, {0, 0, 1, 0, 1, 1});
    KnnStats stats;
    const auto g = build_knn_graph(x, {.k = 1}, &stats);
    CHECK(stats.zero_norm_rows == 1);
    CHECK(g.out_count(0) == 0);
    CHECK(g.neighbors(1)[0] == 2);
}

TEST_CASE("knn: non-positive similarities are dropped") {
    const DenseMatrix x(2, 2, {1, 0, -1, 0});
    CHECK(build_knn_graph(x, {.k = 1}).num_arcs() == 0);
}

TEST_CASE("knn: configuration errors") {
    std::mt19937_64 rng(2);
    const auto x = oracle::random_matrix(30, 3, rng);
    CHECK_THROWS_AS(build_knn_graph(x, {.k = 30}), ValidationError);
    CHECK_THROWS_AS(build_knn_graph(x, {.k = 3, .sample_size = 20}), ValidationError);
    CHECK_THROWS_AS(build_knn_graph(x, {.k = 1, .sample_size = 31}), ValidationError);
}

TEST_CASE("knn: exact mode matches the brute-force oracle") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        std::uniform_int_distribution<std::size_t> nd(2, 120), dd(1, 16);
        const auto n = nd(rng);
        const auto x = oracle::random_matrix(n, dd(rng), rng);
        check_against_oracle(x, std::min<std::size_t>(n - 1, 7));
    }
}

TEST_CASE("knn: sampled mode with M = n - 1 equals exact mode") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto x = oracle::random_matrix(80, 6, rng);
        const auto exact = build_knn_graph(x, {.k = 5});
        const auto sampled = build_knn_graph(x, {.k = 5, .sample_size = 79, .seed = seed});
        CHECK(sampled == exact);
    }
}

TEST_CASE("knn: sampled mode is deterministic and restricted to M candidates") {
    std::mt19937_64 rng(6);
    const auto x = oracle::random_matrix(300, 4, rng, 0.0, 1.0);
    const KnnConfig cfg{.k = 3, .sample_size = 40, .seed = 9};
    KnnStats stats;
    const auto a = build_knn_graph(x, cfg, &stats);
    CHECK(a == build_knn_graph(x, cfg));
    CHECK(stats.candidates_per_row == 40);
    std::set<NodeId> used;
    for (auto c : a.col_indices()) used.insert(c);
    CHECK(used.size() <= 41);
    auto other = cfg;
    other.seed = 10;
    CHECK_FALSE(build_knn_graph(x, other) == a);
}

TEST_CASE("row normalization") {
    const auto g = SparseGraph::from_arcs(3, {{0, 1, 2.0}, {0, 2, 2.0}, {1, 0, 0.96}, {1, 2, 0.04}});
    const auto h = row_normalize(g);
    CHECK(h.weights(0)[0] == doctest::Approx(0.5));
    CHECK(h.weights(0)[1] == doctest::Approx(0.5));
    CHECK(h.weights(1)[0] == doctest::Approx(0.96));
    CHECK(h.weights(1)[1] == doctest::Approx(0.04));
    CHECK(h.out_count(2) == 0);

    std::mt19937_64 rng(8);
    const auto k = row_normalize(build_knn_graph(oracle::random_matrix(60, 5, rng, 0.0, 1.0), {.k = 6}));
    for (std::size_t i = 0; i < 60; ++i) CHECK(k.degree(i) == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(row_normalize(SparseGraph::from_arcs(2, {{0, 1, -1.0}})), ValidationError);
}

TEST_CASE("knn cache round trip and key mismatch") {
    const auto dir = snapcp::testing::scratch_dir("knn_cache");
    std::mt19937_64 rng(12);
    const auto x = oracle::random_matrix(50, 4, rng, 0.0, 1.0);
    write_matrix(x, dir / "f.bin", MatrixFormat::binary);
    const KnnConfig cfg{.k = 4};
    const auto g = build_knn_graph(load_matrix(dir / "f.bin", MatrixFormat::binary), cfg);
    const auto key = make_cache_key(dir / "f.bin", cfg);
    write_knn_cache(g, key, dir / "g.snpg");
    const auto back = read_knn_cache(dir / "g.snpg", key);
    REQUIRE(back.has_value());
    CHECK(*back == g);

    auto other = key;
    other.k = 5;
    CHECK_FALSE(read_knn_cache(dir / "g.snpg", other).has_value());
    CHECK_FALSE(read_knn_cache(dir / "missing.snpg", key).has_value());
}
