#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <stdlib.h>

#include "oracles.hpp"
#include "snapcp/error.hpp"
#include "snapcp/harness.hpp"

using namespace snapcp;

namespace {

LabelVector blocks(std::size_t classes, std::size_t per_class) {
    LabelVector l{{}, classes};
    for (std::size_t c = 0; c < classes; ++c) l.labels.insert(l.labels.end(), per_class, static_cast<std::uint32_t>(c));
    return l;
}

DatasetBundle small_bundle(std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n = 600;
    cfg.classes = 3;
    cfg.dim = 8;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

ExperimentConfig quick(Method m, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.method = m;
    cfg.n_model_splits = 2;
    cfg.n_conformal_splits = 3;
    cfg.grid_step = 0.25;
    cfg.knn.k = 5;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("splits: default rule sizes and disjointness") {
    const auto s = sample_splits(blocks(3, 100), {}, 7);
    CHECK(s.train.size() == 60);
    CHECK(s.valid.size() == 60);
    CHECK(s.calib.size() == 90);
    CHECK(s.test.size() == 90);
    std::set<NodeId> all;
    for (const auto* part : {&s.train, &s.valid, &s.calib, &s.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == 300);
    std::vector<std::size_t> per_class(3);
    for (auto v : s.train) ++per_class[v / 100];
    CHECK(per_class == std::vector<std::size_t>{20, 20, 20});
}

TEST_CASE("splits: fixed rule, small class and determinism") {
    SplitConfig fixed;
    fixed.calib_rule = CalibRule::fixed(50);
    CHECK(sample_splits(blocks(3, 100), fixed, 1).calib.size() == 50);

    auto labels = blocks(2, 100);
    labels.labels.resize(130);  // class 1 keeps only 30 nodes
    CHECK_THROWS_WITH_AS(sample_splits(labels, {}, 1), doctest::Contains("class 1"), ValidationError);

    const auto a = sample_splits(blocks(3, 100), {}, 9);
    const auto b = sample_splits(blocks(3, 100), {}, 9);
    CHECK(a.calib == b.calib);
    CHECK(a.test == b.test);
    CHECK(CalibRule::min_1000().calib_size(5000) == 1000);
    CHECK_THROWS_AS(CalibRule::fixed(10).calib_size(10), ValidationError);
}

TEST_CASE("tuning halves") {
    const std::vector<NodeId> calib{5, 1, 9, 3, 7};
    const auto h = split_for_tuning(calib);
    CHECK(h.tuning == std::vector<NodeId>{5, 1});
    CHECK(h.conformal == std::vector<NodeId>{9, 3, 7});
}

TEST_CASE("grids") {
    CHECK(snaps_grid(0.05).size() == 231);
    const auto g = snaps_grid(0.5);
    REQUIRE(g.size() == 6);
    const std::vector<SnapsParams> expected{{0, 0}, {0, 0.5}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {1, 0}};
    CHECK(g == expected);
    for (const auto& p : snaps_grid(0.05)) CHECK(p.lambda + p.mu <= 1.0 + 1e-12);
    CHECK(daps_grid(0.05).size() == 21);
    CHECK(raps_grid(8).size() == 48);
    CHECK(raps_grid(40).size() == 60);
    CHECK_THROWS_AS(snaps_grid(0.3), ValidationError);
}

TEST_CASE("tuning: identical scores choose the identity") {
    const std::size_t n = 200;
    const ScoreMatrix s{DenseMatrix(n, 3, 0.5), ScoreKind::aps, 0};
    std::vector<std::pair<NodeId, NodeId>> ring;
    for (NodeId i = 0; i < n; ++i) {
        ring.emplace_back(i, (i + 1) % n);
        ring.emplace_back((i + 1) % n, i);
    }
    const auto adj = SparseGraph::from_pairs(n, ring);
    const SnapsAggregator agg(s, adj, adj);
    LabelVector labels{std::vector<std::uint32_t>(n), 3};
    for (std::size_t i = 0; i < n; ++i) labels.labels[i] = static_cast<std::uint32_t>(i % 3);
    std::vector<NodeId> tuning(100);
    std::iota(tuning.begin(), tuning.end(), 0);
    const auto grid = snaps_grid(0.05);
    CHECK(tune_snaps(agg, labels, tuning, 0.1, grid) == SnapsParams{0, 0});
}

TEST_CASE("tuning: labels outside the tuning set are never read") {
    const auto b = small_bundle(3);
    const std::size_t n = b.num_nodes();
    const auto knn = build_knn_graph(b.features, {.k = 5});
    const auto adj = SparseGraph::from_pairs(n, b.arcs);
    const auto aps = aps_scores(b.probabilities, XiPolicy::uniform(1));
    const SnapsAggregator agg(aps, knn, adj);

    std::mt19937_64 rng(4);
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::vector<NodeId> tuning(ids.begin(), ids.begin() + 150);

    LabelVector scrambled = b.labels;
    std::vector<bool> in_tuning(n);
    for (auto v : tuning) in_tuning[v] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_tuning[i]) scrambled.labels[i] = static_cast<std::uint32_t>(rng() % 3);
    }
    const auto grid = snaps_grid(0.1);
    CHECK(tune_snaps(agg, b.labels, tuning, 0.1, grid) == tune_snaps(agg, scrambled, tuning, 0.1, grid));

    const auto ranks = class_ranks(b.probabilities);
    const auto rgrid = raps_grid(3);
    CHECK(tune_raps(aps, ranks, b.labels, tuning, 0.1, rgrid) == tune_raps(aps, ranks, scrambled, tuning, 0.1, rgrid));
}

TEST_CASE("experiment: deterministic and thread-count independent") {
    const auto b = small_bundle(5);
    const auto cfg = quick(Method::snaps, 11);
    const auto a = run_experiment(b, cfg);
    CHECK(a.trials.size() == 6);
    CHECK(a == run_experiment(b, cfg));
    auto other = cfg;
    other.seed = 12;
    CHECK_FALSE(run_experiment(b, other).trials == a.trials);
    for (const auto& t : a.trials) {
        CHECK(t.metrics.n_eval == 240);
        CHECK(t.params.lambda + t.params.mu <= 1.0 + 1e-12);
    }
}

TEST_CASE("experiment: serial and threaded runs agree") {
    const auto b = small_bundle(7);
    const auto cfg = quick(Method::snaps, 13);
    ::setenv("SNAPCP_THREADS", "1", 1);
    const auto serial = run_experiment(b, cfg);
    ::setenv("SNAPCP_THREADS", "4", 1);
    const auto threaded = run_experiment(b, cfg);
    ::unsetenv("SNAPCP_THREADS");
    CHECK(serial == threaded);
}

TEST_CASE("experiment: reductions hold at report level") {
    const auto b = small_bundle(6);
    const auto aps = run_experiment(b, quick(Method::aps, 21));

    auto s00 = quick(Method::snaps, 21);
    s00.fixed_snaps = SnapsParams{0, 0};
    const auto snaps = run_experiment(b, s00);
    CHECK(snaps.trials == aps.trials);
    CHECK(snaps.aggregate == aps.aggregate);

    auto d = quick(Method::daps, 21);
    d.fixed_snaps = SnapsParams{0, 0.35};
    auto s0m = quick(Method::snaps, 21);
    s0m.fixed_snaps = SnapsParams{0, 0.35};
    CHECK(run_experiment(b, d).trials == run_experiment(b, s0m).trials);

    auto r = quick(Method::raps, 21);
    r.fixed_raps = RapsParams{3, 0.0};
    auto a_trials = aps.trials;
    auto r_trials = run_experiment(b, r).trials;
    for (auto& t : r_trials) t.params = {};
    CHECK(r_trials == a_trials);
}

TEST_CASE("experiment: every method runs and reports chosen parameters") {
    const auto b = small_bundle(8);
    for (auto m : {Method::aps, Method::raps, Method::daps, Method::snaps}) {
        const auto rep = run_experiment(b, quick(m, 2));
        CHECK(rep.aggregate.n_trials == 6);
        CHECK(rep.aggregate.coverage.mean > 0.8);
        CHECK(rep.config.at("method") == to_string(m));
        if (m == Method::raps) CHECK(rep.trials.front().params.k_reg >= 1);
        if (m == Method::daps) {
            for (const auto& t : rep.trials) CHECK(t.params.lambda == 0.0);
        }
    }
    auto bad = quick(Method::daps, 1);
    bad.fixed_snaps = SnapsParams{0.2, 0.2};
    CHECK_THROWS_AS(run_experiment(b, bad), ValidationError);
    CHECK(parse_method("raps") == Method::raps);
    CHECK_THROWS_AS(parse_method("thr"), ValidationError);
}

TEST_CASE("oracle experiment: m = 0 reproduces the base report") {
    const auto b = small_bundle(9);
    OracleConfig oc;
    oc.m_sweep = {0, 4};
    oc.n_model_splits = 2;
    oc.n_conformal_splits = 3;
    oc.seed = 21;
    const auto reps = run_oracle_experiment(b, oc);
    REQUIRE(reps.size() == 2);
    const auto aps = run_experiment(b, quick(Method::aps, 21));
    CHECK(reps[0].trials == aps.trials);
    CHECK(reps[1].aggregate.size.mean < reps[0].aggregate.size.mean);
}

TEST_CASE("image experiment runs on synthetic features") {
    const auto b = small_bundle(10);
    ImageConfig ic;
    ic.n_trials = 3;
    const auto r = run_image_experiment(b.probabilities, b.features, b.labels, ic);
    CHECK(r.aps.trials.size() == 3);
    CHECK(r.snaps.trials.size() == 3);
    CHECK(r.snaps.aggregate.size.mean < r.aps.aggregate.size.mean);
}
