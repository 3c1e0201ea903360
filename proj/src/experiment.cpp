#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "snapcp/conformal.hpp"
#include "snapcp/error.hpp"
#include "snapcp/harness.hpp"
#include "snapcp/metrics.hpp"
#include "snapcp/parallel.hpp"
#include "snapcp/seed.hpp"

namespace snapcp {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kXiStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kTrialStream = 3;
constexpr std::uint64_t kOracleStream = 4;

using ojson = nlohmann::ordered_json;

ojson rule_json(const CalibRule& r) {
    if (r.kind == CalibRule::Kind::fixed) return ojson{{"kind", "fixed"}, {"size", r.fixed_size}};
    return ojson{{"kind", "paper_min_1000"}};
}

std::vector<NodeId> pool_of(const SplitIndices& s) {
    std::vector<NodeId> pool(s.calib);
    pool.insert(pool.end(), s.test.begin(), s.test.end());
    std::sort(pool.begin(), pool.end());
    return pool;
}

MetricSummary measure(const ScoreMatrix& scores, const LabelVector& labels, std::span<const NodeId> calib,
                      std::span<const NodeId> test, double alpha, double* q_hat) {
    const auto threshold = calibrate(scores, labels, calib, alpha);
    const auto sets = predict_sets(scores, threshold, test);
    auto m = evaluate(sets, labels, test);
    m.sscv = sscv(sets, labels, test, alpha);
    *q_hat = threshold.q_hat;
    return m;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (n_model_splits < 1 || n_conformal_splits < 1) throw ValidationError("split counts must be >= 1");
    snaps_grid(grid_step);  // throws on a step that does not divide 1
    if (fixed_snaps) {
        fixed_snaps->validate();
        if (method == Method::daps && fixed_snaps->lambda != 0.0) {
            throw ValidationError("daps has no feature-similarity term; lambda must be 0");
        }
    }
    if (fixed_raps) fixed_raps->validate();
}

ojson config_to_json(const ExperimentConfig& cfg) {
    ojson j{
        {"alpha", cfg.alpha},
        {"method", to_string(cfg.method)},
        {"base", to_string(cfg.base)},
        {"k", cfg.knn.k},
        {"sample_m", cfg.knn.sample_size ? ojson(*cfg.knn.sample_size) : ojson(nullptr)},
        {"min_similarity", cfg.knn.min_similarity},
        {"grid_step", cfg.grid_step},
        {"model_splits", cfg.n_model_splits},
        {"conformal_splits", cfg.n_conformal_splits},
        {"train_per_class", cfg.splits.train_per_class},
        {"valid_per_class", cfg.splits.valid_per_class},
        {"calib_rule", rule_json(cfg.splits.calib_rule)},
        {"seed", cfg.seed},
    };
    j["fixed_snaps"] = cfg.fixed_snaps ? ojson{{"lambda", cfg.fixed_snaps->lambda}, {"mu", cfg.fixed_snaps->mu}}
                                       : ojson(nullptr);
    j["fixed_raps"] = cfg.fixed_raps
                          ? ojson{{"k_reg", cfg.fixed_raps->k_reg}, {"lambda_reg", cfg.fixed_raps->lambda_reg}}
                          : ojson(nullptr);
    return j;
}

TrialReport run_experiment(const DatasetBundle& bundle, const ExperimentConfig& cfg, const SparseGraph* knn) {
    cfg.validate();
    const std::size_t n = bundle.num_nodes();
    const auto& labels = bundle.labels;

    const bool aggregates = cfg.method == Method::daps || cfg.method == Method::snaps;
    const bool uses_raps = cfg.method == Method::raps || (aggregates && cfg.base == BaseScore::raps);
    const bool tunes_raps = uses_raps && !cfg.fixed_raps;
    const bool tunes_mix = aggregates && !cfg.fixed_snaps;
    const bool tunes = tunes_raps || tunes_mix;

    SparseGraph knn_graph(n);
    if (cfg.method == Method::snaps) {
        if (knn) {
            if (knn->num_nodes() != n) throw ValidationError("cached k-NN graph does not match the bundle");
            knn_graph = *knn;
        } else {
            knn_graph = build_knn_graph(bundle.features, cfg.knn);
        }
    }
    const SparseGraph adj = SparseGraph::from_pairs(n, bundle.arcs);

    const auto xi = XiPolicy::uniform(derive_seed(cfg.seed, kXiStream));
    const ScoreMatrix aps = aps_scores(bundle.probabilities, xi);
    std::vector<std::uint32_t> ranks;
    if (uses_raps) ranks = class_ranks(bundle.probabilities);

    // With a fixed base the neighbor means are shared by every trial.
    std::optional<SnapsAggregator> shared;
    if (aggregates && !tunes_raps) {
        const ScoreMatrix base = uses_raps ? raps_from_aps(aps, ranks, *cfg.fixed_raps) : aps;
        shared.emplace(base, knn_graph, adj);
    }

    std::vector<std::vector<NodeId>> pools(cfg.n_model_splits);
    for (std::size_t m = 0; m < cfg.n_model_splits; ++m) {
        pools[m] = pool_of(sample_splits(labels, cfg.splits, derive_seed(derive_seed(cfg.seed, kModelStream), m)));
    }

    const auto mix_grid = cfg.method == Method::snaps ? snaps_grid(cfg.grid_step) : daps_grid(cfg.grid_step);
    const auto penalty_grid = raps_grid(bundle.num_classes());

    const std::size_t total = cfg.n_model_splits * cfg.n_conformal_splits;
    std::vector<TrialRecord> trials(total);
    parallel_for(total, [&](std::size_t t) {
        TrialRecord& rec = trials[t];
        rec.index = t;
        rec.model_split = t / cfg.n_conformal_splits;
        rec.conformal_split = t % cfg.n_conformal_splits;
        const auto split = draw_conformal_split(pools[rec.model_split], cfg.splits.calib_rule,
                                                derive_seed(derive_seed(cfg.seed, kTrialStream), t));
        std::vector<NodeId> calib = split.calib;
        std::vector<NodeId> tuning;
        if (tunes) {
            auto halves = split_for_tuning(split.calib);
            tuning = std::move(halves.tuning);
            calib = std::move(halves.conformal);
        }

        ScoreMatrix base_scores;
        if (uses_raps) {
            const RapsParams rp =
                cfg.fixed_raps ? *cfg.fixed_raps : tune_raps(aps, ranks, labels, tuning, cfg.alpha, penalty_grid);
            rec.params.k_reg = rp.k_reg;
            rec.params.lambda_reg = rp.lambda_reg;
            if (!aggregates || tunes_raps) base_scores = raps_from_aps(aps, ranks, rp);
        }

        ScoreMatrix final_scores;
        if (!aggregates) {
            final_scores = uses_raps ? std::move(base_scores) : aps;
        } else {
            std::optional<SnapsAggregator> local;
            if (!shared) local.emplace(uses_raps ? base_scores : aps, knn_graph, adj);
            const SnapsAggregator& agg = shared ? *shared : *local;
            const SnapsParams p =
                cfg.fixed_snaps ? *cfg.fixed_snaps : tune_snaps(agg, labels, tuning, cfg.alpha, mix_grid);
            rec.params.lambda = p.lambda;
            rec.params.mu = p.mu;
            final_scores = agg.mix(p);
        }
        rec.metrics = measure(final_scores, labels, calib, split.test, cfg.alpha, &rec.q_hat);
    });

    TrialReport report;
    report.config = config_to_json(cfg);
    report.config["dataset"] = bundle.name;
    report.config["nodes"] = n;
    report.config["classes"] = bundle.num_classes();
    report.trials = std::move(trials);
    report.aggregate = aggregate_trials(report.trials);
    return report;
}

std::vector<TrialReport> run_oracle_experiment(const DatasetBundle& bundle, const OracleConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (cfg.n_model_splits < 1 || cfg.n_conformal_splits < 1) throw ValidationError("split counts must be >= 1");
    const auto& labels = bundle.labels;
    const auto xi = XiPolicy::uniform(derive_seed(cfg.seed, kXiStream));
    const ScoreMatrix aps = aps_scores(bundle.probabilities, xi);

    std::vector<std::vector<NodeId>> pools(cfg.n_model_splits);
    for (std::size_t m = 0; m < cfg.n_model_splits; ++m) {
        pools[m] = pool_of(sample_splits(labels, cfg.splits, derive_seed(derive_seed(cfg.seed, kModelStream), m)));
    }
    const std::size_t total = cfg.n_model_splits * cfg.n_conformal_splits;
    std::vector<std::vector<TrialRecord>> per_m(cfg.m_sweep.size(), std::vector<TrialRecord>(total));
    parallel_for(total, [&](std::size_t t) {
        const std::size_t model = t / cfg.n_conformal_splits;
        const std::uint64_t trial_seed = derive_seed(derive_seed(cfg.seed, kTrialStream), t);
        const auto split = draw_conformal_split(pools[model], cfg.splits.calib_rule, trial_seed);
        for (std::size_t s = 0; s < cfg.m_sweep.size(); ++s) {
            // Same stream for every m: selections for smaller m are prefixes of larger ones.
            const auto scores =
                oracle_aggregate(aps, labels, cfg.m_sweep[s], cfg.w, derive_seed(trial_seed, kOracleStream));
            TrialRecord& rec = per_m[s][t];
            rec.index = t;
            rec.model_split = model;
            rec.conformal_split = t % cfg.n_conformal_splits;
            rec.metrics = measure(scores, labels, split.calib, split.test, cfg.alpha, &rec.q_hat);
        }
    });

    std::vector<TrialReport> reports;
    for (std::size_t s = 0; s < cfg.m_sweep.size(); ++s) {
        TrialReport r;
        r.config = ojson{{"experiment", "oracle"},
                         {"dataset", bundle.name},
                         {"alpha", cfg.alpha},
                         {"m", cfg.m_sweep[s]},
                         {"w", cfg.w},
                         {"model_splits", cfg.n_model_splits},
                         {"conformal_splits", cfg.n_conformal_splits},
                         {"calib_rule", rule_json(cfg.splits.calib_rule)},
                         {"seed", cfg.seed}};
        r.trials = std::move(per_m[s]);
        r.aggregate = aggregate_trials(r.trials);
        reports.push_back(std::move(r));
    }
    return reports;
}

namespace {

std::vector<std::uint64_t> keys_of(std::span<const NodeId> ids) { return {ids.begin(), ids.end()}; }

std::pair<TrialRecord, TrialRecord> image_trial(const DenseMatrix& calib_probs, const DenseMatrix& calib_features,
                                                const LabelVector& calib_labels, const DenseMatrix& test_probs,
                                                const DenseMatrix& test_features, const LabelVector& test_labels,
                                                std::span<const std::uint64_t> calib_keys,
                                                std::span<const std::uint64_t> test_keys, const ImageConfig& cfg) {
    const auto xi = XiPolicy::uniform(derive_seed(cfg.seed, kXiStream));
    const auto calib_scores = aps_scores(calib_probs, xi, calib_keys);
    const auto test_scores = aps_scores(test_probs, xi, test_keys);

    // Stack calibration rows over test rows so one label vector serves both.
    const std::size_t nc = calib_scores.rows();
    const std::size_t nt = test_scores.rows();
    LabelVector labels{calib_labels.labels, calib_labels.num_classes};
    labels.labels.insert(labels.labels.end(), test_labels.labels.begin(), test_labels.labels.end());
    std::vector<NodeId> calib_ids(nc), test_ids(nt);
    std::iota(calib_ids.begin(), calib_ids.end(), NodeId{0});
    std::iota(test_ids.begin(), test_ids.end(), static_cast<NodeId>(nc));
    auto stack = [&](const ScoreMatrix& a, const ScoreMatrix& b) {
        std::vector<double> data(a.values.data().begin(), a.values.data().end());
        data.insert(data.end(), b.values.data().begin(), b.values.data().end());
        return ScoreMatrix{DenseMatrix(nc + nt, a.cols(), std::move(data)), a.kind, a.xi_seed};
    };

    std::pair<TrialRecord, TrialRecord> out;
    const auto base = stack(calib_scores, test_scores);
    out.first.metrics = measure(base, labels, calib_ids, test_ids, cfg.alpha, &out.first.q_hat);
    const auto corrected = image_snaps(test_scores, calib_scores, test_features, calib_features, cfg.k, cfg.eta);
    const auto mixed = stack(corrected.calib, corrected.test);
    out.second.metrics = measure(mixed, labels, calib_ids, test_ids, cfg.alpha, &out.second.q_hat);
    out.second.params.lambda = cfg.eta;
    return out;
}

ImageReports finish_image(std::vector<TrialRecord> aps, std::vector<TrialRecord> snaps, const ImageConfig& cfg) {
    ImageReports r;
    const ojson base{{"experiment", "image"}, {"alpha", cfg.alpha}, {"k", cfg.k},
                     {"eta", cfg.eta},        {"trials", aps.size()}, {"seed", cfg.seed}};
    r.aps.config = base;
    r.aps.config["method"] = "aps";
    r.snaps.config = base;
    r.snaps.config["method"] = "snaps";
    r.aps.trials = std::move(aps);
    r.snaps.trials = std::move(snaps);
    r.aps.aggregate = aggregate_trials(r.aps.trials);
    r.snaps.aggregate = aggregate_trials(r.snaps.trials);
    return r;
}

void check_image_inputs(const DenseMatrix& probs, const DenseMatrix& features, const LabelVector& labels) {
    if (probs.rows() != features.rows() || probs.rows() != labels.size()) {
        throw ValidationError("image inputs disagree on row count");
    }
    if (probs.cols() != labels.num_classes) throw ValidationError("probability width differs from class count");
    labels.validate();
}

}  // namespace

ImageReports run_image_fixed(const DenseMatrix& calib_probs, const DenseMatrix& calib_features,
                             const LabelVector& calib_labels, const DenseMatrix& test_probs,
                             const DenseMatrix& test_features, const LabelVector& test_labels,
                             const ImageConfig& cfg) {
    check_image_inputs(calib_probs, calib_features, calib_labels);
    check_image_inputs(test_probs, test_features, test_labels);
    if (calib_labels.num_classes != test_labels.num_classes) throw ValidationError("class counts differ");
    std::vector<std::uint64_t> calib_keys(calib_probs.rows()), test_keys(test_probs.rows());
    std::iota(calib_keys.begin(), calib_keys.end(), std::uint64_t{0});
    std::iota(test_keys.begin(), test_keys.end(), calib_keys.size());
    auto [a, s] = image_trial(calib_probs, calib_features, calib_labels, test_probs, test_features, test_labels,
                              calib_keys, test_keys, cfg);
    return finish_image({a}, {s}, cfg);
}

ImageReports run_image_experiment(const DenseMatrix& probs, const DenseMatrix& features, const LabelVector& labels,
                                  const ImageConfig& cfg) {
    check_image_inputs(probs, features, labels);
    if (cfg.n_trials < 1) throw ValidationError("trial count must be >= 1");
    const std::size_t n = probs.rows();
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), NodeId{0});
    std::vector<TrialRecord> aps(cfg.n_trials), snaps(cfg.n_trials);
    parallel_for(cfg.n_trials, [&](std::size_t t) {
        const auto split =
            draw_conformal_split(all, CalibRule::fixed(n / 2), derive_seed(derive_seed(cfg.seed, kTrialStream), t));
        auto [a, s] = image_trial(probs.select_rows(split.calib), features.select_rows(split.calib),
                                  labels.select(split.calib), probs.select_rows(split.test),
                                  features.select_rows(split.test), labels.select(split.test),
                                  keys_of(split.calib), keys_of(split.test), cfg);
        a.index = s.index = t;
        a.conformal_split = s.conformal_split = t;
        aps[t] = a;
        snaps[t] = s;
    });
    return finish_image(std::move(aps), std::move(snaps), cfg);
}

}  // namespace snapcp
