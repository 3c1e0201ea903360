#include "snapcp/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "snapcp/error.hpp"
#include "snapcp/parallel.hpp"
#include "snapcp/seed.hpp"

namespace snapcp {

void SnapsParams::validate() const {
    if (!(lambda >= 0.0) || !(mu >= 0.0) || lambda + mu > 1.0 + 1e-12) {
        throw ValidationError("SNAPS weights need lambda >= 0, mu >= 0, lambda + mu <= 1 (got " +
                              std::to_string(lambda) + ", " + std::to_string(mu) + ")");
    }
}

namespace {

double sorted_sum(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

NeighborMean neighbor_mean(const SparseGraph& g, const DenseMatrix& scores) {
    const std::size_t n = scores.rows();
    const std::size_t k = scores.cols();
    if (g.num_nodes() != n) {
        throw ValidationError("graph has " + std::to_string(g.num_nodes()) + " nodes but scores have " +
                              std::to_string(n) + " rows");
    }
    NeighborMean out{DenseMatrix(n, k), std::vector<std::uint8_t>(n, 0)};
    std::vector<double> terms;
    for (std::size_t i = 0; i < n; ++i) {
        const auto nb = g.neighbors(i);
        if (nb.empty()) continue;
        const auto w = g.weights(i);
        terms.assign(w.begin(), w.end());
        const double deg = sorted_sum(terms);
        if (!(deg > 0.0)) {
            throw ValidationError("row " + std::to_string(i) +
                                  " has non-positive total weight; use min_similarity >= 0");
        }
        out.has_neighbors[i] = 1;
        auto row = out.mean.row(i);
        for (std::size_t y = 0; y < k; ++y) {
            terms.clear();
            for (std::size_t t = 0; t < nb.size(); ++t) terms.push_back(w[t] * scores(nb[t], y));
            row[y] = sorted_sum(terms) / deg;
        }
    }
    return out;
}

SnapsAggregator::SnapsAggregator(const ScoreMatrix& base, const SparseGraph& knn, const SparseGraph& adj)
    : base_(base), feature_(neighbor_mean(knn, base.values)), structural_(neighbor_mean(adj, base.values)) {}

void SnapsAggregator::mix_row(const SnapsParams& p, std::size_t node, std::span<double> out) const {
    const double lambda = feature_.has_neighbors[node] ? p.lambda : 0.0;
    const double mu = structural_.has_neighbors[node] ? p.mu : 0.0;
    const double ego = 1.0 - lambda - mu;
    const auto s = base_.values.row(node);
    const auto fs = feature_.mean.row(node);
    const auto ss = structural_.mean.row(node);
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = ego * s[y] + lambda * fs[y] + mu * ss[y];
}

ScoreMatrix SnapsAggregator::mix(const SnapsParams& p) const {
    p.validate();
    ScoreMatrix out{DenseMatrix(base_.rows(), base_.cols()), ScoreKind::snaps, base_.xi_seed};
    for (std::size_t i = 0; i < base_.rows(); ++i) mix_row(p, i, out.values.row(i));
    return out;
}

ScoreMatrix SnapsAggregator::mix_rows(const SnapsParams& p, std::span<const NodeId> rows) const {
    p.validate();
    ScoreMatrix out{DenseMatrix(rows.size(), base_.cols()), ScoreKind::snaps, base_.xi_seed};
    for (std::size_t i = 0; i < rows.size(); ++i) mix_row(p, rows[i], out.values.row(i));
    return out;
}

ScoreMatrix snaps_scores(const ScoreMatrix& scores, const SparseGraph& knn, const SparseGraph& adj,
                         const SnapsParams& params) {
    params.validate();
    return SnapsAggregator(scores, knn, adj).mix(params);
}

ScoreMatrix daps_scores(const ScoreMatrix& scores, const SparseGraph& adj, double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw ValidationError("DAPS mu must lie in [0, 1]");
    auto out = snaps_scores(scores, SparseGraph(scores.rows()), adj, {0.0, mu});
    out.kind = ScoreKind::daps;
    return out;
}

ScoreMatrix oracle_aggregate(const ScoreMatrix& scores, const LabelVector& labels, std::size_t m,
                             double w, std::uint64_t seed) {
    if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("oracle mixing weight must lie in [0, 1]");
    if (labels.size() != scores.rows()) throw ValidationError("label count does not match score rows");
    ScoreMatrix out{scores.values, ScoreKind::oracle, scores.xi_seed};
    if (m == 0) return out;

    std::vector<std::vector<NodeId>> members(labels.num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<NodeId>(i));

    const std::size_t k = scores.cols();
    std::vector<NodeId> others;
    std::vector<double> acc(k);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto& cls = members[labels[i]];
        others.clear();
        for (NodeId v : cls) {
            if (v != i) others.push_back(v);
        }
        const std::size_t take = std::min(m, others.size());
        if (take == 0) continue;
        std::mt19937_64 rng(derive_seed(seed, i));
        for (std::size_t t = 0; t < take; ++t) {
            std::uniform_int_distribution<std::size_t> pick(t, others.size() - 1);
            std::swap(others[t], others[pick(rng)]);
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t t = 0; t < take; ++t) {
            const auto r = scores.values.row(others[t]);
            for (std::size_t y = 0; y < k; ++y) acc[y] += r[y];
        }
        auto row = out.values.row(i);
        const auto s = scores.values.row(i);
        for (std::size_t y = 0; y < k; ++y) {
            row[y] = (1.0 - w) * s[y] + w * (acc[y] / static_cast<double>(take));
        }
    }
    return out;
}

namespace {

std::vector<double> row_norms(const DenseMatrix& x) {
    std::vector<double> norms(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
    }
    return norms;
}

// Corrects rows of `scores` using neighbors among the calibration rows.
// `exclude_self` is set when `scores` are the calibration rows themselves.
ScoreMatrix correct_from_calibration(const ScoreMatrix& scores, const DenseMatrix& features,
                                     const ScoreMatrix& calib_scores, const DenseMatrix& calib_features,
                                     const std::vector<double>& calib_norms, std::size_t k, double eta,
                                     bool exclude_self) {
    const std::size_t n = scores.rows();
    const std::size_t nc = calib_scores.rows();
    const std::size_t classes = scores.cols();
    const std::size_t d = features.cols();
    const auto norms = row_norms(features);
    ScoreMatrix out{scores.values, ScoreKind::snaps, scores.xi_seed};
    parallel_for(n, [&](std::size_t i) {
        if (norms[i] == 0.0) return;
        const auto xi = features.row(i);
        std::vector<std::pair<double, NodeId>> cand;
        cand.reserve(nc);
        for (std::size_t j = 0; j < nc; ++j) {
            if (exclude_self && j == i) continue;
            double sim = 0.0;
            if (calib_norms[j] != 0.0) {
                const auto xj = calib_features.row(j);
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += xi[c] * xj[c];
                sim = dot / (norms[i] * calib_norms[j]);
            }
            cand.emplace_back(sim, static_cast<NodeId>(j));
        }
        const std::size_t keep = std::min(k, cand.size());
        if (keep == 0) return;
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                          [](const auto& a, const auto& b) {
                              return a.first != b.first ? a.first > b.first : a.second < b.second;
                          });
        auto row = out.values.row(i);
        const auto s = scores.values.row(i);
        for (std::size_t y = 0; y < classes; ++y) {
            double acc = 0.0;
            for (std::size_t t = 0; t < keep; ++t) acc += calib_scores(cand[t].second, y);
            row[y] = (1.0 - eta) * s[y] + eta * (acc / static_cast<double>(keep));
        }
    });
    return out;
}

}  // namespace

ImageSnapsScores image_snaps(const ScoreMatrix& test_scores, const ScoreMatrix& calib_scores,
                             const DenseMatrix& test_features, const DenseMatrix& calib_features,
                             std::size_t k, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in [0, 1]");
    if (k > calib_scores.rows()) {
        throw ValidationError("k = " + std::to_string(k) + " exceeds the calibration size " +
                              std::to_string(calib_scores.rows()));
    }
    if (test_scores.rows() != test_features.rows() || calib_scores.rows() != calib_features.rows()) {
        throw ValidationError("score and feature row counts differ");
    }
    if (test_features.cols() != calib_features.cols() || test_scores.cols() != calib_scores.cols()) {
        throw ValidationError("test and calibration matrices have different widths");
    }
    const auto calib_norms = row_norms(calib_features);
    ImageSnapsScores out;
    out.calib = correct_from_calibration(calib_scores, calib_features, calib_scores, calib_features,
                                         calib_norms, k, eta, true);
    out.test = correct_from_calibration(test_scores, test_features, calib_scores, calib_features,
                                        calib_norms, k, eta, false);
    return out;
}

}  // namespace snapcp
