#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "snapcp/graph.hpp"
#include "snapcp/matrix.hpp"
#include "snapcp/scores.hpp"

namespace snapcp {

/// Weights of the feature-similarity (lambda) and structural (mu) terms.
struct SnapsParams {
    double lambda = 0.0;
    double mu = 0.0;

    /// lambda, mu >= 0 and lambda + mu <= 1 (with 1e-12 slack for grid sums).
    void validate() const;
    bool operator==(const SnapsParams&) const = default;
};

/// Weighted mean of neighbor score rows, summed in an order that depends only
/// on the values, so relabeling nodes permutes the result bit-for-bit.
/// Rows without neighbors are left as zero; `has_neighbors` records them.
struct NeighborMean {
    DenseMatrix mean;
    std::vector<std::uint8_t> has_neighbors;
};

NeighborMean neighbor_mean(const SparseGraph& g, const DenseMatrix& scores);

/// Precomputes both neighbor means of a base score matrix so the three-way mix
/// can be re-evaluated cheaply for many (lambda, mu) pairs. Rows whose k-NN or
/// structural neighborhood is empty move that term's weight onto the ego score.
class SnapsAggregator {
public:
    SnapsAggregator(const ScoreMatrix& base, const SparseGraph& knn, const SparseGraph& adj);

    /// Mixed scores for every node.
    ScoreMatrix mix(const SnapsParams& p) const;
    /// Mixed scores for the listed nodes only, in that order.
    ScoreMatrix mix_rows(const SnapsParams& p, std::span<const NodeId> rows) const;

    const ScoreMatrix& base() const noexcept { return base_; }

private:
    void mix_row(const SnapsParams& p, std::size_t node, std::span<double> out) const;

    ScoreMatrix base_;
    NeighborMean feature_;
    NeighborMean structural_;
};

/// (1 - lambda - mu) s_i + lambda * (k-NN weighted mean) + mu * (structural mean).
ScoreMatrix snaps_scores(const ScoreMatrix& scores, const SparseGraph& knn, const SparseGraph& adj,
                         const SnapsParams& params);

/// snaps_scores with lambda = 0.
ScoreMatrix daps_scores(const ScoreMatrix& scores, const SparseGraph& adj, double mu);

/// Same-label aggregation with ground-truth labels: each node mixes in the
/// mean of m distinct same-class nodes (self excluded, fewer when the class is
/// small) drawn from a stream keyed by (seed, node).
ScoreMatrix oracle_aggregate(const ScoreMatrix& scores, const LabelVector& labels, std::size_t m,
                             double w, std::uint64_t seed);

struct ImageSnapsScores {
    ScoreMatrix calib;
    ScoreMatrix test;
};

/// Graph-free variant: every row is mixed with the mean score row of its k most
/// cosine-similar calibration rows, (1 - eta) s + eta * mean. Calibration rows
/// exclude themselves. Zero-norm rows keep their score.
ImageSnapsScores image_snaps(const ScoreMatrix& test_scores, const ScoreMatrix& calib_scores,
                             const DenseMatrix& test_features, const DenseMatrix& calib_features,
                             std::size_t k, double eta);

}  // namespace snapcp
