#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "snapcp/matrix.hpp"
#include "snapcp/scores.hpp"

namespace snapcp {

struct CalibratedThreshold {
    double q_hat = std::numeric_limits<double>::infinity();
    double alpha = 0.1;
    std::size_t n_calib = 0;
    /// Sorted calibration node ids, kept so prediction can reject overlap.
    std::vector<NodeId> calib_nodes;

    bool is_infinite() const noexcept { return q_hat == std::numeric_limits<double>::infinity(); }
};

/// 1-based rank ceil((1 - alpha)(n + 1)) of the conformal order statistic.
/// A relative slack of 1e-9 absorbs representation error in alpha, so that
/// e.g. alpha = 0.1, n = 9 gives 9 and not 10.
std::size_t conformal_rank(std::size_t n, double alpha);

/// Split-conformal threshold from the true-label scores of `calib`. Returns
/// +inf when the conformal rank exceeds the calibration size.
CalibratedThreshold calibrate(const ScoreMatrix& scores, const LabelVector& labels,
                              std::span<const NodeId> calib, double alpha);

/// Label sets for evaluation nodes. Empty sets are legal.
class PredictionSets {
public:
    PredictionSets() = default;
    PredictionSets(std::vector<NodeId> nodes, std::size_t num_classes, CalibratedThreshold threshold);

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::span<const NodeId> nodes() const noexcept { return nodes_; }
    const CalibratedThreshold& threshold() const noexcept { return threshold_; }

    /// Position-indexed accessors; `pos` indexes nodes().
    bool contains(std::size_t pos, std::uint32_t label) const noexcept {
        return membership_[pos * num_classes_ + label] != 0;
    }
    std::size_t set_size(std::size_t pos) const noexcept { return sizes_[pos]; }
    std::vector<std::uint32_t> labels_of(std::size_t pos) const;

    void insert(std::size_t pos, std::uint32_t label);

private:
    std::vector<NodeId> nodes_;
    std::size_t num_classes_ = 0;
    std::vector<std::uint8_t> membership_;
    std::vector<std::uint32_t> sizes_;
    CalibratedThreshold threshold_;
};

/// {y : score(i, y) <= q_hat} for each i in eval. Throws ValidationError when an
/// evaluation node was used for calibration.
PredictionSets predict_sets(const ScoreMatrix& scores, const CalibratedThreshold& threshold,
                            std::span<const NodeId> eval);

}  // namespace snapcp
