#include "snapcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snapcp/error.hpp"

namespace snapcp {

std::size_t conformal_rank(std::size_t n, double alpha) {
    const double target = (1.0 - alpha) * static_cast<double>(n + 1);
    return static_cast<std::size_t>(std::ceil(target - 1e-9 * target));
}

CalibratedThreshold calibrate(const ScoreMatrix& scores, const LabelVector& labels,
                              std::span<const NodeId> calib, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
    if (calib.empty()) throw ValidationError("calibration set is empty");
    std::vector<double> true_scores;
    true_scores.reserve(calib.size());
    for (NodeId v : calib) {
        if (v >= scores.rows() || v >= labels.size()) {
            throw ValidationError("calibration node " + std::to_string(v) + " out of range");
        }
        true_scores.push_back(scores(v, labels[v]));
    }
    CalibratedThreshold t;
    t.alpha = alpha;
    t.n_calib = calib.size();
    t.calib_nodes.assign(calib.begin(), calib.end());
    std::sort(t.calib_nodes.begin(), t.calib_nodes.end());
    const std::size_t rank = conformal_rank(calib.size(), alpha);
    if (rank > calib.size()) return t;  // q_hat stays +inf
    const auto nth = true_scores.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(true_scores.begin(), nth, true_scores.end());
    t.q_hat = *nth;
    return t;
}

PredictionSets::PredictionSets(std::vector<NodeId> nodes, std::size_t num_classes,
                               CalibratedThreshold threshold)
    : nodes_(std::move(nodes)),
      num_classes_(num_classes),
      membership_(nodes_.size() * num_classes, 0),
      sizes_(nodes_.size(), 0),
      threshold_(std::move(threshold)) {}

void PredictionSets::insert(std::size_t pos, std::uint32_t label) {
    auto& slot = membership_[pos * num_classes_ + label];
    if (!slot) {
        slot = 1;
        ++sizes_[pos];
    }
}

std::vector<std::uint32_t> PredictionSets::labels_of(std::size_t pos) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t y = 0; y < num_classes_; ++y) {
        if (contains(pos, y)) out.push_back(y);
    }
    return out;
}

PredictionSets predict_sets(const ScoreMatrix& scores, const CalibratedThreshold& threshold,
                            std::span<const NodeId> eval) {
    const auto& cal = threshold.calib_nodes;
    for (NodeId v : eval) {
        if (v >= scores.rows()) throw ValidationError("evaluation node " + std::to_string(v) + " out of range");
        if (std::binary_search(cal.begin(), cal.end(), v)) {
            throw ValidationError("evaluation node " + std::to_string(v) + " is in the calibration set");
        }
    }
    PredictionSets sets(std::vector<NodeId>(eval.begin(), eval.end()), scores.cols(), threshold);
    for (std::size_t pos = 0; pos < eval.size(); ++pos) {
        const auto row = scores.values.row(eval[pos]);
        for (std::uint32_t y = 0; y < row.size(); ++y) {
            if (row[y] <= threshold.q_hat) sets.insert(pos, y);
        }
    }
    return sets;
}

}  // namespace snapcp
