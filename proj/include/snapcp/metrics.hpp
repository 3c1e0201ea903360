#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "snapcp/conformal.hpp"
#include "snapcp/matrix.hpp"

namespace snapcp {

struct MetricSummary {
    double coverage = 0.0;
    double size = 0.0;
    /// Fraction of sets that are exactly {true label}.
    double sh = 0.0;
    /// Size-stratified coverage violation; empty when no stratum is populated.
    std::optional<double> sscv;
    std::size_t n_eval = 0;

    bool operator==(const MetricSummary&) const = default;
};

/// Coverage, mean set size and singleton hit over `eval`. Every node in `eval`
/// must appear in `sets`. sscv is left empty; see sscv().
MetricSummary evaluate(const PredictionSets& sets, const LabelVector& labels,
                       std::span<const NodeId> eval);

struct SizeStratum {
    std::size_t lo;
    std::size_t hi;  // inclusive
};

/// Strata 0-1, 2-3, 4-10, 11-100, 101-1000 restricted to sizes <= num_classes.
/// When num_classes exceeds 1000 the last stratum is widened to num_classes.
std::vector<SizeStratum> sscv_strata(std::size_t num_classes);

/// max over populated strata of |coverage within stratum - (1 - alpha)|.
std::optional<double> sscv(const PredictionSets& sets, const LabelVector& labels,
                           std::span<const NodeId> eval, double alpha);

}  // namespace snapcp
