#include "snapcp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "snapcp/error.hpp"

namespace snapcp {

namespace {

// Position of each eval node inside `sets`.
std::vector<std::size_t> locate(const PredictionSets& sets, std::span<const NodeId> eval,
                                std::size_t num_nodes) {
    constexpr auto missing = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> where(num_nodes, missing);
    const auto nodes = sets.nodes();
    for (std::size_t p = 0; p < nodes.size(); ++p) {
        if (nodes[p] < num_nodes) where[nodes[p]] = p;
    }
    std::vector<std::size_t> pos(eval.size());
    for (std::size_t t = 0; t < eval.size(); ++t) {
        if (eval[t] >= num_nodes || where[eval[t]] == missing) {
            throw ValidationError("evaluation node " + std::to_string(eval[t]) + " has no prediction set");
        }
        pos[t] = where[eval[t]];
    }
    return pos;
}

}  // namespace

MetricSummary evaluate(const PredictionSets& sets, const LabelVector& labels,
                       std::span<const NodeId> eval) {
    if (eval.empty()) throw ValidationError("evaluation set is empty");
    const auto pos = locate(sets, eval, labels.size());
    std::size_t covered = 0, total_size = 0, singleton_hits = 0;
    for (std::size_t t = 0; t < eval.size(); ++t) {
        const std::uint32_t y = labels[eval[t]];
        const bool hit = sets.contains(pos[t], y);
        const std::size_t size = sets.set_size(pos[t]);
        covered += hit;
        total_size += size;
        singleton_hits += (hit && size == 1);
    }
    const auto n = static_cast<double>(eval.size());
    MetricSummary m;
    m.coverage = static_cast<double>(covered) / n;
    m.size = static_cast<double>(total_size) / n;
    m.sh = static_cast<double>(singleton_hits) / n;
    m.n_eval = eval.size();
    return m;
}

std::vector<SizeStratum> sscv_strata(std::size_t num_classes) {
    static constexpr SizeStratum base[] = {{0, 1}, {2, 3}, {4, 10}, {11, 100}, {101, 1000}};
    std::vector<SizeStratum> out;
    for (const auto& s : base) {
        if (s.lo > num_classes) break;
        out.push_back({s.lo, std::min(s.hi, num_classes)});
    }
    if (num_classes > 1000) out.back().hi = num_classes;
    return out;
}

std::optional<double> sscv(const PredictionSets& sets, const LabelVector& labels,
                           std::span<const NodeId> eval, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    const auto strata = sscv_strata(sets.num_classes());
    std::vector<std::size_t> count(strata.size(), 0), hits(strata.size(), 0);
    const auto pos = locate(sets, eval, labels.size());
    for (std::size_t t = 0; t < eval.size(); ++t) {
        const std::size_t size = sets.set_size(pos[t]);
        for (std::size_t s = 0; s < strata.size(); ++s) {
            if (size >= strata[s].lo && size <= strata[s].hi) {
                ++count[s];
                hits[s] += sets.contains(pos[t], labels[eval[t]]);
                break;
            }
        }
    }
    std::optional<double> worst;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        if (count[s] == 0) continue;
        const double cov = static_cast<double>(hits[s]) / static_cast<double>(count[s]);
        const double dev = std::abs(cov - (1.0 - alpha));
        worst = worst ? std::max(*worst, dev) : dev;
    }
    return worst;
}

}  // namespace snapcp
