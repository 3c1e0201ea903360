#include <cmath>
#include <numeric>
#include <string>

#include "snapcp/conformal.hpp"
#include "snapcp/error.hpp"
#include "snapcp/harness.hpp"
#include "snapcp/metrics.hpp"

namespace snapcp {

namespace {

std::size_t lattice_steps(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("grid step must lie in (0, 1]");
    const double inv = 1.0 / step;
    const auto n = static_cast<std::size_t>(std::llround(inv));
    if (std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) {
        throw ValidationError("grid step " + std::to_string(step) + " does not divide 1 evenly");
    }
    return n;
}

std::vector<NodeId> iota_ids(std::size_t n) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    return ids;
}

// Lexicographic preference: smaller size, larger SH, smaller complexity.
bool preferable(const TuningScore& a, double complexity_a, const TuningScore& b, double complexity_b) {
    if (a.size != b.size) return a.size < b.size;
    if (a.sh != b.sh) return a.sh > b.sh;
    return complexity_a < complexity_b;
}

}  // namespace

std::vector<SnapsParams> snaps_grid(double step) {
    const std::size_t n = lattice_steps(step);
    std::vector<SnapsParams> grid;
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; i + j <= n; ++j) {
            grid.push_back({static_cast<double>(i) / static_cast<double>(n),
                            static_cast<double>(j) / static_cast<double>(n)});
        }
    }
    return grid;
}

std::vector<SnapsParams> daps_grid(double step) {
    const std::size_t n = lattice_steps(step);
    std::vector<SnapsParams> grid;
    for (std::size_t j = 0; j <= n; ++j) grid.push_back({0.0, static_cast<double>(j) / static_cast<double>(n)});
    return grid;
}

std::vector<RapsParams> raps_grid(std::size_t num_classes) {
    static constexpr double penalties[] = {0.0, 0.001, 0.01, 0.1, 0.2, 0.5};
    std::vector<RapsParams> grid;
    const std::size_t k_max = std::min<std::size_t>(std::max<std::size_t>(num_classes, 1), 10);
    for (std::size_t k = 1; k <= k_max; ++k) {
        for (double l : penalties) grid.push_back({k, l});
    }
    return grid;
}

TuningScore tuning_objective(const ScoreMatrix& scores, const LabelVector& labels,
                             std::span<const NodeId> tuning, double alpha) {
    const std::size_t half = tuning.size() / 2;
    if (half == 0 || half == tuning.size()) throw ValidationError("tuning set needs at least two nodes");
    const auto fit = tuning.first(half);
    const auto eval = tuning.subspan(half);
    const auto threshold = calibrate(scores, labels, fit, alpha);
    const auto sets = predict_sets(scores, threshold, eval);
    const auto m = evaluate(sets, labels, eval);
    return {m.size, m.sh};
}

SnapsParams tune_snaps(const SnapsAggregator& aggregator, const LabelVector& labels,
                       std::span<const NodeId> tuning, double alpha, std::span<const SnapsParams> grid) {
    if (grid.empty()) throw ValidationError("empty tuning grid");
    const auto local_labels = labels.select(tuning);
    const auto local_ids = iota_ids(tuning.size());
    SnapsParams best = grid.front();
    TuningScore best_score{};
    bool have = false;
    for (const auto& p : grid) {
        const auto mixed = aggregator.mix_rows(p, tuning);
        const auto score = tuning_objective(mixed, local_labels, local_ids, alpha);
        if (!have || preferable(score, p.lambda + p.mu, best_score, best.lambda + best.mu)) {
            best = p;
            best_score = score;
            have = true;
        }
    }
    return best;
}

RapsParams tune_raps(const ScoreMatrix& aps, std::span<const std::uint32_t> ranks,
                     const LabelVector& labels, std::span<const NodeId> tuning, double alpha,
                     std::span<const RapsParams> grid) {
    if (grid.empty()) throw ValidationError("empty tuning grid");
    const std::size_t k = aps.cols();
    const auto local_aps = aps.select_rows(tuning);
    std::vector<std::uint32_t> local_ranks;
    local_ranks.reserve(tuning.size() * k);
    for (NodeId v : tuning) {
        local_ranks.insert(local_ranks.end(), ranks.begin() + static_cast<std::ptrdiff_t>(v * k),
                           ranks.begin() + static_cast<std::ptrdiff_t>((v + 1) * k));
    }
    const auto local_labels = labels.select(tuning);
    const auto local_ids = iota_ids(tuning.size());
    RapsParams best = grid.front();
    TuningScore best_score{};
    bool have = false;
    for (const auto& p : grid) {
        const auto scores = raps_from_aps(local_aps, local_ranks, p);
        const auto score = tuning_objective(scores, local_labels, local_ids, alpha);
        if (!have || preferable(score, p.lambda_reg, best_score, best.lambda_reg)) {
            best = p;
            best_score = score;
            have = true;
        }
    }
    return best;
}

}  // namespace snapcp
