#include "snapcp/scores.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "snapcp/error.hpp"
#include "snapcp/seed.hpp"

namespace snapcp {

const char* to_string(ScoreKind kind) noexcept {
    switch (kind) {
        case ScoreKind::aps: return "aps";
        case ScoreKind::raps: return "raps";
        case ScoreKind::daps: return "daps";
        case ScoreKind::snaps: return "snaps";
        case ScoreKind::oracle: return "oracle";
    }
    return "unknown";
}

double XiPolicy::draw(std::uint64_t node_key, std::uint32_t label) const noexcept {
    if (mode == Mode::fixed) return fixed_value;
    return unit_from_bits(derive_seed(derive_seed(seed, node_key), label));
}

void RapsParams::validate() const {
    if (k_reg < 1) throw ValidationError("RAPS k_reg must be >= 1");
    if (!(lambda_reg >= 0.0)) throw ValidationError("RAPS lambda_reg must be >= 0");
}

namespace {

void check_xi(const XiPolicy& xi) {
    if (xi.mode == XiPolicy::Mode::fixed && !(xi.fixed_value >= 0.0 && xi.fixed_value <= 1.0)) {
        throw ValidationError("fixed xi must lie in [0, 1]");
    }
}

void check_keys(const DenseMatrix& probs, std::span<const std::uint64_t> node_keys) {
    if (!node_keys.empty() && node_keys.size() != probs.rows()) {
        throw ValidationError("node key count " + std::to_string(node_keys.size()) +
                              " does not match " + std::to_string(probs.rows()) + " rows");
    }
}

}  // namespace

ScoreMatrix aps_scores(const DenseMatrix& probs, const XiPolicy& xi,
                       std::span<const std::uint64_t> node_keys) {
    check_xi(xi);
    check_keys(probs, node_keys);
    const std::size_t n = probs.rows();
    const std::size_t k = probs.cols();
    ScoreMatrix out{DenseMatrix(n, k), ScoreKind::aps, xi.seed};
    std::vector<std::uint32_t> order(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = probs.row(i);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return p[a] > p[b]; });
        const std::uint64_t key = node_keys.empty() ? i : node_keys[i];
        // Walk groups of equal probability; every member of a group sees only the
        // mass of strictly larger groups.
        double above = 0.0;
        std::size_t g = 0;
        while (g < k) {
            std::size_t e = g + 1;
            while (e < k && p[order[e]] == p[order[g]]) ++e;
            double group_mass = 0.0;
            for (std::size_t t = g; t < e; ++t) {
                const std::uint32_t y = order[t];
                out.values(i, y) = above + xi.draw(key, y) * p[y];
                group_mass += p[y];
            }
            above += group_mass;
            g = e;
        }
    }
    return out;
}

std::vector<std::uint32_t> class_ranks(const DenseMatrix& probs) {
    const std::size_t n = probs.rows();
    const std::size_t k = probs.cols();
    std::vector<std::uint32_t> ranks(n * k);
    std::vector<std::uint32_t> order(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = probs.row(i);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return p[a] > p[b]; });
        for (std::size_t r = 0; r < k; ++r) ranks[i * k + order[r]] = static_cast<std::uint32_t>(r + 1);
    }
    return ranks;
}

ScoreMatrix raps_from_aps(const ScoreMatrix& aps, std::span<const std::uint32_t> ranks,
                          const RapsParams& params) {
    params.validate();
    if (ranks.size() != aps.rows() * aps.cols()) {
        throw ValidationError("rank table does not match the score matrix shape");
    }
    ScoreMatrix out{aps.values, ScoreKind::raps, aps.xi_seed};
    auto data = out.values.data();
    for (std::size_t t = 0; t < data.size(); ++t) {
        if (ranks[t] > params.k_reg) {
            data[t] += params.lambda_reg * static_cast<double>(ranks[t] - params.k_reg);
        }
    }
    return out;
}

ScoreMatrix raps_scores(const DenseMatrix& probs, const XiPolicy& xi, const RapsParams& params,
                        std::span<const std::uint64_t> node_keys) {
    params.validate();
    return raps_from_aps(aps_scores(probs, xi, node_keys), class_ranks(probs), params);
}

}  // namespace snapcp
