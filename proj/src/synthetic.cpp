#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "snapcp/error.hpp"
#include "snapcp/harness.hpp"
#include "snapcp/seed.hpp"

namespace snapcp {

namespace {

// Geometric gap to the next success of a Bernoulli(p) sequence.
std::uint64_t next_gap(std::mt19937_64& rng, double p) {
    if (p >= 1.0) return 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = 1.0 - u(rng);  // (0, 1]
    return static_cast<std::uint64_t>(std::floor(std::log(r) / std::log1p(-p)));
}

// Independent Bernoulli(p) edges over all unordered pairs inside `a`.
void sample_within(const std::vector<NodeId>& a, double p, std::mt19937_64& rng,
                   std::vector<std::pair<NodeId, NodeId>>& out) {
    if (p <= 0.0 || a.size() < 2) return;
    const std::uint64_t c = a.size();
    const std::uint64_t total = c * (c - 1) / 2;
    std::uint64_t idx = next_gap(rng, p);
    std::uint64_t row = 0, row_start = 0;  // pairs (row, row+1..c-1) start at row_start
    while (idx < total) {
        while (idx >= row_start + (c - 1 - row)) {
            row_start += c - 1 - row;
            ++row;
        }
        const std::uint64_t col = row + 1 + (idx - row_start);
        out.emplace_back(a[row], a[col]);
        idx += 1 + next_gap(rng, p);
    }
}

// Independent Bernoulli(p) edges over a x b.
void sample_between(const std::vector<NodeId>& a, const std::vector<NodeId>& b, double p, std::mt19937_64& rng,
                    std::vector<std::pair<NodeId, NodeId>>& out) {
    if (p <= 0.0 || a.empty() || b.empty()) return;
    const std::uint64_t total = static_cast<std::uint64_t>(a.size()) * b.size();
    for (std::uint64_t idx = next_gap(rng, p); idx < total; idx += 1 + next_gap(rng, p)) {
        out.emplace_back(a[idx / b.size()], b[idx % b.size()]);
    }
}

}  // namespace

DatasetBundle generate_synthetic(const SyntheticConfig& cfg) {
    const std::size_t n = cfg.n;
    const std::size_t k = cfg.classes;
    if (k < 2) throw ValidationError("synthetic data needs at least two classes");
    if (n < 40 * k) {
        throw ValidationError("synthetic data needs n >= 40 * classes (" + std::to_string(40 * k) + ")");
    }
    if (!(cfg.homophily >= 0.0 && cfg.homophily <= 1.0)) throw ValidationError("homophily must lie in [0, 1]");
    if (cfg.dim == 0) throw ValidationError("feature dimension must be positive");
    if (!(cfg.noise >= 0.0) || !(cfg.feature_noise >= 0.0) || !(cfg.avg_degree >= 0.0)) {
        throw ValidationError("noise levels and degree must be nonnegative");
    }

    std::mt19937_64 rng(cfg.seed);

    // Balanced labels in random order.
    LabelVector labels;
    labels.num_classes = k;
    labels.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) labels.labels[i] = static_cast<std::uint32_t>(i % k);
    std::shuffle(labels.labels.begin(), labels.labels.end(), rng);
    std::vector<std::vector<NodeId>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(static_cast<NodeId>(i));

    // Planted partition: expected intra degree h * avg, inter degree (1 - h) * avg.
    const double class_size = static_cast<double>(n) / static_cast<double>(k);
    const double p_in = cfg.homophily * cfg.avg_degree / (class_size - 1.0);
    const double p_out = (1.0 - cfg.homophily) * cfg.avg_degree / (static_cast<double>(n) - class_size);
    if (p_in > 1.0 || p_out > 1.0) {
        throw ValidationError("edge probabilities (" + std::to_string(p_in) + ", " + std::to_string(p_out) +
                              ") exceed 1; lower avg_degree");
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::mt19937_64 edge_rng(derive_seed(cfg.seed, 1));
    for (std::size_t a = 0; a < k; ++a) {
        sample_within(members[a], p_in, edge_rng, edges);
        for (std::size_t b = a + 1; b < k; ++b) sample_between(members[a], members[b], p_out, edge_rng, edges);
    }

    std::mt19937_64 feat_rng(derive_seed(cfg.seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix features(n, cfg.dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = features.row(i);
        for (double& v : row) v = cfg.feature_noise * gauss(feat_rng);
        row[labels[i] % cfg.dim] += cfg.class_sep;
    }

    std::mt19937_64 logit_rng(derive_seed(cfg.seed, 3));
    DenseMatrix probs(n, k);
    std::vector<double> logits(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            logits[c] = (c == labels[i] ? cfg.class_sep : 0.0) + cfg.noise * gauss(logit_rng);
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& l : logits) z += (l = std::exp(l - top));
        auto row = probs.row(i);
        for (std::size_t c = 0; c < k; ++c) row[c] = logits[c] / z;
    }

    return make_bundle(cfg.name, std::move(features), std::move(probs), std::move(labels), edges);
}

double edge_homophily(const DatasetBundle& bundle) {
    std::size_t total = 0, same = 0;
    for (const auto& [u, v] : bundle.arcs) {
        if (u >= v) continue;
        ++total;
        same += bundle.labels[u] == bundle.labels[v];
    }
    return total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace snapcp
