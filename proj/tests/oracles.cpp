#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snapcp::oracle {

std::vector<std::vector<std::pair<NodeId, double>>> brute_force_knn(const DenseMatrix& x, std::size_t k,
                                                                    double min_similarity) {
    const std::size_t n = x.rows();
    std::vector<std::vector<std::pair<NodeId, double>>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<NodeId, double>> all;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            long double dot = 0, a = 0, b = 0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                dot += static_cast<long double>(x(i, c)) * x(j, c);
                a += static_cast<long double>(x(i, c)) * x(i, c);
                b += static_cast<long double>(x(j, c)) * x(j, c);
            }
            if (a == 0 || b == 0) continue;
            const double sim = static_cast<double>(dot / std::sqrt(a * b));
            if (sim > min_similarity) all.emplace_back(static_cast<NodeId>(j), sim);
        }
        std::sort(all.begin(), all.end(), [](const auto& p, const auto& q) {
            return p.second != q.second ? p.second > q.second : p.first < q.first;
        });
        if (all.size() > k) all.resize(k);
        out[i] = std::move(all);
    }
    return out;
}

double naive_aps(std::span<const double> p, std::size_t y, double xi) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > p[y]) s += p[i];
    }
    return s + xi * p[y];
}

DenseMatrix dense_snaps(const DenseMatrix& s, const DenseMatrix& knn_adj, const DenseMatrix& adj, double lambda,
                        double mu) {
    const std::size_t n = s.rows();
    const std::size_t k = s.cols();
    DenseMatrix out(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double ds = 0.0, d = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            ds += knn_adj(i, j);
            d += adj(i, j);
        }
        const double l = ds > 0 ? lambda : 0.0;
        const double m = d > 0 ? mu : 0.0;
        for (std::size_t y = 0; y < k; ++y) {
            double fs = 0.0, st = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (ds > 0) fs += knn_adj(i, j) / ds * s(j, y);
                if (d > 0) st += adj(i, j) / d * s(j, y);
            }
            out(i, y) = (1.0 - l - m) * s(i, y) + l * fs + m * st;
        }
    }
    return out;
}

double brute_quantile(std::vector<double> scores, double alpha) {
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    const long double target = (1.0L - static_cast<long double>(alpha)) * static_cast<long double>(n + 1);
    std::size_t r = 0;
    while (static_cast<long double>(r) < target - 1e-9L * target) ++r;
    if (r > n) return std::numeric_limits<double>::infinity();
    return scores[r - 1];
}

NaiveMetrics naive_metrics(const std::vector<std::vector<std::uint32_t>>& sets,
                           const std::vector<std::uint32_t>& labels) {
    double cov = 0, size = 0, sh = 0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const bool hit = std::find(sets[i].begin(), sets[i].end(), labels[i]) != sets[i].end();
        cov += hit;
        size += static_cast<double>(sets[i].size());
        sh += (sets[i].size() == 1 && sets[i][0] == labels[i]);
    }
    const auto n = static_cast<double>(sets.size());
    return {cov / n, size / n, sh / n};
}

std::optional<double> naive_sscv(const std::vector<std::vector<std::uint32_t>>& sets,
                                 const std::vector<std::uint32_t>& labels, std::size_t num_classes, double alpha) {
    const std::pair<std::size_t, std::size_t> strata[] = {{0, 1}, {2, 3}, {4, 10}, {11, 100}, {101, 1000}};
    std::optional<double> worst;
    for (const auto& [lo, hi] : strata) {
        if (lo > num_classes) continue;
        double n = 0, hit = 0;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const auto sz = sets[i].size();
            if (sz < lo || sz > hi) continue;
            ++n;
            hit += std::find(sets[i].begin(), sets[i].end(), labels[i]) != sets[i].end();
        }
        if (n == 0) continue;
        const double dev = std::abs(hit / n - (1.0 - alpha));
        if (!worst || dev > *worst) worst = dev;
    }
    return worst;
}

DenseMatrix random_probs(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    DenseMatrix p(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (auto& v : p.row(i)) z += (v = e(rng));
        for (auto& v : p.row(i)) v /= z;
    }
    return p;
}

DenseMatrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(n, d);
    for (auto& v : m.data()) v = u(rng);
    return m;
}

}  // namespace snapcp::oracle
