#include "snapcp/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "snapcp/error.hpp"
#include "snapcp/parallel.hpp"

namespace snapcp {

namespace fs = std::filesystem;

SparseGraph::SparseGraph(std::size_t n) : n_(n), offsets_(n + 1, 0), degrees_(n, 0.0) {}

SparseGraph::SparseGraph(std::size_t n, std::vector<std::size_t> row_offsets,
                         std::vector<NodeId> cols, std::vector<double> weights)
    : n_(n), offsets_(std::move(row_offsets)), cols_(std::move(cols)), weights_(std::move(weights)),
      degrees_(n, 0.0) {
    if (offsets_.size() != n + 1 || offsets_.front() != 0 || offsets_.back() != cols_.size() ||
        weights_.size() != cols_.size()) {
        throw ValidationError("inconsistent compressed-row structure");
    }
    std::vector<NodeId> scratch;
    for (std::size_t i = 0; i < n; ++i) {
        if (offsets_[i] > offsets_[i + 1]) throw ValidationError("row offsets must be nondecreasing");
        auto nb = neighbors(i);
        scratch.assign(nb.begin(), nb.end());
        std::sort(scratch.begin(), scratch.end());
        if (!scratch.empty() && scratch.back() >= n) {
            throw ValidationError("arc target " + std::to_string(scratch.back()) + " out of range");
        }
        if (std::adjacent_find(scratch.begin(), scratch.end()) != scratch.end()) {
            throw ValidationError("duplicate arc in row " + std::to_string(i));
        }
        double d = 0.0;
        for (double w : this->weights(i)) d += w;
        degrees_[i] = d;
    }
}

SparseGraph SparseGraph::from_arcs(std::size_t n, std::vector<Arc> arcs) {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    std::vector<std::size_t> offsets(n + 1, 0);
    std::vector<NodeId> cols;
    std::vector<double> weights;
    cols.reserve(arcs.size());
    weights.reserve(arcs.size());
    for (const auto& a : arcs) {
        if (a.src >= n || a.dst >= n) {
            throw ValidationError("arc (" + std::to_string(a.src) + ", " + std::to_string(a.dst) +
                                  ") out of range for " + std::to_string(n) + " nodes");
        }
        ++offsets[a.src + 1];
        cols.push_back(a.dst);
        weights.push_back(a.weight);
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseGraph(n, std::move(offsets), std::move(cols), std::move(weights));
}

SparseGraph SparseGraph::from_pairs(std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs) {
    std::vector<Arc> arcs;
    arcs.reserve(pairs.size());
    for (const auto& [u, v] : pairs) arcs.push_back({u, v, 1.0});
    return from_arcs(n, std::move(arcs));
}

void KnnConfig::validate(std::size_t n) const {
    if (k >= n && n > 0) {
        throw ValidationError("k = " + std::to_string(k) + " must be below the node count " +
                              std::to_string(n));
    }
    if (sample_size) {
        if (*sample_size > n) {
            throw ValidationError("sample size M = " + std::to_string(*sample_size) +
                                  " exceeds the node count " + std::to_string(n));
        }
        if (*sample_size < 10 * k) {
            throw ValidationError("sample size M = " + std::to_string(*sample_size) +
                                  " must be at least 10k = " + std::to_string(10 * k));
        }
    } else if (n > exact_limit && !force_exact) {
        throw ValidationError("exact k-NN on " + std::to_string(n) +
                              " nodes needs force_exact; set a sample size instead");
    }
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("cosine similarity of vectors with dimensions " +
                              std::to_string(x.size()) + " and " + std::to_string(y.size()));
    }
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

SparseGraph build_knn_graph(const DenseMatrix& features, const KnnConfig& cfg, KnnStats* stats) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    cfg.validate(n);
    if (cfg.k == 0 || n == 0) {
        if (stats) *stats = {};
        return SparseGraph(n);
    }

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : features.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
    }

    // Pool of min(M + 1, n) nodes in random order; empty in exact mode.
    std::vector<NodeId> pool;
    if (cfg.sample_size) {
        std::vector<NodeId> all(n);
        std::iota(all.begin(), all.end(), NodeId{0});
        std::mt19937_64 rng(cfg.seed);
        const std::size_t take = std::min(*cfg.sample_size + 1, n);
        for (std::size_t t = 0; t < take; ++t) {
            std::uniform_int_distribution<std::size_t> pick(t, n - 1);
            std::swap(all[t], all[pick(rng)]);
        }
        all.resize(take);
        pool = std::move(all);
    }
    std::vector<std::uint8_t> in_pool;
    if (cfg.sample_size) {
        in_pool.assign(n, 0);
        for (NodeId v : pool) in_pool[v] = 1;
    }

    struct Candidate {
        double sim;
        NodeId node;
    };
    const auto better = [](const Candidate& a, const Candidate& b) {
        return a.sim != b.sim ? a.sim > b.sim : a.node < b.node;
    };

    std::vector<std::vector<Candidate>> rows(n);
    std::vector<std::uint8_t> zero_row(n, 0);
    parallel_for(n, [&](std::size_t i) {
        if (norms[i] == 0.0) {
            zero_row[i] = 1;
            return;
        }
        const auto xi = features.row(i);
        std::vector<Candidate> cand;
        auto consider = [&](NodeId j) {
            if (j == i) return;
            double sim = 0.0;
            if (norms[j] != 0.0) {
                const auto xj = features.row(j);
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += xi[c] * xj[c];
                sim = dot / (norms[i] * norms[j]);
            }
            if (sim > cfg.min_similarity) cand.push_back({sim, j});
        };
        if (!cfg.sample_size) {
            cand.reserve(n - 1);
            for (std::size_t j = 0; j < n; ++j) consider(static_cast<NodeId>(j));
        } else {
            const std::size_t m = std::min(*cfg.sample_size, n - 1);
            cand.reserve(m);
            std::size_t used = 0;
            for (NodeId j : pool) {
                if (used == m) break;
                if (j == i) continue;
                consider(j);
                ++used;
            }
        }
        const std::size_t keep = std::min(cfg.k, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                          better);
        cand.resize(keep);
        rows[i] = std::move(cand);
    });

    std::vector<std::size_t> offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = offsets[i] + rows[i].size();
    std::vector<NodeId> cols;
    std::vector<double> weights;
    cols.reserve(offsets.back());
    weights.reserve(offsets.back());
    for (const auto& r : rows) {
        for (const auto& c : r) {
            cols.push_back(c.node);
            weights.push_back(c.sim);
        }
    }
    const std::size_t zero_rows = static_cast<std::size_t>(std::count(zero_row.begin(), zero_row.end(), 1));
    if (zero_rows > 0) spdlog::warn("k-NN graph: {} zero-norm feature row(s) have no neighbors", zero_rows);
    if (stats) {
        stats->zero_norm_rows = zero_rows;
        stats->candidates_per_row = cfg.sample_size ? std::min(*cfg.sample_size, n - 1) : n - 1;
    }
    return SparseGraph(n, std::move(offsets), std::move(cols), std::move(weights));
}

SparseGraph row_normalize(const SparseGraph& g) {
    const std::size_t n = g.num_nodes();
    std::vector<std::size_t> offsets(g.row_offsets().begin(), g.row_offsets().end());
    std::vector<NodeId> cols(g.col_indices().begin(), g.col_indices().end());
    std::vector<double> weights(g.arc_weights().begin(), g.arc_weights().end());
    for (std::size_t i = 0; i < n; ++i) {
        if (g.out_count(i) == 0) continue;
        const double deg = g.degree(i);
        if (!(deg > 0.0)) {
            throw ValidationError("row " + std::to_string(i) + " has degree " + std::to_string(deg) +
                                  "; rebuild the k-NN graph with min_similarity >= 0");
        }
        for (std::size_t t = offsets[i]; t < offsets[i + 1]; ++t) weights[t] /= deg;
    }
    return SparseGraph(n, std::move(offsets), std::move(cols), std::move(weights));
}

namespace {

constexpr char kGraphMagic[4] = {'S', 'N', 'P', 'G'};

template <typename T>
void put(std::string& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    if (pos + sizeof(T) > in.size()) throw ValidationError("truncated k-NN cache file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += sizeof(T);
    return std::bit_cast<T>(bits);
}

}  // namespace

std::uint64_t hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

KnnCacheKey make_cache_key(const fs::path& features_path, const KnnConfig& cfg) {
    return {hash_file(features_path), cfg.k, cfg.sample_size.value_or(0), cfg.seed, cfg.min_similarity};
}

void write_knn_cache(const SparseGraph& g, const KnnCacheKey& key, const fs::path& path) {
    std::string out(kGraphMagic, 4);
    put(out, key.feature_hash);
    put(out, key.k);
    put(out, key.sample_size);
    put(out, key.seed);
    put(out, key.min_similarity);
    put(out, static_cast<std::uint32_t>(g.num_nodes()));
    put(out, static_cast<std::uint64_t>(g.num_arcs()));
    for (auto o : g.row_offsets()) put(out, static_cast<std::uint64_t>(o));
    for (auto c : g.col_indices()) put(out, static_cast<std::uint32_t>(c));
    for (auto w : g.arc_weights()) put(out, w);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::optional<SparseGraph> read_knn_cache(const fs::path& path, const KnnCacheKey& key) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string in = std::move(ss).str();
    if (in.size() < 4 || !std::equal(kGraphMagic, kGraphMagic + 4, in.begin())) {
        throw ValidationError(path.string() + ": not a k-NN cache file");
    }
    std::size_t pos = 4;
    KnnCacheKey stored;
    stored.feature_hash = get<std::uint64_t>(in, pos);
    stored.k = get<std::uint64_t>(in, pos);
    stored.sample_size = get<std::uint64_t>(in, pos);
    stored.seed = get<std::uint64_t>(in, pos);
    stored.min_similarity = get<double>(in, pos);
    if (!(stored == key)) return std::nullopt;
    const auto n = get<std::uint32_t>(in, pos);
    const auto nnz = get<std::uint64_t>(in, pos);
    std::vector<std::size_t> offsets(n + 1);
    for (auto& o : offsets) o = get<std::uint64_t>(in, pos);
    std::vector<NodeId> cols(nnz);
    for (auto& c : cols) c = get<std::uint32_t>(in, pos);
    std::vector<double> weights(nnz);
    for (auto& w : weights) w = get<double>(in, pos);
    return SparseGraph(n, std::move(offsets), std::move(cols), std::move(weights));
}

}  // namespace snapcp
