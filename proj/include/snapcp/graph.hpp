#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "snapcp/matrix.hpp"

namespace snapcp {

struct Arc {
    NodeId src = 0;
    NodeId dst = 0;
    double weight = 1.0;
};

/// Compressed-row adjacency with per-arc weights. Row order of the column
/// indices is whatever the builder produced (sorted for structural graphs,
/// descending similarity for k-NN graphs).
class SparseGraph {
public:
    SparseGraph() = default;
    /// Empty graph on n nodes.
    explicit SparseGraph(std::size_t n);
    /// Throws ValidationError on out-of-range endpoints or duplicate arcs.
    SparseGraph(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<NodeId> cols,
                std::vector<double> weights);

    /// Unit-weight graph from node pairs; arcs are sorted by (src, dst).
    static SparseGraph from_pairs(std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs);
    static SparseGraph from_arcs(std::size_t n, std::vector<Arc> arcs);

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_arcs() const noexcept { return cols_.size(); }

    std::span<const NodeId> neighbors(std::size_t i) const noexcept {
        return {cols_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const double> weights(std::size_t i) const noexcept {
        return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::size_t out_count(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
    /// Sum of the row's weights.
    double degree(std::size_t i) const noexcept { return degrees_[i]; }

    std::span<const std::size_t> row_offsets() const noexcept { return offsets_; }
    std::span<const NodeId> col_indices() const noexcept { return cols_; }
    std::span<const double> arc_weights() const noexcept { return weights_; }

    bool operator==(const SparseGraph&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> cols_;
    std::vector<double> weights_;
    std::vector<double> degrees_;
};

struct KnnConfig {
    std::size_t k = 10;
    /// Candidate pool size M for the sampled mode; unset means exact.
    std::optional<std::size_t> sample_size;
    std::uint64_t seed = 0;
    /// Arcs with similarity <= this are dropped.
    double min_similarity = 0.0;
    /// Permit exact mode above exact_limit nodes.
    bool force_exact = false;

    static constexpr std::size_t exact_limit = 50'000;

    void validate(std::size_t n) const;
};

struct KnnStats {
    std::size_t zero_norm_rows = 0;
    std::size_t candidates_per_row = 0;
};

/// x.y / (|x| |y|); 0 when either norm is 0.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

/// Directed k-NN similarity graph: row i holds i's k most similar candidates
/// (ties by smaller index) weighted by cosine similarity. Exact mode scans all
/// other nodes. Sampled mode draws one shared pool of M + 1 nodes per build;
/// each row uses the pool minus itself, or the first M pool entries when it is
/// not in the pool, so every row sees M candidates and M = n - 1 reproduces
/// exact mode.
SparseGraph build_knn_graph(const DenseMatrix& features, const KnnConfig& cfg,
                            KnnStats* stats = nullptr);

/// Divides every row by its degree. Empty rows stay empty. Throws when a
/// nonempty row has a non-positive degree (negative similarities admitted).
SparseGraph row_normalize(const SparseGraph& g);

/// Key identifying a cached k-NN graph.
struct KnnCacheKey {
    std::uint64_t feature_hash = 0;
    std::uint64_t k = 0;
    std::uint64_t sample_size = 0;  // 0 for exact mode
    std::uint64_t seed = 0;
    double min_similarity = 0.0;

    bool operator==(const KnnCacheKey&) const = default;
};

/// FNV-1a 64 over the file bytes.
std::uint64_t hash_file(const std::filesystem::path& path);
KnnCacheKey make_cache_key(const std::filesystem::path& features_path, const KnnConfig& cfg);

/// Sidecar format, little-endian: "SNPG", u64 feature hash, u64 k, u64 M,
/// u64 seed, f64 min_similarity, u32 n, u64 nnz, (n + 1) u64 offsets, nnz u32
/// columns, nnz f64 weights.
void write_knn_cache(const SparseGraph& g, const KnnCacheKey& key, const std::filesystem::path& path);
/// Returns nullopt if the file is missing or was built under a different key.
std::optional<SparseGraph> read_knn_cache(const std::filesystem::path& path, const KnnCacheKey& key);

}  // namespace snapcp
