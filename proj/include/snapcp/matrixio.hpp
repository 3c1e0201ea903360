#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "snapcp/matrix.hpp"

namespace snapcp {

enum class MatrixFormat { binary, csv };

/// Picks csv for a ".csv" extension, binary otherwise.
MatrixFormat format_from_path(const std::filesystem::path& path);

/// Binary layout: "SNPM", u32 rows, u32 cols, rows*cols f32, all little-endian,
/// row-major. CSV: header-less numeric rows of equal width.
DenseMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
void write_matrix(const DenseMatrix& m, const std::filesystem::path& path, MatrixFormat format);

/// One integer label per line.
std::vector<std::uint32_t> load_labels(const std::filesystem::path& path);
void write_labels(std::span<const std::uint32_t> labels, const std::filesystem::path& path);

/// Whitespace-separated "u v" pairs, one per line. Lines starting with '#' are skipped.
std::vector<std::pair<NodeId, NodeId>> load_edges(const std::filesystem::path& path);

struct DatasetBundle {
    std::string name;
    DenseMatrix features;       // N x d
    DenseMatrix probabilities;  // N x K
    LabelVector labels;
    /// Directed arcs, symmetrized, deduplicated, sorted, self-loop free.
    std::vector<std::pair<NodeId, NodeId>> arcs;
    std::size_t dropped_self_loops = 0;
    /// Feature file the bundle was loaded from; empty for in-memory bundles.
    std::filesystem::path features_path;

    std::size_t num_nodes() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return labels.num_classes; }
};

struct BundleOptions {
    /// Rescale probability rows to sum to one instead of rejecting them.
    bool renormalize = false;
    double probability_tolerance = 1e-4;
};

/// Cross-validates the parts and normalizes the edge list. Used by both the
/// file loader and in-memory generators.
DatasetBundle make_bundle(std::string name, DenseMatrix features, DenseMatrix probabilities,
                          LabelVector labels, std::span<const std::pair<NodeId, NodeId>> edges,
                          const BundleOptions& options = {});

/// Manifest is a key=value text file with keys name, classes, features,
/// probabilities, labels, edges. Relative paths resolve against the manifest's
/// directory.
DatasetBundle load_bundle(const std::filesystem::path& manifest, const BundleOptions& options = {});

/// Writes features.bin, probabilities.bin, labels.txt, edges.txt and
/// manifest.txt into `dir`. Returns the manifest path.
std::filesystem::path write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

}  // namespace snapcp
