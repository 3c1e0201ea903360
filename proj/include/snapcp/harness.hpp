#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snapcp/graph.hpp"
#include "snapcp/matrixio.hpp"
#include "snapcp/propagate.hpp"
#include "snapcp/report.hpp"
#include "snapcp/scores.hpp"

namespace snapcp {

enum class Method { aps, raps, daps, snaps };
enum class BaseScore { aps, raps };

const char* to_string(Method m) noexcept;
const char* to_string(BaseScore b) noexcept;
Method parse_method(std::string_view s);

/// How many pool nodes go to calibration.
struct CalibRule {
    enum class Kind { paper_min_1000, fixed };
    Kind kind = Kind::paper_min_1000;
    std::size_t fixed_size = 0;

    static CalibRule min_1000() { return {}; }
    static CalibRule fixed(std::size_t n) { return {Kind::fixed, n}; }
    /// min(1000, pool / 2) or the fixed size. Throws if nothing would be left to test.
    std::size_t calib_size(std::size_t pool) const;
};

struct SplitIndices {
    std::vector<NodeId> train;
    std::vector<NodeId> valid;
    std::vector<NodeId> calib;
    std::vector<NodeId> test;
};

struct SplitConfig {
    std::size_t train_per_class = 20;
    std::size_t valid_per_class = 20;
    CalibRule calib_rule;
};

/// Per-class train/valid draws, then a uniform calib/test partition of the
/// remaining pool. Throws ValidationError naming the first class that is too small.
SplitIndices sample_splits(const LabelVector& labels, const SplitConfig& cfg, std::uint64_t seed);

struct ConformalSplit {
    std::vector<NodeId> calib;
    std::vector<NodeId> test;
};

/// Uniform calib/test partition of `pool`.
ConformalSplit draw_conformal_split(std::span<const NodeId> pool, const CalibRule& rule, std::uint64_t seed);

struct CalibrationHalves {
    std::vector<NodeId> tuning;
    std::vector<NodeId> conformal;
};

/// First floor(n / 2) calibration nodes tune, the rest calibrate. The
/// calibration order is already random.
CalibrationHalves split_for_tuning(std::span<const NodeId> calib);

/// All (lambda, mu) on a `step` lattice with lambda + mu <= 1, lambda-major.
/// Step 0.05 gives 231 points.
std::vector<SnapsParams> snaps_grid(double step);
/// (0, mu) for mu on the lattice.
std::vector<SnapsParams> daps_grid(double step);
/// k_reg in 1..min(K, 10) crossed with lambda_reg in {0, 0.001, 0.01, 0.1, 0.2, 0.5}.
std::vector<RapsParams> raps_grid(std::size_t num_classes);

struct TuningScore {
    double size = 0.0;
    double sh = 0.0;
};

/// Calibrates on the first half of `tuning` and scores the second half.
/// `scores` rows are indexed by node id.
TuningScore tuning_objective(const ScoreMatrix& scores, const LabelVector& labels,
                             std::span<const NodeId> tuning, double alpha);

/// Argmin Size over the grid; ties go to higher SH, then smaller lambda + mu,
/// then grid order. Only labels of `tuning` nodes are read.
SnapsParams tune_snaps(const SnapsAggregator& aggregator, const LabelVector& labels,
                       std::span<const NodeId> tuning, double alpha, std::span<const SnapsParams> grid);

/// Same objective for RAPS penalties; ties go to higher SH, then smaller
/// lambda_reg, then grid order.
RapsParams tune_raps(const ScoreMatrix& aps, std::span<const std::uint32_t> ranks,
                     const LabelVector& labels, std::span<const NodeId> tuning, double alpha,
                     std::span<const RapsParams> grid);

struct ExperimentConfig {
    double alpha = 0.05;
    Method method = Method::snaps;
    /// Base score wrapped by daps/snaps.
    BaseScore base = BaseScore::aps;
    KnnConfig knn;
    double grid_step = 0.05;
    std::size_t n_model_splits = 10;
    std::size_t n_conformal_splits = 100;
    SplitConfig splits;
    std::uint64_t seed = 0;
    /// When set, skip tuning and calibrate on the whole calibration set.
    std::optional<SnapsParams> fixed_snaps;
    std::optional<RapsParams> fixed_raps;

    void validate() const;
    bool needs_knn() const noexcept { return method == Method::snaps; }
};

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

/// Repeated split-conformal trials: for each model split and conformal split,
/// tune on half the calibration set if needed, aggregate, calibrate, predict
/// and evaluate. Trials run in parallel with seeds derived from
/// (cfg.seed, trial index); results are merged in trial order. `knn` may be
/// passed in (e.g. from a cache); otherwise it is built when needed.
TrialReport run_experiment(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                           const SparseGraph* knn = nullptr);

struct OracleConfig {
    double alpha = 0.05;
    std::vector<std::size_t> m_sweep{0, 1, 2, 4, 8, 16, 32};
    double w = 0.5;
    std::size_t n_model_splits = 10;
    std::size_t n_conformal_splits = 100;
    SplitConfig splits;
    std::uint64_t seed = 0;
};

/// One report per m. Trial t uses the same calib/test split for every m.
std::vector<TrialReport> run_oracle_experiment(const DatasetBundle& bundle, const OracleConfig& cfg);

struct ImageConfig {
    double alpha = 0.1;
    std::size_t k = 5;
    double eta = 0.5;
    std::size_t n_trials = 10;
    std::uint64_t seed = 0;
};

struct ImageReports {
    TrialReport aps;
    TrialReport snaps;
};

/// Graph-free mode on a fixed calibration/test pair.
ImageReports run_image_fixed(const DenseMatrix& calib_probs, const DenseMatrix& calib_features,
                             const LabelVector& calib_labels, const DenseMatrix& test_probs,
                             const DenseMatrix& test_features, const LabelVector& test_labels,
                             const ImageConfig& cfg);

/// Graph-free mode with n_trials random half/half calibration/test splits.
ImageReports run_image_experiment(const DenseMatrix& probs, const DenseMatrix& features,
                                  const LabelVector& labels, const ImageConfig& cfg);

struct SyntheticConfig {
    std::size_t n = 2000;
    std::size_t classes = 4;
    std::size_t dim = 16;
    /// Target fraction of intra-class edges.
    double homophily = 0.8;
    /// Logit margin of the true class and feature offset along the class axis.
    double class_sep = 2.0;
    /// Std of the Gaussian logit noise.
    double noise = 1.0;
    double avg_degree = 10.0;
    double feature_noise = 1.0;
    std::uint64_t seed = 0;
    std::string name = "synthetic";
};

/// Planted-partition graph with intra-class edge rate scaled by homophily,
/// Gaussian features around class axes, softmax probabilities over noisy
/// logits, balanced labels.
DatasetBundle generate_synthetic(const SyntheticConfig& cfg);

/// Fraction of undirected edges joining same-label nodes.
double edge_homophily(const DatasetBundle& bundle);

}  // namespace snapcp
