#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snapcp/matrix.hpp"

namespace snapcp {

enum class ScoreKind { aps, raps, daps, snaps, oracle };

const char* to_string(ScoreKind kind) noexcept;

/// N x K non-conformity scores; lower means more conforming.
struct ScoreMatrix {
    DenseMatrix values;
    ScoreKind kind = ScoreKind::aps;
    std::uint64_t xi_seed = 0;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values(r, c); }

    ScoreMatrix select_rows(std::span<const NodeId> rows) const {
        return {values.select_rows(rows), kind, xi_seed};
    }
    bool operator==(const ScoreMatrix&) const = default;
};

/// How the randomization term of APS is drawn. In uniform mode the value for
/// (node, class) depends on (seed, node key, class) only, so scores are a pure
/// function of the inputs.
struct XiPolicy {
    enum class Mode { uniform, fixed };
    Mode mode = Mode::uniform;
    double fixed_value = 1.0;
    std::uint64_t seed = 0;

    static XiPolicy uniform(std::uint64_t seed) { return {Mode::uniform, 1.0, seed}; }
    static XiPolicy fixed(double value) { return {Mode::fixed, value, 0}; }

    double draw(std::uint64_t node_key, std::uint32_t label) const noexcept;
};

struct RapsParams {
    std::size_t k_reg = 1;
    double lambda_reg = 0.0;

    void validate() const;
    bool operator==(const RapsParams&) const = default;
};

/// s(x, y) = sum_i p_i [p_i > p_y] + xi * p_y. Ties in probability do not enter
/// the sum. `node_keys`, when non-empty, supplies the identity used to key xi
/// for each row (defaults to the row index).
ScoreMatrix aps_scores(const DenseMatrix& probs, const XiPolicy& xi,
                       std::span<const std::uint64_t> node_keys = {});

/// APS plus lambda_reg * max(0, rank(y) - k_reg), rank 1-based by descending
/// probability with ties broken by class index.
ScoreMatrix raps_scores(const DenseMatrix& probs, const XiPolicy& xi, const RapsParams& params,
                        std::span<const std::uint64_t> node_keys = {});

/// 1-based descending-probability rank of every class (row-major N x K), ties
/// by class index.
std::vector<std::uint32_t> class_ranks(const DenseMatrix& probs);

/// Adds the RAPS penalty to precomputed APS scores; `ranks` from class_ranks().
ScoreMatrix raps_from_aps(const ScoreMatrix& aps, std::span<const std::uint32_t> ranks,
                          const RapsParams& params);

}  // namespace snapcp
