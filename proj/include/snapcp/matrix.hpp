#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace snapcp {

using NodeId = std::uint32_t;

/// Row-major real matrix. Carries probabilities, features and score tables.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    /// Copy of the listed rows, in the listed order.
    DenseMatrix select_rows(std::span<const NodeId> rows) const;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Per-node class index in [0, num_classes).
struct LabelVector {
    std::vector<std::uint32_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::uint32_t operator[](std::size_t i) const noexcept { return labels[i]; }

    /// Throws ValidationError if any label is >= num_classes.
    void validate() const;
    LabelVector select(std::span<const NodeId> nodes) const;

    bool operator==(const LabelVector&) const = default;
};

}  // namespace snapcp
