#include "snapcp/matrix.hpp"

#include <string>

#include "snapcp/error.hpp"

namespace snapcp {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("matrix payload has " + std::to_string(data_.size()) +
                              " values, expected " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
}

DenseMatrix DenseMatrix::select_rows(std::span<const NodeId> rows) const {
    DenseMatrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void LabelVector::validate() const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw ValidationError("label " + std::to_string(labels[i]) + " at node " +
                                  std::to_string(i) + " is not below class count " +
                                  std::to_string(num_classes));
        }
    }
}

LabelVector LabelVector::select(std::span<const NodeId> nodes) const {
    LabelVector out;
    out.num_classes = num_classes;
    out.labels.reserve(nodes.size());
    for (NodeId v : nodes) out.labels.push_back(labels[v]);
    return out;
}

}  // namespace snapcp
