#pragma once

// Exact k-nearest-neighbour density score under the Euclidean metric.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mfad {

class KnnIndex {
public:
    KnnIndex() = default;
    // Takes ownership of row-major `vectors` (count x dim). Throws EmptyIndex
    // when no vectors are given and InvalidConfig when k is 0 or exceeds the
    // stored count.
    KnnIndex(std::vector<double> vectors, std::uint32_t dim, std::uint32_t k);

    std::uint32_t dim() const noexcept { return dim_; }
    std::uint32_t k() const noexcept { return k_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const KnnIndex&) const = default;

private:
    std::vector<double> data_;
    std::uint32_t dim_ = 0;
    std::uint32_t k_ = 1;
};

// Distance from x to its k-th nearest stored vector. With `exclude`, the
// stored vector at that index is skipped (leave-one-out scoring of the
// training set). Throws EmptyIndex on an empty index and DimensionMismatch
// when x has the wrong length.
double knn_score(const KnnIndex& index, std::span<const double> x, std::optional<std::size_t> exclude = std::nullopt);

}  // namespace mfad
