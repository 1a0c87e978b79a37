#include "mfad/knn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfad/error.hpp"

namespace mfad {

KnnIndex::KnnIndex(std::vector<double> vectors, std::uint32_t dim, std::uint32_t k)
    : data_(std::move(vectors)), dim_(dim), k_(k) {
    if (dim_ == 0 || data_.empty()) throw Error(ErrorCode::EmptyIndex, "kNN index built from no vectors");
    if (data_.size() % dim_ != 0) throw Error(ErrorCode::DimensionMismatch, "kNN data is not a multiple of dim");
    if (k_ == 0 || k_ > size()) {
        throw Error(ErrorCode::InvalidConfig,
                    "kNN k=" + std::to_string(k_) + " with " + std::to_string(size()) + " stored vectors");
    }
}

double knn_score(const KnnIndex& index, std::span<const double> x, std::optional<std::size_t> exclude) {
    if (index.size() == 0) throw Error(ErrorCode::EmptyIndex, "kNN query on an empty index");
    if (x.size() != index.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "kNN query of dimension " + std::to_string(x.size()) +
                                                      " against index of dimension " + std::to_string(index.dim()));
    }
    const std::size_t n = index.size();
    const std::size_t usable = exclude && *exclude < n ? n - 1 : n;
    if (index.k() > usable) {
        throw Error(ErrorCode::EmptyIndex, "kNN query needs " + std::to_string(index.k()) + " neighbours, only " +
                                               std::to_string(usable) + " available");
    }

    std::vector<double> d2;
    d2.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (exclude && i == *exclude) continue;
        const auto row = index.row(i);
        double s = 0.0;
        for (std::size_t d = 0; d < row.size(); ++d) {
            const double diff = x[d] - row[d];
            s += diff * diff;
        }
        d2.push_back(s);
    }
    auto kth = d2.begin() + (index.k() - 1);
    std::nth_element(d2.begin(), kth, d2.end());
    return std::sqrt(*kth);
}

}  // namespace mfad
