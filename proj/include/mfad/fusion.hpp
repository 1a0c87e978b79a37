#pragma once

// Score matrix assembly (with the per-frame max column), alpha-fraction
// sampling of test frames, and logistic-regression fusion.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfad/density.hpp"

namespace mfad {

// Row-major frames x columns matrix of calibrated scores in [0, 1]. The first
// `base_columns` columns are feature kinds in canonical order; when has_max is
// set a final column holds the row maximum of the base columns.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::size_t rows, std::vector<std::string> base_names, bool has_max);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return names_.size(); }
    std::size_t base_columns() const noexcept { return has_max_ ? names_.size() - 1 : names_.size(); }
    bool has_max() const noexcept { return has_max_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

    // Recomputes the max column from the base columns.
    void refresh_max();

private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    bool has_max_ = false;
    std::vector<double> data_;
};

ScoreMatrix build_matrix(const FrameScores& scores, bool include_max);

struct SplitSample {
    std::vector<std::size_t> train_indices;  // ascending
    std::vector<std::size_t> eval_indices;   // ascending
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

// round(alpha * n_frames) frames drawn uniformly without replacement. With
// `stratify_labels`, the draw is made separately within each label class in
// proportion to its size. Throws InvalidAlpha unless 0 <= alpha < 1.
SplitSample sample_split(std::size_t n_frames, double alpha, std::uint64_t seed);
SplitSample sample_split_stratified(std::span<const std::uint8_t> labels, double alpha, std::uint64_t seed);

struct LogRegHyper {
    double learning_rate = 0.1;
    std::uint32_t max_iter = 5000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
};

struct FusionModel {
    std::vector<double> weights;
    double bias = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    std::uint32_t iterations = 0;
    double final_loss = 0.0;
    bool single_class = false;     // training sample held one label only
    std::vector<double> loss_trace;  // loss at the start of every iteration, then the final loss

    bool operator==(const FusionModel&) const = default;
};

double sigmoid(double t) noexcept;

// Mean binary cross-entropy of sigma(w.x + b) over the rows of `x`.
double logreg_loss(std::span<const double> weights, double bias, const ScoreMatrix& x,
                   std::span<const std::size_t> rows, std::span<const std::uint8_t> labels);

// Gradient of logreg_loss; returns weights.size() + 1 entries, bias last.
std::vector<double> logreg_gradient(std::span<const double> weights, double bias, const ScoreMatrix& x,
                                    std::span<const std::size_t> rows, std::span<const std::uint8_t> labels);

// Full-batch gradient descent from zero on rows `rows` of `x` with labels
// indexed by matrix row. Throws NoSamples on an empty selection.
FusionModel train_logreg(const ScoreMatrix& x, std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                         const LogRegHyper& hyper);

// Row-wise sigma(w.x + b). Throws ShapeMismatch when widths differ.
std::vector<double> predict(const FusionModel& model, const ScoreMatrix& x);

// Unsupervised fusion: mean of the base columns (plus the max column when
// include_max_column is set).
std::vector<double> fuse_unsupervised(const ScoreMatrix& x, bool include_max_column = false);

nlohmann::ordered_json fusion_model_to_json(const FusionModel& model, std::span<const std::string> columns);
FusionModel fusion_model_from_json(const nlohmann::json& j);

}  // namespace mfad
