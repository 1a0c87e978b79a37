#include "mfad/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfad/error.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace {

double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double linear(std::span<const double> w, double b, std::span<const double> row) noexcept {
    double z = b;
    for (std::size_t c = 0; c < w.size(); ++c) z += w[c] * row[c];
    return z;
}

void check_width(std::span<const double> w, const ScoreMatrix& x) {
    if (w.size() != x.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "model has " + std::to_string(w.size()) + " weights, matrix has " +
                                                  std::to_string(x.cols()) + " columns");
    }
}

std::size_t train_count(std::size_t n, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidAlpha, "alpha must lie in [0, 1), got " + std::to_string(alpha));
    }
    if (n == 0) throw Error(ErrorCode::NoSamples, "cannot split zero frames");
    return static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n)));
}

SplitSample complete(std::vector<std::size_t> train, std::size_t n, double alpha, std::uint64_t seed) {
    std::sort(train.begin(), train.end());
    SplitSample s;
    s.alpha = alpha;
    s.seed = seed;
    std::vector<bool> in_train(n, false);
    for (std::size_t i : train) in_train[i] = true;
    s.eval_indices.reserve(n - train.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_train[i]) s.eval_indices.push_back(i);
    }
    s.train_indices = std::move(train);
    return s;
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t rows, std::vector<std::string> base_names, bool has_max)
    : rows_(rows), names_(std::move(base_names)), has_max_(has_max) {
    if (has_max_) names_.emplace_back("max");
    data_.assign(rows_ * names_.size(), 0.0);
}

void ScoreMatrix::refresh_max() {
    if (!has_max_) return;
    const std::size_t base = base_columns();
    for (std::size_t r = 0; r < rows_; ++r) {
        auto row = this->row(r);
        row[base] = *std::max_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(base));
    }
}

ScoreMatrix build_matrix(const FrameScores& scores, bool include_max) {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;
    for (FeatureKind k : kAllKinds) {
        if (!scores.present[index_of(k)]) continue;
        names.emplace_back(kind_short_name(k));
        kinds.push_back(k);
    }
    if (kinds.empty()) throw Error(ErrorCode::ShapeMismatch, "score matrix needs at least one feature column");
    ScoreMatrix m(scores.rows(), std::move(names), include_max);
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        for (std::size_t c = 0; c < kinds.size(); ++c) m(r, c) = scores.values[index_of(kinds[c])][r];
    }
    m.refresh_max();
    return m;
}

SplitSample sample_split(std::size_t n_frames, double alpha, std::uint64_t seed) {
    const std::size_t count = train_count(n_frames, alpha);
    Rng rng(seed);
    return complete(sample_without_replacement(n_frames, count, rng), n_frames, alpha, seed);
}

SplitSample sample_split_stratified(std::span<const std::uint8_t> labels, double alpha, std::uint64_t seed) {
    const std::size_t n = labels.size();
    const std::size_t total = train_count(n, alpha);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
    std::size_t from_pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) * static_cast<double>(pos.size()) / static_cast<double>(n)));
    from_pos = std::min(from_pos, pos.size());
    const std::size_t from_neg = std::min(total - from_pos, neg.size());
    from_pos = total - from_neg;

    Rng rng(seed);
    std::vector<std::size_t> train;
    for (std::size_t i : sample_without_replacement(pos.size(), from_pos, rng)) train.push_back(pos[i]);
    for (std::size_t i : sample_without_replacement(neg.size(), from_neg, rng)) train.push_back(neg[i]);
    return complete(std::move(train), n, alpha, seed);
}

double sigmoid(double t) noexcept {
    // Kept inside the open interval even where the exact value rounds to 0 or 1.
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    if (t >= 0.0) return std::min(1.0 / (1.0 + std::exp(-t)), hi);
    const double e = std::exp(t);
    return std::max(e / (1.0 + e), lo);
}

double logreg_loss(std::span<const double> weights, double bias, const ScoreMatrix& x,
                   std::span<const std::size_t> rows, std::span<const std::uint8_t> labels) {
    check_width(weights, x);
    double total = 0.0;
    for (std::size_t r : rows) {
        const double z = linear(weights, bias, x.row(r));
        // -y log sigma(z) - (1 - y) log(1 - sigma(z)) = softplus(z) - y z
        total += softplus(z) - (labels[r] ? z : 0.0);
    }
    return total / static_cast<double>(rows.size());
}

std::vector<double> logreg_gradient(std::span<const double> weights, double bias, const ScoreMatrix& x,
                                    std::span<const std::size_t> rows, std::span<const std::uint8_t> labels) {
    check_width(weights, x);
    std::vector<double> g(weights.size() + 1, 0.0);
    for (std::size_t r : rows) {
        const auto row = x.row(r);
        const double residual = sigmoid(linear(weights, bias, row)) - (labels[r] ? 1.0 : 0.0);
        for (std::size_t c = 0; c < weights.size(); ++c) g[c] += residual * row[c];
        g.back() += residual;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& v : g) v *= inv;
    return g;
}

FusionModel train_logreg(const ScoreMatrix& x, std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                         const LogRegHyper& hyper) {
    if (rows.empty()) throw Error(ErrorCode::NoSamples, "logistic regression needs at least one training frame");
    if (labels.size() < x.rows()) throw Error(ErrorCode::ShapeMismatch, "fewer labels than matrix rows");

    FusionModel m;
    m.weights.assign(x.cols(), 0.0);
    m.seed = hyper.seed;
    m.learning_rate = hyper.learning_rate;
    std::size_t positives = 0;
    for (std::size_t r : rows) {
        if (labels[r] > 1) throw Error(ErrorCode::InvalidLabels, "labels must be 0 or 1");
        positives += labels[r];
    }
    m.single_class = positives == 0 || positives == rows.size();

    for (std::uint32_t it = 0; it < hyper.max_iter; ++it) {
        m.loss_trace.push_back(logreg_loss(m.weights, m.bias, x, rows, labels));
        const auto g = logreg_gradient(m.weights, m.bias, x, rows, labels);
        double norm2 = 0.0;
        for (double v : g) norm2 += v * v;
        if (std::sqrt(norm2) < hyper.tol) {
            m.loss_trace.pop_back();
            break;
        }
        for (std::size_t c = 0; c < m.weights.size(); ++c) m.weights[c] -= hyper.learning_rate * g[c];
        m.bias -= hyper.learning_rate * g.back();
        ++m.iterations;
    }
    m.final_loss = logreg_loss(m.weights, m.bias, x, rows, labels);
    m.loss_trace.push_back(m.final_loss);
    return m;
}

std::vector<double> predict(const FusionModel& model, const ScoreMatrix& x) {
    check_width(model.weights, x);
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = sigmoid(linear(model.weights, model.bias, x.row(r)));
    return out;
}

std::vector<double> fuse_unsupervised(const ScoreMatrix& x, bool include_max_column) {
    const std::size_t used = include_max_column ? x.cols() : x.base_columns();
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < used; ++c) s += row[c];
        out[r] = s / static_cast<double>(used);
    }
    return out;
}

nlohmann::ordered_json fusion_model_to_json(const FusionModel& model, std::span<const std::string> columns) {
    nlohmann::ordered_json j;
    j["columns"] = std::vector<std::string>(columns.begin(), columns.end());
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    j["alpha"] = model.alpha;
    j["seed"] = model.seed;
    j["learning_rate"] = model.learning_rate;
    j["iterations"] = model.iterations;
    j["final_loss"] = model.final_loss;
    j["single_class_warning"] = model.single_class;
    return j;
}

FusionModel fusion_model_from_json(const nlohmann::json& j) {
    FusionModel m;
    try {
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.alpha = j.value("alpha", 0.0);
        m.seed = j.value("seed", std::uint64_t{0});
        m.learning_rate = j.value("learning_rate", 0.0);
        m.iterations = j.value("iterations", 0u);
        m.final_loss = j.value("final_loss", 0.0);
        m.single_class = j.value("single_class_warning", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("fusion model: ") + e.what());
    }
    return m;
}

}  // namespace mfad
