#include "mfad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "mfad/error.hpp"
#include "mfad/parallel.hpp"
#include "mfad/rng.hpp"

namespace mfad {

std::uint32_t SmoothingConfig::resolved_radius() const {
    if (radius) return std::max<std::uint32_t>(*radius, 1);
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(3.0 * sigma)));
}

std::vector<std::pair<std::size_t, double>> smoothing_weights(std::size_t length, std::size_t position,
                                                              const SmoothingConfig& config) {
    if (!(config.sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "smoothing sigma must be positive");
    const std::size_t r = config.resolved_radius();
    const std::size_t lo = position >= r ? position - r : 0;
    const std::size_t hi = std::min(length - 1, position + r);
    const double denom = 2.0 * config.sigma * config.sigma;
    std::vector<std::pair<std::size_t, double>> w;
    w.reserve(hi - lo + 1);
    double total = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
        const double d = static_cast<double>(j) - static_cast<double>(position);
        const double v = std::exp(-d * d / denom);
        w.emplace_back(j, v);
        total += v;
    }
    for (auto& [_, v] : w) v /= total;
    return w;
}

std::vector<double> gaussian_smooth(std::span<const double> scores, const SmoothingConfig& config) {
    if (scores.empty()) throw Error(ErrorCode::EmptyInput, "cannot smooth an empty sequence");
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double centre = scores[i];
        double acc = 0.0;
        double lo = centre, hi = centre;
        // Accumulating deviations from the centre keeps constant runs exact.
        for (const auto& [j, w] : smoothing_weights(scores.size(), i, config)) {
            acc += w * (scores[j] - centre);
            lo = std::min(lo, scores[j]);
            hi = std::max(hi, scores[j]);
        }
        out[i] = std::clamp(centre + acc, lo, hi);
    }
    return out;
}

std::vector<double> smooth_videos(std::span<const double> scores, std::span<const std::size_t> offsets,
                                  const SmoothingConfig& config) {
    std::vector<double> out(scores.size());
    for (std::size_t v = 0; v + 1 < offsets.size(); ++v) {
        const std::size_t b = offsets[v], e = offsets[v + 1];
        if (b == e) continue;
        const auto s = gaussian_smooth(scores.subspan(b, e - b), config);
        std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(b));
    }
    return out;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorCode::SingleClassError, "AUC needs both classes (" + std::to_string(n_pos) + " positive, " +
                                                     std::to_string(n_neg) + " negative)");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of (doubled) midranks of the positives; ranks start at 1.
    std::uint64_t rank_sum_x2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t midrank_x2 = (i + 1) + j;  // (i+1 + j) / 2 is the average of ranks i+1..j
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]]) rank_sum_x2 += midrank_x2;
        }
        i = j;
    }
    const double u = static_cast<double>(rank_sum_x2) / 2.0 - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc_macro(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     std::span<const std::size_t> offsets) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t v = 0; v + 1 < offsets.size(); ++v) {
        const std::size_t b = offsets[v], e = offsets[v + 1];
        const auto l = labels.subspan(b, e - b);
        const auto pos = std::count_if(l.begin(), l.end(), [](std::uint8_t x) { return x != 0; });
        if (pos == 0 || static_cast<std::size_t>(pos) == l.size()) continue;
        total += roc_auc(scores.subspan(b, e - b), l);
        ++used;
    }
    if (used == 0) throw Error(ErrorCode::SingleClassError, "no video contains both classes");
    return total / static_cast<double>(used);
}

EvalReport run_trials(const ScoreMatrix& x, std::span<const std::uint8_t> labels, std::span<const std::size_t> offsets,
                      const TrialOptions& options, const EvalReadObserver& observer) {
    if (labels.size() != x.rows()) throw Error(ErrorCode::ShapeMismatch, "labels do not align with matrix rows");
    if (offsets.empty() || offsets.back() != x.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "video offsets do not cover the matrix rows");
    }
    if (options.n_trials == 0) throw Error(ErrorCode::InvalidConfig, "n_trials must be at least 1");

    const bool unsupervised = options.alpha == 0.0;
    const std::uint32_t trials = unsupervised ? 1 : options.n_trials;

    EvalReport report;
    report.alpha = options.alpha;
    report.n_trials = trials;
    report.trials.resize(trials);
    std::vector<std::vector<double>> smoothed(trials);

    parallel_for(trials, options.workers, [&](std::size_t t) {
        TrialRecord& rec = report.trials[t];
        rec.index = static_cast<std::uint32_t>(t);
        rec.alpha = options.alpha;
        rec.seed = unsupervised ? options.base_seed : trial_seed(options.base_seed, t);

        const SplitSample split = options.stratified ? sample_split_stratified(labels, options.alpha, rec.seed)
                                                     : sample_split(x.rows(), options.alpha, rec.seed);
        rec.train_frames = split.train_indices.size();
        rec.eval_frames = split.eval_indices.size();

        std::vector<double> fused;
        if (unsupervised) {
            fused = fuse_unsupervised(x);
        } else {
            LogRegHyper hyper = options.hyper;
            hyper.seed = rec.seed;
            FusionModel model = train_logreg(x, split.train_indices, labels, hyper);
            model.alpha = options.alpha;
            const bool single_class = model.single_class;
            fused = predict(model, x);
            rec.model = std::move(model);
            if (single_class) {
                rec.failure = Error(ErrorCode::SingleClassError, "training sample holds a single class").what();
                return;
            }
        }
        auto scores = smooth_videos(fused, offsets, options.smoothing);

        // Evaluation sees only the eval rows, gathered here.
        std::vector<double> eval_scores;
        std::vector<std::uint8_t> eval_labels;
        std::vector<std::size_t> eval_offsets{0};
        eval_scores.reserve(split.eval_indices.size());
        eval_labels.reserve(split.eval_indices.size());
        std::size_t video = 0;
        for (std::size_t row : split.eval_indices) {
            if (observer) observer(rec.index, row);
            while (row >= offsets[video + 1]) {
                ++video;
                eval_offsets.push_back(eval_scores.size());
            }
            eval_scores.push_back(scores[row]);
            eval_labels.push_back(labels[row]);
        }
        while (eval_offsets.size() < offsets.size()) eval_offsets.push_back(eval_scores.size());

        try {
            rec.auc = options.macro_auc ? roc_auc_macro(eval_scores, eval_labels, eval_offsets)
                                        : roc_auc(eval_scores, eval_labels);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingleClassError) throw;
            rec.failure = e.what();
        }
        smoothed[t] = std::move(scores);
    });

    std::vector<double> aucs;
    for (std::size_t t = 0; t < trials; ++t) {
        if (report.trials[t].auc) {
            aucs.push_back(*report.trials[t].auc);
            if (report.timeline.empty()) report.timeline = smoothed[t];
        } else {
            ++report.n_failed;
        }
    }
    if (!aucs.empty()) {
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        double var = 0.0;
        for (double a : aucs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(aucs.size());
        report.mean_auc = mean;
        report.std_auc = std::sqrt(var);
        report.auc = mean;
    } else {
        report.mean_auc = report.std_auc = report.auc = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

nlohmann::ordered_json eval_report_to_json(const EvalReport& report, std::span<const std::string> columns) {
    nlohmann::ordered_json j;
    j["auc"] = report.auc;
    j["mean_auc"] = report.mean_auc;
    j["std_auc"] = report.std_auc;
    j["alpha"] = report.alpha;
    j["n_trials"] = report.n_trials;
    j["n_failed"] = report.n_failed;
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : report.trials) {
        nlohmann::ordered_json tj;
        tj["index"] = t.index;
        tj["seed"] = t.seed;
        tj["alpha"] = t.alpha;
        tj["auc"] = t.auc ? nlohmann::ordered_json(*t.auc) : nlohmann::ordered_json(nullptr);
        tj["train_frames"] = t.train_frames;
        tj["eval_frames"] = t.eval_frames;
        if (!t.failure.empty()) tj["failure"] = t.failure;
        if (t.model) tj["model"] = fusion_model_to_json(*t.model, columns);
        j["trials"].push_back(std::move(tj));
    }
    return j;
}

std::string eval_report_csv_header() { return "dataset,config_hash,alpha,mean_auc,std_auc,n_trials,failures"; }

std::string eval_report_csv_row(const EvalReport& report, const std::string& dataset, std::uint64_t config_hash) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), ",%016llx,%.4f,%.6f,%.6f,%u,%u", static_cast<unsigned long long>(config_hash),
                  report.alpha, report.mean_auc, report.std_auc, report.n_trials, report.n_failed);
    return dataset + buf;
}

}  // namespace mfad
