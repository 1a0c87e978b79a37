#pragma once

// Temporal smoothing of fused scores and frame-level ROC-AUC evaluation over
// repeated alpha-fraction trials.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mfad/fusion.hpp"

namespace mfad {

struct SmoothingConfig {
    double sigma = 3.0;                 // in frames
    std::optional<std::uint32_t> radius;  // default ceil(3 sigma)

    std::uint32_t resolved_radius() const;
};

// Normalized Gaussian weights of the in-bounds taps around `position` in a
// sequence of `length`, as (index, weight) pairs.
std::vector<std::pair<std::size_t, double>> smoothing_weights(std::size_t length, std::size_t position,
                                                              const SmoothingConfig& config);

// Discrete Gaussian convolution of one video's scores; edge taps outside the
// sequence are dropped and the rest renormalized. Throws EmptyInput on an
// empty sequence and InvalidConfig on sigma <= 0.
std::vector<double> gaussian_smooth(std::span<const double> scores, const SmoothingConfig& config);

// Smooths each video segment [offsets[v], offsets[v+1]) independently.
std::vector<double> smooth_videos(std::span<const double> scores, std::span<const std::size_t> offsets,
                                  const SmoothingConfig& config);

// Rank-sum AUC with midranks for ties. Throws SingleClassError unless both
// classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean of per-video AUCs over videos containing both classes.
double roc_auc_macro(std::span<const double> scores, std::span<const std::uint8_t> labels,
                     std::span<const std::size_t> offsets);

struct TrialOptions {
    double alpha = 0.02;
    std::uint32_t n_trials = 100;
    std::uint64_t base_seed = 0;
    SmoothingConfig smoothing;
    LogRegHyper hyper;
    bool stratified = false;
    bool macro_auc = false;
    std::size_t workers = 1;
};

struct TrialRecord {
    std::uint32_t index = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::optional<double> auc;  // nullopt when the trial failed
    std::size_t train_frames = 0;
    std::size_t eval_frames = 0;
    std::string failure;
    std::optional<FusionModel> model;  // absent for the unsupervised baseline
};

struct EvalReport {
    double auc = 0.0;  // equals mean_auc
    double mean_auc = 0.0;
    double std_auc = 0.0;  // population standard deviation over successful trials
    std::uint32_t n_trials = 0;
    std::uint32_t n_failed = 0;
    double alpha = 0.0;
    std::vector<TrialRecord> trials;
    // Smoothed fused score of every frame for the first successful trial.
    std::vector<double> timeline;
};

// Called with (trial index, matrix row) for every row the evaluation step reads.
using EvalReadObserver = std::function<void(std::uint32_t, std::size_t)>;

// alpha > 0: per trial, split with trial_seed(base_seed, t), fit the logistic
// regression on the train rows, predict every row, smooth per video and
// score the eval rows only. alpha == 0: a single deterministic trial of the
// unsupervised mean fusion over all rows.
EvalReport run_trials(const ScoreMatrix& x, std::span<const std::uint8_t> labels, std::span<const std::size_t> offsets,
                      const TrialOptions& options, const EvalReadObserver& observer = {});

nlohmann::ordered_json eval_report_to_json(const EvalReport& report, std::span<const std::string> columns);

// Header line and one data row: dataset,config_hash,alpha,mean_auc,std_auc,n_trials,failures
std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& report, const std::string& dataset, std::uint64_t config_hash);

}  // namespace mfad
