#pragma once

// Experiment orchestration: JSON-configured fit -> score -> fuse -> evaluate
// runs, the feature-subset ablation, and the alpha sweep.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfad/density.hpp"
#include "mfad/evaluation.hpp"
#include "mfad/synth.hpp"

namespace mfad {

struct ExperimentConfig {
    std::optional<std::string> dataset_path;
    std::optional<SynthConfig> synth;
    KindMask features = kAllKindsMask;
    bool include_max = true;
    DensityOptions density;
    TrialOptions fusion;
    std::optional<std::string> output_dir;
    std::size_t workers = 1;
};

// Throws InvalidConfig on unknown keys or out-of-range values.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Fully resolved form, every default spelled out.
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

// "P+V+IE+VE" (+ "+max").
std::string subset_label(const KindMask& kinds, bool include_max);

Dataset load_or_generate(const ExperimentConfig& config);

struct ExperimentResult {
    EvalReport report;
    std::vector<std::string> columns;
    std::string dataset_name;
    std::uint64_t dataset_hash = 0;
    std::uint64_t config_hash = 0;
};

// Fuses and evaluates precomputed frame scores restricted to the configured
// feature subset. No files are written.
ExperimentResult evaluate_scores(const FrameScores& scores, const ExperimentConfig& config,
                                 const std::string& dataset_name, std::uint64_t dataset_hash,
                                 const EvalReadObserver& observer = {});

// Full pipeline. When config.output_dir is set, writes report.json,
// report.csv, models.bin, frame_scores.csv, fusion_model.json and
// timelines/<video>.csv there.
ExperimentResult run_experiment(const ExperimentConfig& config);

nlohmann::ordered_json experiment_report_json(const ExperimentResult& result, const ExperimentConfig& config);

struct AblationRow {
    std::string configuration;
    KindMask kinds{};
    bool include_max = false;
    ExperimentResult result;
};

// The six feature subsets VE; P+V; P+V+IE; P+V+VE; P+V+IE+VE; P+V+IE+VE+max
// at alpha = 0.
std::vector<AblationRow> run_feature_ablation(const ExperimentConfig& base);

struct SweepRow {
    double alpha = 0.0;
    bool include_max = false;
    ExperimentResult result;
};

std::vector<double> default_sweep_alphas();

// Every alpha, without and then with the max column.
std::vector<SweepRow> run_alpha_sweep(const ExperimentConfig& base, const std::vector<double>& alphas);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Line chart of score against frame with abnormal ranges shaded, read from a
// timeline CSV (frame_index,score,label).
std::string render_timeline_svg(const std::filesystem::path& timeline_csv, const std::string& title);

}  // namespace mfad
