// mfad: command-line front end for the scoring pipeline, experiment harness
// and benchmark manifest tools.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfad/error.hpp"
#include "mfad/experiment.hpp"
#include "mfad/manifest.hpp"
#include "mfad/rng.hpp"

namespace fs = std::filesystem;
using namespace mfad;

namespace {

// Flags shared by the pipeline subcommands; unset flags leave the config alone.
struct Overrides {
    std::string config;
    std::string dataset;
    std::string synth;
    std::vector<std::string> features;
    std::optional<bool> include_max;
    std::optional<double> alpha;
    std::optional<std::uint32_t> n_trials;
    std::optional<std::uint64_t> seed;
    std::optional<double> sigma;
    std::optional<std::uint32_t> knn_k;
    std::optional<std::uint32_t> gmm_components;
    std::optional<std::string> aggregation;
    std::optional<std::size_t> workers;
    std::string out_dir;
};

void add_source_flags(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "experiment config JSON");
    app->add_option("--dataset", o.dataset, "dataset directory (overrides config)");
    app->add_option("--synth", o.synth, "synthetic dataset config JSON (overrides config)");
    app->add_option("--features", o.features, "feature subset, e.g. P V IE VE")->delimiter(',');
    app->add_option("--knn-k", o.knn_k, "k for every kNN feature kind");
    app->add_option("--gmm-components", o.gmm_components, "GMM component count");
    app->add_option("--aggregation", o.aggregation, "record-to-frame aggregation")->check(CLI::IsMember({"max", "mean"}));
    app->add_option("--seed", o.seed, "override every seed in the config");
    app->add_option("--workers", o.workers, "worker threads");
}

void add_fusion_flags(CLI::App* app, Overrides& o) {
    app->add_option("--alpha", o.alpha, "fraction of test frames used to train the fusion model");
    app->add_option("--n-trials", o.n_trials, "number of repeated trials");
    app->add_option("--sigma", o.sigma, "Gaussian smoothing sigma in frames");
    app->add_flag("--include-max,!--no-max", o.include_max, "append the per-frame max column");
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

ExperimentConfig resolve_config(const Overrides& o) {
    ExperimentConfig c;
    if (!o.config.empty()) c = load_experiment_config(o.config);
    if (!o.dataset.empty()) {
        c.dataset_path = o.dataset;
        c.synth.reset();
    }
    if (!o.synth.empty()) {
        c.synth = synth_config_from_json(read_json(o.synth));
        c.dataset_path.reset();
    }
    if (!o.features.empty()) {
        c.features = {};
        for (const auto& f : o.features) {
            auto k = kind_from_name(f);
            if (!k) throw Error(ErrorCode::InvalidConfig, "unknown feature kind '" + f + "'");
            c.features[index_of(*k)] = true;
        }
    }
    if (o.include_max) c.include_max = *o.include_max;
    if (o.alpha) c.fusion.alpha = *o.alpha;
    if (o.n_trials) c.fusion.n_trials = *o.n_trials;
    if (o.sigma) c.fusion.smoothing.sigma = *o.sigma;
    if (o.knn_k) c.density.knn_k.fill(*o.knn_k);
    if (o.gmm_components) c.density.gmm.n_components = *o.gmm_components;
    if (o.aggregation) c.density.aggregation = *o.aggregation == "mean" ? Aggregation::Mean : Aggregation::Max;
    if (o.seed) {
        c.fusion.base_seed = *o.seed;
        c.density.gmm.seed = *o.seed;
        if (c.synth) c.synth->seed = *o.seed;
    }
    if (o.workers) c.workers = *o.workers;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    validate(c);
    return c;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

int report_error(const std::string& command, const std::exception& e) {
    std::cerr << "mfad " << command << ": error: " << e.what() << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-feature video anomaly scoring: density models, score fusion and frame-level evaluation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic feature dataset");
    std::string synth_config, synth_out;
    std::optional<double> synth_shift;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--config", synth_config, "synthetic dataset config JSON");
    synth->add_option("--standard-shift", synth_shift,
                      "use the built-in config with this many standard deviations of anomaly shift");
    synth->add_option("--seed", synth_seed, "override the generator seed");
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // fit
    Overrides fit_o;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "fit per-kind density models and calibration on the train split");
    add_source_flags(fit, fit_o);
    fit->add_option("--out", fit_out, "model sidecar file")->required();

    // score
    Overrides score_o;
    std::string score_models, score_out;
    auto* score = app.add_subcommand("score", "score the test split with fitted models");
    add_source_flags(score, score_o);
    score->add_option("--models", score_models, "model sidecar from 'fit'")->required();
    score->add_option("--out", score_out, "frame score CSV")->required();

    // eval
    Overrides eval_o;
    std::string eval_scores;
    auto* eval = app.add_subcommand("eval", "run the full pipeline (or fuse precomputed scores) and report AUC");
    add_source_flags(eval, eval_o);
    add_fusion_flags(eval, eval_o);
    eval->add_option("--scores", eval_scores, "frame score CSV from 'score' (skips fitting)");
    eval->add_option("--out-dir", eval_o.out_dir, "artifact directory");

    // ablate-features
    std::vector<std::string> ablate_configs;
    std::string ablate_out;
    std::optional<std::size_t> ablate_workers;
    std::optional<std::uint64_t> ablate_seed;
    auto* ablate = app.add_subcommand("ablate-features", "feature-subset ablation at alpha = 0");
    ablate->add_option("--config", ablate_configs, "experiment config JSON (repeat for several datasets)")->required();
    ablate->add_option("--seed", ablate_seed, "override every seed in the configs");
    ablate->add_option("--workers", ablate_workers, "worker threads");
    ablate->add_option("--out", ablate_out, "output CSV (stdout when omitted)");

    // sweep-alpha
    Overrides sweep_o;
    std::vector<double> sweep_alphas;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep-alpha", "alpha sweep with and without the max column");
    add_source_flags(sweep, sweep_o);
    sweep->add_option("--n-trials", sweep_o.n_trials, "number of repeated trials per cell");
    sweep->add_option("--sigma", sweep_o.sigma, "Gaussian smoothing sigma in frames");
    sweep->add_option("--alphas", sweep_alphas, "alpha values")->delimiter(',');
    sweep->add_option("--out", sweep_out, "output CSV (stdout when omitted)");

    // manifest build | audit
    auto* manifest = app.add_subcommand("manifest", "HMDB-AD / HMDB-Violence split manifests");
    manifest->require_subcommand(1);
    std::string mb_dataset, mb_root, mb_out;
    std::uint64_t mb_seed = 0;
    std::vector<std::string> mb_class_dirs;
    auto* mbuild = manifest->add_subcommand("build", "build a manifest from an HMDB51 tree");
    mbuild->add_option("--dataset", mb_dataset, "hmdb-ad or hmdb-violence")
        ->required()
        ->check(CLI::IsMember({"hmdb-ad", "hmdb-violence"}));
    mbuild->add_option("--root", mb_root, "HMDB51 root directory")->required();
    mbuild->add_option("--seed", mb_seed, "sampling seed");
    mbuild->add_option("--class-dir", mb_class_dirs, "override a class directory, e.g. sword=sword_exercise");
    mbuild->add_option("--out", mb_out, "manifest JSON-lines file")->required();

    std::string ma_manifest, ma_dataset, ma_counts, ma_out;
    auto* maudit = manifest->add_subcommand("audit", "check a manifest against its split definition");
    maudit->add_option("--manifest", ma_manifest, "manifest JSON-lines file")->required();
    maudit->add_option("--dataset", ma_dataset, "hmdb-ad or hmdb-violence (inferred when omitted)")
        ->check(CLI::IsMember({"hmdb-ad", "hmdb-violence"}));
    maudit->add_option("--frame-counts", ma_counts, "CSV of path,frames");
    maudit->add_option("--out", ma_out, "audit report JSON (stdout when omitted)");

    // plot
    std::string plot_in, plot_out, plot_title;
    auto* plot = app.add_subcommand("plot", "render a score timeline CSV as SVG");
    plot->add_option("--timeline", plot_in, "timeline CSV (frame_index,score,label)")->required();
    plot->add_option("--out", plot_out, "SVG output file")->required();
    plot->add_option("--title", plot_title, "chart title");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        try {
            SynthConfig cfg;
            if (!synth_config.empty()) {
                cfg = synth_config_from_json(read_json(synth_config));
            } else if (synth_shift) {
                cfg = standard_synth_config(*synth_shift);
            } else {
                throw Error(ErrorCode::InvalidConfig, "either --config or --standard-shift is required");
            }
            if (synth_seed) cfg.seed = *synth_seed;
            save_dataset(generate(cfg), synth_out);
        } catch (const std::exception& e) {
            return report_error("synth", e);
        }
        return 0;
    }

    if (fit->parsed()) {
        try {
            const auto cfg = resolve_config(fit_o);
            const Dataset ds = load_or_generate(cfg);
            DensityOptions opts = cfg.density;
            opts.workers = cfg.workers;
            save_models(fit_density(ds, cfg.features, opts), fit_out);
        } catch (const std::exception& e) {
            return report_error("fit", e);
        }
        return 0;
    }

    if (score->parsed()) {
        try {
            const auto cfg = resolve_config(score_o);
            const Dataset ds = load_or_generate(cfg);
            const DensityModels models = load_models(score_models);
            save_frame_scores(score_dataset(ds, models, cfg.features, cfg.workers), score_out);
        } catch (const std::exception& e) {
            return report_error("score", e);
        }
        return 0;
    }

    if (eval->parsed()) {
        try {
            // Precomputed scores carry everything needed; a dataset source is optional.
            if (!eval_scores.empty() && eval_o.config.empty() && eval_o.dataset.empty() && eval_o.synth.empty()) {
                eval_o.dataset = eval_scores;
            }
            const auto cfg = resolve_config(eval_o);
            ExperimentResult result;
            if (!eval_scores.empty()) {
                const FrameScores scores = load_frame_scores(eval_scores);
                ExperimentConfig c = cfg;
                c.fusion.workers = cfg.workers;
                std::ifstream in(eval_scores, std::ios::binary);
                const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                Fnv1a h;
                h.update(bytes.data(), bytes.size());
                result = evaluate_scores(scores, c, fs::path(eval_scores).stem().string(), h.digest());
                if (cfg.output_dir) {
                    write_file(fs::path(*cfg.output_dir) / "report.json",
                               experiment_report_json(result, cfg).dump(2) + "\n");
                    write_file(fs::path(*cfg.output_dir) / "report.csv",
                               eval_report_csv_header() + "\n" +
                                   eval_report_csv_row(result.report, result.dataset_name, result.config_hash) + "\n");
                }
            } else {
                result = run_experiment(cfg);
            }
            std::printf("%s\n%s\n", eval_report_csv_header().c_str(),
                        eval_report_csv_row(result.report, result.dataset_name, result.config_hash).c_str());
        } catch (const std::exception& e) {
            return report_error("eval", e);
        }
        return 0;
    }

    if (ablate->parsed()) {
        try {
            std::string csv;
            for (std::size_t i = 0; i < ablate_configs.size(); ++i) {
                Overrides o;
                o.config = ablate_configs[i];
                o.seed = ablate_seed;
                o.workers = ablate_workers;
                const auto rows = run_feature_ablation(resolve_config(o));
                const std::string table = ablation_csv(rows);
                csv += i == 0 ? table : table.substr(table.find('\n') + 1);
            }
            if (ablate_out.empty()) {
                std::cout << csv;
            } else {
                write_file(ablate_out, csv);
            }
        } catch (const std::exception& e) {
            return report_error("ablate-features", e);
        }
        return 0;
    }

    if (sweep->parsed()) {
        try {
            const auto cfg = resolve_config(sweep_o);
            const auto rows = run_alpha_sweep(cfg, sweep_alphas.empty() ? default_sweep_alphas() : sweep_alphas);
            const std::string csv = sweep_csv(rows);
            if (sweep_out.empty()) {
                std::cout << csv;
            } else {
                write_file(sweep_out, csv);
            }
        } catch (const std::exception& e) {
            return report_error("sweep-alpha", e);
        }
        return 0;
    }

    if (mbuild->parsed()) {
        try {
            SplitSpec spec = split_spec_by_name(mb_dataset, mb_seed);
            for (const auto& mapping : mb_class_dirs) {
                const auto eq = mapping.find('=');
                if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--class-dir expects name=dir");
                const std::string name = mapping.substr(0, eq);
                auto it = std::find_if(spec.classes.begin(), spec.classes.end(),
                                       [&](const ClassRule& r) { return r.name == name; });
                if (it == spec.classes.end()) throw Error(ErrorCode::InvalidConfig, "no class named '" + name + "'");
                it->directory = mapping.substr(eq + 1);
            }
            const Manifest m = build_manifest(mb_root, spec);
            write_manifest(m, mb_out);
            const auto audit = audit_manifest(m, spec);
            std::cerr << spec.name << ": " << audit.train_videos << " train / " << audit.test_videos << " test videos\n";
        } catch (const std::exception& e) {
            return report_error("manifest build", e);
        }
        return 0;
    }

    if (maudit->parsed()) {
        try {
            const Manifest m = read_manifest(ma_manifest);
            std::string name = ma_dataset;
            if (name.empty()) {
                const SplitSpec ad = hmdb_ad_spec();
                const bool all_ad = std::all_of(m.begin(), m.end(), [&](const ManifestEntry& e) {
                    return std::any_of(ad.classes.begin(), ad.classes.end(),
                                       [&](const ClassRule& r) { return r.name == e.class_name; });
                });
                name = all_ad ? "hmdb-ad" : "hmdb-violence";
            }
            const SplitSpec spec = split_spec_by_name(name);
            std::optional<std::map<std::string, std::uint64_t>> counts;
            if (!ma_counts.empty()) counts = read_frame_counts(ma_counts);
            const auto report = audit_manifest(m, spec, counts ? &*counts : nullptr);
            const std::string text = audit_report_to_json(report, spec).dump(2) + "\n";
            if (ma_out.empty()) {
                std::cout << text;
            } else {
                write_file(ma_out, text);
            }
            return report.ok() ? 0 : 2;
        } catch (const std::exception& e) {
            return report_error("manifest audit", e);
        }
    }

    if (plot->parsed()) {
        try {
            write_file(plot_out,
                       render_timeline_svg(plot_in, plot_title.empty() ? fs::path(plot_in).stem().string() : plot_title));
        } catch (const std::exception& e) {
            return report_error("plot", e);
        }
        return 0;
    }
    return 0;
}
