#include "mfad/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfad/error.hpp"
#include "mfad/parallel.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    if (!j.is_object()) invalid(ctx + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            invalid(ctx + ": unknown key '" + key + "'");
        }
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string shortest(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

// Re-throws module errors tagged with the pipeline stage.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        std::string msg = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw Error(e.code(), std::string("[") + name + "] " + msg);
    }
}

FrameScores restrict_scores(const FrameScores& scores, const KindMask& kinds) {
    FrameScores out = scores;
    for (FeatureKind k : kAllKinds) {
        const auto i = index_of(k);
        if (kinds[i] && !scores.present[i]) {
            throw Error(ErrorCode::ModelKindMissing, std::string(kind_name(k)) + ": no scores for requested kind");
        }
        if (!kinds[i]) {
            out.present[i] = false;
            out.values[i].clear();
        }
    }
    return out;
}

struct Scored {
    Dataset dataset;
    DensityModels models;
    FrameScores scores;
};

Scored fit_and_score(const ExperimentConfig& config, const KindMask& kinds) {
    Scored s;
    s.dataset = stage("load", [&] { return load_or_generate(config); });
    DensityOptions density = config.density;
    density.workers = config.workers;
    s.models = stage("fit", [&] { return fit_density(s.dataset, kinds, density); });
    s.scores = stage("score", [&] { return score_dataset(s.dataset, s.models, kinds, config.workers); });
    return s;
}

}  // namespace

void validate(const ExperimentConfig& c) {
    if (c.dataset_path.has_value() == c.synth.has_value()) invalid("exactly one of 'dataset' or 'synth' is required");
    if (std::none_of(c.features.begin(), c.features.end(), [](bool b) { return b; })) {
        invalid("feature subset must not be empty");
    }
    if (!(c.fusion.alpha >= 0.0 && c.fusion.alpha <= 0.9)) invalid("alpha must lie in [0, 0.9]");
    if (c.fusion.n_trials < 1) invalid("n_trials must be at least 1");
    if (!(c.fusion.smoothing.sigma > 0.0)) invalid("smoothing sigma must be positive");
    if (!(c.fusion.hyper.learning_rate > 0.0)) invalid("learning_rate must be positive");
    if (c.density.gmm.n_components == 0) invalid("gmm_components must be positive");
    for (auto k : c.density.knn_k) {
        if (k == 0) invalid("knn k must be positive");
    }
    if (c.workers == 0) invalid("workers must be at least 1");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        reject_unknown(j,
                       {"dataset", "synth", "features", "include_max", "density", "fusion", "smoothing", "evaluation",
                        "output_dir", "workers"},
                       "config");
        if (j.contains("dataset") && !j["dataset"].is_null()) c.dataset_path = j["dataset"].get<std::string>();
        if (j.contains("synth") && !j["synth"].is_null()) c.synth = synth_config_from_json(j["synth"]);
        if (j.contains("features")) {
            c.features = {};
            for (const auto& f : j["features"]) {
                auto k = kind_from_name(f.get<std::string>());
                if (!k) invalid("config.features: unknown kind '" + f.get<std::string>() + "'");
                c.features[index_of(*k)] = true;
            }
        }
        c.include_max = j.value("include_max", c.include_max);
        if (j.contains("density")) {
            const auto& d = j["density"];
            reject_unknown(d, {"knn_k", "gmm_components", "gmm_tol", "gmm_max_iter", "gmm_reg_floor", "seed", "aggregation"},
                           "config.density");
            if (d.contains("knn_k")) {
                const auto& kk = d["knn_k"];
                if (kk.is_number()) {
                    c.density.knn_k.fill(kk.get<std::uint32_t>());
                } else {
                    for (const auto& [key, v] : kk.items()) {
                        auto k = kind_from_name(key);
                        if (!k || *k == FeatureKind::Velocity) invalid("config.density.knn_k: bad kind '" + key + "'");
                        c.density.knn_k[index_of(*k)] = v.get<std::uint32_t>();
                    }
                }
            }
            c.density.gmm.n_components = d.value("gmm_components", c.density.gmm.n_components);
            c.density.gmm.tol = d.value("gmm_tol", c.density.gmm.tol);
            c.density.gmm.max_iter = d.value("gmm_max_iter", c.density.gmm.max_iter);
            c.density.gmm.reg_floor = d.value("gmm_reg_floor", c.density.gmm.reg_floor);
            c.density.gmm.seed = d.value("seed", c.density.gmm.seed);
            const auto agg = d.value("aggregation", std::string("max"));
            if (agg == "max") {
                c.density.aggregation = Aggregation::Max;
            } else if (agg == "mean") {
                c.density.aggregation = Aggregation::Mean;
            } else {
                invalid("config.density.aggregation must be 'max' or 'mean'");
            }
        }
        if (j.contains("fusion")) {
            const auto& f = j["fusion"];
            reject_unknown(f, {"alpha", "n_trials", "learning_rate", "max_iter", "tol", "seed", "stratified"},
                           "config.fusion");
            c.fusion.alpha = f.value("alpha", c.fusion.alpha);
            c.fusion.n_trials = f.value("n_trials", c.fusion.n_trials);
            c.fusion.hyper.learning_rate = f.value("learning_rate", c.fusion.hyper.learning_rate);
            c.fusion.hyper.max_iter = f.value("max_iter", c.fusion.hyper.max_iter);
            c.fusion.hyper.tol = f.value("tol", c.fusion.hyper.tol);
            c.fusion.base_seed = f.value("seed", c.fusion.base_seed);
            c.fusion.stratified = f.value("stratified", c.fusion.stratified);
        }
        if (j.contains("smoothing")) {
            const auto& s = j["smoothing"];
            reject_unknown(s, {"sigma", "radius"}, "config.smoothing");
            c.fusion.smoothing.sigma = s.value("sigma", c.fusion.smoothing.sigma);
            if (s.contains("radius") && !s["radius"].is_null()) c.fusion.smoothing.radius = s["radius"].get<std::uint32_t>();
        }
        if (j.contains("evaluation")) {
            const auto& e = j["evaluation"];
            reject_unknown(e, {"macro_auc"}, "config.evaluation");
            c.fusion.macro_auc = e.value("macro_auc", c.fusion.macro_auc);
        }
        if (j.contains("output_dir") && !j["output_dir"].is_null()) c.output_dir = j["output_dir"].get<std::string>();
        c.workers = j.value("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("config: ") + e.what());
    }
    validate(c);
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    try {
        return experiment_config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        invalid(path.string() + ": " + e.what());
    }
}

nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["dataset"] = c.dataset_path ? nlohmann::ordered_json(*c.dataset_path) : nlohmann::ordered_json(nullptr);
    j["synth"] = c.synth ? synth_config_to_json(*c.synth) : nlohmann::ordered_json(nullptr);
    j["features"] = nlohmann::ordered_json::array();
    for (FeatureKind k : kAllKinds) {
        if (c.features[index_of(k)]) j["features"].push_back(kind_short_name(k));
    }
    j["include_max"] = c.include_max;
    nlohmann::ordered_json d;
    d["knn_k"] = {{"P", c.density.knn_k[index_of(FeatureKind::Pose)]},
                  {"IE", c.density.knn_k[index_of(FeatureKind::ImageEncoding)]},
                  {"VE", c.density.knn_k[index_of(FeatureKind::VideoEncoding)]}};
    d["gmm_components"] = c.density.gmm.n_components;
    d["gmm_tol"] = c.density.gmm.tol;
    d["gmm_max_iter"] = c.density.gmm.max_iter;
    d["gmm_reg_floor"] = c.density.gmm.reg_floor;
    d["seed"] = c.density.gmm.seed;
    d["aggregation"] = c.density.aggregation == Aggregation::Max ? "max" : "mean";
    j["density"] = std::move(d);
    nlohmann::ordered_json f;
    f["alpha"] = c.fusion.alpha;
    f["n_trials"] = c.fusion.n_trials;
    f["learning_rate"] = c.fusion.hyper.learning_rate;
    f["max_iter"] = c.fusion.hyper.max_iter;
    f["tol"] = c.fusion.hyper.tol;
    f["seed"] = c.fusion.base_seed;
    f["stratified"] = c.fusion.stratified;
    j["fusion"] = std::move(f);
    j["smoothing"] = {{"sigma", c.fusion.smoothing.sigma}, {"radius", c.fusion.smoothing.resolved_radius()}};
    j["evaluation"] = {{"macro_auc", c.fusion.macro_auc}};
    j["output_dir"] = c.output_dir ? nlohmann::ordered_json(*c.output_dir) : nlohmann::ordered_json(nullptr);
    j["workers"] = c.workers;
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    auto j = experiment_config_to_json(config);
    // Where results land and how many threads compute them do not change them.
    j.erase("output_dir");
    j.erase("workers");
    const std::string s = j.dump();
    Fnv1a h;
    h.update(s.data(), s.size());
    return h.digest();
}

std::string subset_label(const KindMask& kinds, bool include_max) {
    std::string s;
    for (FeatureKind k : kAllKinds) {
        if (!kinds[index_of(k)]) continue;
        if (!s.empty()) s += "+";
        s += kind_short_name(k);
    }
    if (include_max) s += "+max";
    return s;
}

Dataset load_or_generate(const ExperimentConfig& config) {
    if (config.synth) return generate(*config.synth);
    if (!config.dataset_path) invalid("no dataset configured");
    return load_dataset(*config.dataset_path);
}

ExperimentResult evaluate_scores(const FrameScores& scores, const ExperimentConfig& config,
                                 const std::string& dataset_name, std::uint64_t dataset_hash,
                                 const EvalReadObserver& observer) {
    ExperimentResult r;
    r.dataset_name = dataset_name;
    r.dataset_hash = dataset_hash;
    r.config_hash = config_hash(config);
    const FrameScores subset = stage("fuse", [&] { return restrict_scores(scores, config.features); });
    const ScoreMatrix x = stage("fuse", [&] { return build_matrix(subset, config.include_max); });
    r.columns = x.column_names();
    r.report = stage("eval", [&] {
        return run_trials(x, subset.labels, subset.video_offsets, config.fusion, observer);
    });
    return r;
}

nlohmann::ordered_json experiment_report_json(const ExperimentResult& result, const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["config"] = experiment_config_to_json(config);
    j["config_hash"] = hex64(result.config_hash);
    j["dataset"] = {{"name", result.dataset_name}, {"content_hash", hex64(result.dataset_hash)}};
    j["columns"] = result.columns;
    j["result"] = eval_report_to_json(result.report, result.columns);
    return j;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate(config);
    Scored s = fit_and_score(config, config.features);
    const std::uint64_t dhash = dataset_hash(s.dataset);
    ExperimentConfig effective = config;
    effective.fusion.workers = config.workers;
    ExperimentResult r = evaluate_scores(s.scores, effective, s.dataset.name, dhash);

    if (!config.output_dir) return r;
    stage("write", [&] {
        const fs::path out = *config.output_dir;
        std::error_code ec;
        fs::create_directories(out / "timelines", ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());

        write_text(out / "report.json", experiment_report_json(r, config).dump(2) + "\n");
        write_text(out / "report.csv",
                   eval_report_csv_header() + "\n" + eval_report_csv_row(r.report, r.dataset_name, r.config_hash) + "\n");
        save_models(s.models, out / "models.bin");
        save_frame_scores(s.scores, out / "frame_scores.csv");

        for (const auto& t : r.report.trials) {
            if (t.model && t.auc) {
                write_text(out / "fusion_model.json", fusion_model_to_json(*t.model, r.columns).dump(2) + "\n");
                break;
            }
        }
        if (!r.report.timeline.empty()) {
            const auto& sc = s.scores;
            for (std::size_t v = 0; v + 1 < sc.video_offsets.size(); ++v) {
                std::ostringstream csv;
                csv << "frame_index,score,label\n";
                for (std::size_t row = sc.video_offsets[v]; row < sc.video_offsets[v + 1]; ++row) {
                    csv << sc.frames[row].frame << ',' << shortest(r.report.timeline[row]) << ','
                        << static_cast<int>(sc.labels[row]) << '\n';
                }
                write_text(out / "timelines" / (sc.video_ids[v] + ".csv"), csv.str());
            }
        }
        return 0;
    });
    return r;
}

std::vector<AblationRow> run_feature_ablation(const ExperimentConfig& base) {
    validate(base);
    using K = FeatureKind;
    auto mask = [](std::initializer_list<K> ks) {
        KindMask m{};
        for (K k : ks) m[index_of(k)] = true;
        return m;
    };
    const std::vector<std::pair<KindMask, bool>> cells = {
        {mask({K::VideoEncoding}), false},
        {mask({K::Pose, K::Velocity}), false},
        {mask({K::Pose, K::Velocity, K::ImageEncoding}), false},
        {mask({K::Pose, K::Velocity, K::VideoEncoding}), false},
        {kAllKindsMask, false},
        {kAllKindsMask, true},
    };

    const Scored s = fit_and_score(base, kAllKindsMask);
    const std::uint64_t dhash = dataset_hash(s.dataset);
    std::vector<AblationRow> rows(cells.size());
    parallel_for(cells.size(), base.workers, [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.features = cells[i].first;
        cfg.include_max = cells[i].second;
        cfg.fusion.alpha = 0.0;
        cfg.fusion.workers = 1;
        rows[i].configuration = subset_label(cfg.features, cfg.include_max);
        rows[i].kinds = cfg.features;
        rows[i].include_max = cfg.include_max;
        rows[i].result = evaluate_scores(s.scores, cfg, s.dataset.name, dhash);
    });
    return rows;
}

std::vector<double> default_sweep_alphas() { return {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.10, 0.20, 0.50, 0.90}; }

std::vector<SweepRow> run_alpha_sweep(const ExperimentConfig& base, const std::vector<double>& alphas) {
    validate(base);
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 0.9)) invalid("sweep alpha " + std::to_string(a) + " outside [0, 0.9]");
    }
    const Scored s = fit_and_score(base, base.features);
    const std::uint64_t dhash = dataset_hash(s.dataset);

    std::vector<SweepRow> rows(alphas.size() * 2);
    parallel_for(rows.size(), base.workers, [&](std::size_t i) {
        ExperimentConfig cfg = base;
        cfg.include_max = i >= alphas.size();
        cfg.fusion.alpha = alphas[i % alphas.size()];
        cfg.fusion.workers = 1;
        rows[i].alpha = cfg.fusion.alpha;
        rows[i].include_max = cfg.include_max;
        rows[i].result = evaluate_scores(s.scores, cfg, s.dataset.name, dhash);
    });
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "configuration,dataset,config_hash,auc\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.result.report.mean_auc);
        out << r.configuration << ',' << r.result.dataset_name << ',' << hex64(r.result.config_hash) << ',' << buf
            << '\n';
    }
    return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "configuration,dataset,config_hash,alpha,mean_auc,std_auc,n_trials,failures\n";
    char buf[128];
    for (const auto& r : rows) {
        const auto& rep = r.result.report;
        std::snprintf(buf, sizeof(buf), "%.2f,%.6f,%.6f,%u,%u", r.alpha, rep.mean_auc, rep.std_auc, rep.n_trials,
                      rep.n_failed);
        out << (r.include_max ? "alpha+max" : "alpha") << ',' << r.result.dataset_name << ','
            << hex64(r.result.config_hash) << ',' << buf << '\n';
    }
    return out.str();
}

std::string render_timeline_svg(const fs::path& timeline_csv, const std::string& title) {
    std::ifstream in(timeline_csv);
    if (!in) throw Error(ErrorCode::MissingFile, timeline_csv.string());
    std::vector<double> frame, score;
    std::vector<int> label;
    std::string line;
    std::getline(in, line);
    if (line.rfind("frame_index,score,label", 0) != 0) {
        throw Error(ErrorCode::IoError, timeline_csv.string() + ": expected header frame_index,score,label");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',')) {
            throw Error(ErrorCode::IoError, timeline_csv.string() + ": malformed row '" + line + "'");
        }
        try {
            frame.push_back(std::stod(a));
            score.push_back(std::stod(b));
            label.push_back(std::stoi(c));
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, timeline_csv.string() + ": malformed row '" + line + "'");
        }
    }
    if (frame.empty()) throw Error(ErrorCode::EmptyInput, timeline_csv.string() + ": no rows");

    constexpr double W = 800, H = 240, L = 50, R = 10, T = 30, B = 30;
    const double x0 = frame.front();
    const double x1 = std::max(frame.back(), x0 + 1.0);
    auto px = [&](double f) { return L + (f - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double s) { return T + (1.0 - std::clamp(s, 0.0, 1.0)) * (H - T - B); };

    std::ostringstream svg;
    char buf[160];
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < frame.size();) {
        if (!label[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < frame.size() && label[j + 1]) ++j;
        std::snprintf(buf, sizeof(buf), "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#f4b6b6\"/>\n",
                      px(frame[i] - 0.5), T, std::max(px(frame[j] + 0.5) - px(frame[i] - 0.5), 1.0), H - T - B);
        svg << buf;
        i = j + 1;
    }
    svg << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < frame.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", px(frame[i]), py(score[i]));
        svg << buf;
    }
    svg << "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n",
                  L, H - B, W - R, H - B, L, T, L, H - B);
    svg << buf;
    svg << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">";
    for (char ch : title) {
        switch (ch) {
            case '<': svg << "&lt;"; break;
            case '>': svg << "&gt;"; break;
            case '&': svg << "&amp;"; break;
            default: svg << ch;
        }
    }
    svg << "</text>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << T + 4 << "\" font-family=\"sans-serif\" font-size=\"10\" "
        << "text-anchor=\"end\">1</text>\n";
    svg << "<text x=\"" << L - 8 << "\" y=\"" << H - B + 4 << "\" font-family=\"sans-serif\" font-size=\"10\" "
        << "text-anchor=\"end\">0</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace mfad
