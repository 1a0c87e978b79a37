#include "mfad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "mfad/error.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

std::size_t draw_component(const std::vector<MixtureComponent>& mixture, Rng& rng) {
    const double u = uniform_unit(rng);
    double acc = 0.0;
    for (std::size_t c = 0; c < mixture.size(); ++c) {
        acc += mixture[c].weight;
        if (u < acc) return c;
    }
    return mixture.size() - 1;
}

std::vector<float> draw_vector(const SynthKindSpec& spec, bool abnormal, Rng& rng) {
    const MixtureComponent& comp = spec.mixture[draw_component(spec.mixture, rng)];
    std::vector<float> v(spec.dim);
    for (std::uint32_t d = 0; d < spec.dim; ++d) {
        double x = comp.mean[d] + std::sqrt(comp.variance[d]) * standard_normal(rng);
        if (abnormal) x += spec.anomaly_shift[d];
        v[d] = static_cast<float>(x);
    }
    return v;
}

bool overlaps(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& segments, std::uint32_t begin,
              std::uint32_t end) {
    return std::any_of(segments.begin(), segments.end(),
                       [&](const auto& s) { return s.first < end && begin < s.second; });
}

std::vector<double> vector_or_scalar(const nlohmann::json& j, std::uint32_t dim, const std::string& what) {
    if (j.is_number()) return std::vector<double>(dim, j.get<double>());
    if (!j.is_array()) invalid(what + ": expected number or array");
    auto v = j.get<std::vector<double>>();
    if (v.size() != dim) {
        invalid(what + ": length " + std::to_string(v.size()) + " does not match dim " + std::to_string(dim));
    }
    return v;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& ctx) {
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            invalid(ctx + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace

void validate(const SynthConfig& config) {
    if (config.n_train_videos == 0 || config.n_test_videos == 0) invalid("video counts must be positive");
    if (config.frames_per_video == 0) invalid("frames_per_video must be positive");
    if (config.objects_per_frame == 0) invalid("objects_per_frame must be positive");
    if (config.block_length == 0) invalid("block_length must be positive");

    bool any = false;
    for (FeatureKind k : kAllKinds) {
        const auto& spec = config.kinds[index_of(k)];
        if (!spec) continue;
        any = true;
        const std::string ctx = std::string(kind_name(k));
        if (spec->dim == 0) invalid(ctx + ": dim must be positive");
        if (k == FeatureKind::Velocity && spec->dim != kVelocityDim) invalid(ctx + ": velocity dim must be 2");
        if (spec->mixture.empty()) invalid(ctx + ": empty mixture");
        double total = 0.0;
        for (const auto& c : spec->mixture) {
            if (!(c.weight >= 0.0)) invalid(ctx + ": negative mixture weight");
            total += c.weight;
            if (c.mean.size() != spec->dim || c.variance.size() != spec->dim) {
                invalid(ctx + ": mixture component dimension mismatch");
            }
            for (double m : c.mean) {
                if (!std::isfinite(m)) invalid(ctx + ": non-finite mean");
            }
            for (double s : c.variance) {
                if (!(s > 0.0) || !std::isfinite(s)) invalid(ctx + ": variances must be strictly positive");
            }
        }
        if (std::abs(total - 1.0) > 1e-9) invalid(ctx + ": mixture weights sum to " + std::to_string(total));
        if (spec->anomaly_shift.size() != spec->dim) invalid(ctx + ": anomaly_shift dimension mismatch");
    }
    if (!any) invalid("no feature kinds configured");

    if (!config.anomaly_segments.empty() && config.anomaly_segments.size() != config.n_test_videos) {
        invalid("anomaly_segments must list one entry per test video");
    }
    for (std::size_t v = 0; v < config.anomaly_segments.size(); ++v) {
        auto segs = config.anomaly_segments[v];
        std::sort(segs.begin(), segs.end());
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto [b, e] = segs[i];
            if (b >= e || e > config.frames_per_video) {
                invalid("test video " + std::to_string(v) + ": segment [" + std::to_string(b) + ", " +
                        std::to_string(e) + ") out of bounds");
            }
            if (i > 0 && segs[i - 1].second > b) invalid("test video " + std::to_string(v) + ": overlapping segments");
        }
    }
}

Dataset generate(const SynthConfig& config) {
    validate(config);
    Rng rng(config.seed);

    Dataset ds;
    ds.name = config.name;
    for (FeatureKind k : kAllKinds) {
        if (const auto& spec = config.kinds[index_of(k)]) ds.dims[index_of(k)] = spec->dim;
    }

    const std::uint32_t frames = config.frames_per_video;
    const std::uint32_t bl = config.block_length;
    auto make_video = [&](const std::string& id, Split split,
                          const std::vector<std::pair<std::uint32_t, std::uint32_t>>& segments) {
        VideoFeatureSet v;
        v.video_id = id;
        v.frame_count = frames;
        std::vector<std::uint8_t> labels(frames, 0);
        for (const auto& [b, e] : segments) std::fill(labels.begin() + b, labels.begin() + e, std::uint8_t{1});

        for (FeatureKind k : kAllKinds) {
            const auto& spec = config.kinds[index_of(k)];
            if (!spec) continue;
            auto& records = v.of(k);
            if (k == FeatureKind::VideoEncoding) {
                for (std::uint32_t start = 0; start + bl <= frames; start += bl) {
                    FeatureRecord r;
                    r.frame_index = start;
                    r.block_length = bl;
                    r.vector = draw_vector(*spec, overlaps(segments, start, start + bl), rng);
                    records.push_back(std::move(r));
                }
                continue;
            }
            for (std::uint32_t f = 0; f < frames; ++f) {
                for (std::uint32_t o = 0; o < config.objects_per_frame; ++o) {
                    FeatureRecord r;
                    r.frame_index = f;
                    if (config.objects_per_frame > 1) r.object_id = o;
                    r.vector = draw_vector(*spec, labels[f] != 0, rng);
                    records.push_back(std::move(r));
                }
            }
        }
        if (split == Split::Test) v.ground_truth = std::move(labels);
        return v;
    };

    static const std::vector<std::pair<std::uint32_t, std::uint32_t>> kNoSegments;
    for (std::uint32_t i = 0; i < config.n_train_videos; ++i) {
        ds.train.push_back(make_video("train_" + std::to_string(i), Split::Train, kNoSegments));
    }
    for (std::uint32_t i = 0; i < config.n_test_videos; ++i) {
        const auto& segs = config.anomaly_segments.empty() ? kNoSegments : config.anomaly_segments[i];
        ds.test.push_back(make_video("test_" + std::to_string(i), Split::Test, segs));
    }
    return ds;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        reject_unknown(j,
                       {"name", "n_train_videos", "n_test_videos", "frames_per_video", "objects_per_frame",
                        "block_length", "seed", "kinds", "anomaly_segments"},
                       "synth config");
        c.name = j.value("name", c.name);
        c.n_train_videos = j.at("n_train_videos").get<std::uint32_t>();
        c.n_test_videos = j.at("n_test_videos").get<std::uint32_t>();
        c.frames_per_video = j.at("frames_per_video").get<std::uint32_t>();
        c.objects_per_frame = j.value("objects_per_frame", c.objects_per_frame);
        c.block_length = j.value("block_length", c.block_length);
        c.seed = j.value("seed", c.seed);
        for (const auto& [key, kj] : j.at("kinds").items()) {
            auto kind = kind_from_name(key);
            if (!kind) invalid("synth config: unknown kind '" + key + "'");
            reject_unknown(kj, {"dim", "mixture", "anomaly_shift"}, "synth kind " + key);
            SynthKindSpec spec;
            spec.dim = kj.at("dim").get<std::uint32_t>();
            for (const auto& cj : kj.at("mixture")) {
                reject_unknown(cj, {"weight", "mean", "variance"}, "synth kind " + key + " mixture");
                MixtureComponent comp;
                comp.weight = cj.value("weight", 1.0);
                comp.mean = vector_or_scalar(cj.at("mean"), spec.dim, key + ".mean");
                comp.variance = vector_or_scalar(cj.at("variance"), spec.dim, key + ".variance");
                spec.mixture.push_back(std::move(comp));
            }
            spec.anomaly_shift = vector_or_scalar(kj.value("anomaly_shift", nlohmann::json(0.0)), spec.dim,
                                                  key + ".anomaly_shift");
            c.kinds[index_of(*kind)] = std::move(spec);
        }
        if (j.contains("anomaly_segments")) {
            for (const auto& vj : j.at("anomaly_segments")) {
                std::vector<std::pair<std::uint32_t, std::uint32_t>> segs;
                for (const auto& sj : vj) {
                    auto pair = sj.get<std::vector<std::uint32_t>>();
                    if (pair.size() != 2) invalid("synth config: segments are [start, end) pairs");
                    segs.emplace_back(pair[0], pair[1]);
                }
                c.anomaly_segments.push_back(std::move(segs));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("synth config: ") + e.what());
    }
    validate(c);
    return c;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["n_train_videos"] = c.n_train_videos;
    j["n_test_videos"] = c.n_test_videos;
    j["frames_per_video"] = c.frames_per_video;
    j["objects_per_frame"] = c.objects_per_frame;
    j["block_length"] = c.block_length;
    j["seed"] = c.seed;
    j["kinds"] = nlohmann::ordered_json::object();
    for (FeatureKind k : kAllKinds) {
        const auto& spec = c.kinds[index_of(k)];
        if (!spec) continue;
        nlohmann::ordered_json kj;
        kj["dim"] = spec->dim;
        kj["mixture"] = nlohmann::ordered_json::array();
        for (const auto& comp : spec->mixture) {
            kj["mixture"].push_back({{"weight", comp.weight}, {"mean", comp.mean}, {"variance", comp.variance}});
        }
        kj["anomaly_shift"] = spec->anomaly_shift;
        j["kinds"][std::string(kind_name(k))] = std::move(kj);
    }
    j["anomaly_segments"] = nlohmann::ordered_json::array();
    for (const auto& segs : c.anomaly_segments) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [b, e] : segs) arr.push_back({b, e});
        j["anomaly_segments"].push_back(std::move(arr));
    }
    return j;
}

SynthConfig standard_synth_config(double shift_sigmas, std::uint64_t seed) {
    SynthConfig c;
    c.name = "synthetic";
    c.n_train_videos = 10;
    c.n_test_videos = 10;
    c.frames_per_video = 200;
    c.objects_per_frame = 1;
    c.seed = seed;

    const std::array<std::uint32_t, kNumKinds> dims = {8, 2, 16, 16};
    for (FeatureKind k : kAllKinds) {
        SynthKindSpec spec;
        spec.dim = dims[index_of(k)];
        for (double centre : {-2.0, 2.0}) {
            MixtureComponent comp;
            comp.weight = 0.5;
            comp.mean.assign(spec.dim, 0.0);
            comp.mean[0] = centre;
            comp.variance.assign(spec.dim, 1.0);
            spec.mixture.push_back(std::move(comp));
        }
        spec.anomaly_shift.assign(spec.dim, shift_sigmas);
        c.kinds[index_of(k)] = std::move(spec);
    }
    // Even-numbered test videos end inside their second segment.
    for (std::uint32_t v = 0; v < c.n_test_videos; ++v) {
        const std::uint32_t a = 16 * (1 + v % 3);
        if (v % 2 == 0) {
            c.anomaly_segments.push_back({{a, a + 48}, {144, c.frames_per_video}});
        } else {
            const std::uint32_t b = 16 * (6 + v % 3);
            c.anomaly_segments.push_back({{a, a + 48}, {b, b + 32}});
        }
    }
    return c;
}

}  // namespace mfad
