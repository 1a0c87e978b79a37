#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mfad/features.hpp"
#include "mfad/gmm.hpp"
#include "mfad/synth.hpp"

namespace mfad::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("mfad_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

// Pair-counting AUC: positives above negatives plus half the ties.
inline double pair_count_auc(std::span<const double> s, std::span<const std::uint8_t> y) {
    double wins = 0.0;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i]) ++pos; else ++neg;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// k-th smallest Euclidean distance by full sort.
inline double brute_knn(const std::vector<double>& stored, std::uint32_t dim, std::span<const double> x,
                        std::uint32_t k) {
    std::vector<double> d;
    for (std::size_t r = 0; r * dim < stored.size(); ++r) {
        double acc = 0.0;
        for (std::uint32_t c = 0; c < dim; ++c) {
            const double t = stored[r * dim + c] - x[c];
            acc += t * t;
        }
        d.push_back(std::sqrt(acc));
    }
    std::sort(d.begin(), d.end());
    return d[k - 1];
}

// -log sum_c w_c N(x; mu_c, S_c) evaluated directly, no log-space tricks.
inline double direct_gmm_score(const GmmModel& m, const Vec2& x) {
    const double two_pi = 6.283185307179586476925;
    double p = 0.0;
    for (std::size_t c = 0; c < m.weights.size(); ++c) {
        const auto& s = m.covariances[c];
        const double det = s.xx * s.yy - s.xy * s.xy;
        const double dx = x[0] - m.means[c][0];
        const double dy = x[1] - m.means[c][1];
        const double q = (s.yy * dx * dx - 2.0 * s.xy * dx * dy + s.xx * dy * dy) / det;
        p += m.weights[c] * std::exp(-0.5 * q) / (two_pi * std::sqrt(det));
    }
    return -std::log(p);
}

inline FeatureRecord record(std::uint32_t frame, std::vector<float> v, std::optional<std::uint32_t> object = {},
                            std::uint32_t block = 1) {
    FeatureRecord r;
    r.frame_index = frame;
    r.block_length = block;
    r.object_id = object;
    r.vector = std::move(v);
    return r;
}

// Small hand-built dataset: velocity only, one train video and one test video.
inline Dataset tiny_velocity_dataset(std::uint32_t frames = 10) {
    Dataset ds;
    ds.name = "tiny";
    ds.dims[index_of(FeatureKind::Velocity)] = 2;
    for (int s = 0; s < 2; ++s) {
        VideoFeatureSet v;
        v.video_id = s == 0 ? "tr0" : "te0";
        v.frame_count = frames;
        for (std::uint32_t f = 0; f < frames; ++f) {
            v.of(FeatureKind::Velocity).push_back(record(f, {0.1f * static_cast<float>(f), -0.5f + static_cast<float>(s)}));
        }
        if (s == 1) {
            std::vector<std::uint8_t> gt(frames, 0);
            gt[frames / 2] = 1;
            v.ground_truth = gt;
            ds.test.push_back(std::move(v));
        } else {
            ds.train.push_back(std::move(v));
        }
    }
    return ds;
}

// Standard synthetic config shrunk for unit tests.
inline SynthConfig small_synth(double shift, std::uint64_t seed = 3) {
    SynthConfig c = standard_synth_config(shift, seed);
    c.n_train_videos = 3;
    c.n_test_videos = 3;
    c.frames_per_video = 96;
    c.anomaly_segments = {{{16, 48}}, {{48, 80}}, {{0, 32}, {64, 96}}};
    return c;
}

}  // namespace mfad::test
