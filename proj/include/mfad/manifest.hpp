#pragma once

// Split manifests for the HMDB-AD and HMDB-Violence benchmarks, built from a
// local HMDB51 tree (one directory per action class).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mfad {

enum class VideoLabel { Normal, Abnormal };

struct ClassRule {
    std::string name;       // class name used in the manifest
    std::string directory;  // HMDB51 directory holding the clips
    VideoLabel label = VideoLabel::Normal;
    std::uint32_t train_count = 0;
    std::uint32_t test_count = 0;
};

struct FrameTotals {
    std::uint64_t total = 0;
    std::uint64_t train = 0;
    std::uint64_t test = 0;
};

struct SplitSpec {
    std::string name;
    std::vector<ClassRule> classes;
    std::uint64_t seed = 0;
    std::optional<FrameTotals> reference_frames;  // published frame totals
    double frame_tolerance = 0.005;               // relative

    std::uint32_t train_total() const;
    std::uint32_t test_total() const;
};

SplitSpec hmdb_ad_spec(std::uint64_t seed = 0);
SplitSpec hmdb_violence_spec(std::uint64_t seed = 0);
// "hmdb-ad" or "hmdb-violence"; throws InvalidConfig otherwise.
SplitSpec split_spec_by_name(const std::string& name, std::uint64_t seed = 0);

struct ManifestEntry {
    std::string path;  // relative to the HMDB51 root, '/'-separated
    std::string class_name;
    std::string split;  // "train" or "test"
    VideoLabel label = VideoLabel::Normal;

    bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

// Throws ClassMissing naming the first absent class directory and
// InsufficientVideos when a class pool is too small for its rule.
Manifest build_manifest(const std::filesystem::path& hmdb_root, const SplitSpec& spec);

struct AuditReport {
    std::vector<std::string> violations;
    std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> class_counts;  // class -> (train, test)
    std::uint32_t train_videos = 0;
    std::uint32_t test_videos = 0;
    std::optional<FrameTotals> frames;
    std::size_t videos_without_frame_count = 0;

    bool ok() const noexcept { return violations.empty(); }
};

// frame_counts: optional map from manifest path to decoded frame count.
AuditReport audit_manifest(const Manifest& manifest, const SplitSpec& spec,
                           const std::map<std::string, std::uint64_t>* frame_counts = nullptr);

nlohmann::ordered_json audit_report_to_json(const AuditReport& report, const SplitSpec& spec);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);
// CSV with columns path,frames (header optional).
std::map<std::string, std::uint64_t> read_frame_counts(const std::filesystem::path& path);

}  // namespace mfad
