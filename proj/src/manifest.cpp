#include "mfad/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "mfad/error.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace fs = std::filesystem;

namespace {

std::string_view label_name(VideoLabel l) { return l == VideoLabel::Normal ? "normal" : "abnormal"; }

ClassRule normal(std::string name, std::string dir, std::uint32_t train, std::uint32_t test) {
    return {std::move(name), std::move(dir), VideoLabel::Normal, train, test};
}

ClassRule abnormal(std::string name, std::string dir, std::uint32_t test) {
    return {std::move(name), std::move(dir), VideoLabel::Abnormal, 0, test};
}

// Per-class stream derived from the declared seed only.
std::uint64_t class_seed(std::uint64_t seed, const std::string& name) {
    Fnv1a h;
    h.update(name.data(), name.size());
    return splitmix64(seed ^ h.digest());
}

}  // namespace

std::uint32_t SplitSpec::train_total() const {
    std::uint32_t n = 0;
    for (const auto& c : classes) n += c.train_count;
    return n;
}

std::uint32_t SplitSpec::test_total() const {
    std::uint32_t n = 0;
    for (const auto& c : classes) n += c.test_count;
    return n;
}

SplitSpec hmdb_ad_spec(std::uint64_t seed) {
    SplitSpec s;
    s.name = "hmdb-ad";
    s.seed = seed;
    s.classes = {
        normal("run", "run", 207, 25),
        normal("walk", "walk", 473, 75),
        abnormal("cartwheel", "cartwheel", 107),
        abnormal("climb", "climb", 108),
    };
    s.reference_frames = FrameTotals{92585, 58790, 33795};
    return s;
}

SplitSpec hmdb_violence_spec(std::uint64_t seed) {
    SplitSpec s;
    s.name = "hmdb-violence";
    s.seed = seed;
    s.classes = {
        normal("run", "run", 221, 11),
        normal("walk", "walk", 517, 31),
        normal("wave", "wave", 98, 6),
        normal("climb", "climb", 104, 4),
        normal("hug", "hug", 110, 8),
        normal("throw", "throw", 96, 6),
        normal("sit", "sit", 134, 8),
        normal("turn", "turn", 222, 18),
        normal("cartwheel", "cartwheel", 99, 8),
        abnormal("fall", "fall_floor", 136),
        abnormal("fencing", "fencing", 116),
        abnormal("hit", "hit", 127),
        abnormal("punch", "punch", 126),
        abnormal("sword", "sword", 127),
        abnormal("shoot", "shoot_gun", 103),
        abnormal("kick", "kick", 130),
    };
    s.reference_frames = FrameTotals{204471, 140377, 64094};
    return s;
}

SplitSpec split_spec_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "hmdb-ad") return hmdb_ad_spec(seed);
    if (name == "hmdb-violence") return hmdb_violence_spec(seed);
    throw Error(ErrorCode::InvalidConfig, "unknown dataset '" + name + "' (expected hmdb-ad or hmdb-violence)");
}

Manifest build_manifest(const fs::path& hmdb_root, const SplitSpec& spec) {
    Manifest out;
    for (const auto& rule : spec.classes) {
        const fs::path dir = hmdb_root / rule.directory;
        if (!fs::is_directory(dir)) {
            throw Error(ErrorCode::ClassMissing, rule.name + " (expected directory " + dir.string() + ")");
        }
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string fname = e.path().filename().string();
            if (e.is_regular_file() && !fname.empty() && fname.front() != '.') files.push_back(fname);
        }
        std::sort(files.begin(), files.end());

        const std::size_t needed = std::size_t{rule.train_count} + rule.test_count;
        if (files.size() < needed) {
            throw Error(ErrorCode::InsufficientVideos, rule.name + ": " + std::to_string(files.size()) +
                                                           " videos available, " + std::to_string(needed) + " required");
        }
        Rng rng(class_seed(spec.seed, rule.name));
        const auto order = sample_without_replacement(files.size(), needed, rng);
        for (std::size_t i = 0; i < needed; ++i) {
            ManifestEntry e;
            e.path = rule.directory + "/" + files[order[i]];
            e.class_name = rule.name;
            e.split = i < rule.test_count ? "test" : "train";
            e.label = rule.label;
            out.push_back(std::move(e));
        }
    }
    std::sort(out.begin(), out.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
        return std::tie(a.split, a.class_name, a.path) < std::tie(b.split, b.class_name, b.path);
    });
    return out;
}

AuditReport audit_manifest(const Manifest& manifest, const SplitSpec& spec,
                           const std::map<std::string, std::uint64_t>* frame_counts) {
    AuditReport r;
    std::map<std::string, const ClassRule*> rules;
    for (const auto& c : spec.classes) rules[c.name] = &c;

    std::map<std::string, std::string> split_of;
    FrameTotals frames;
    for (const auto& e : manifest) {
        if (e.split != "train" && e.split != "test") {
            r.violations.push_back("unknown split '" + e.split + "' for " + e.path);
            continue;
        }
        const bool train = e.split == "train";
        auto [it, inserted] = split_of.emplace(e.path, e.split);
        if (!inserted) {
            r.violations.push_back(it->second == e.split ? "video listed twice: " + e.path
                                                         : "video in both splits: " + e.path);
        }
        if (train && e.label == VideoLabel::Abnormal) r.violations.push_back("abnormal video in train split: " + e.path);

        auto rule = rules.find(e.class_name);
        if (rule == rules.end()) {
            r.violations.push_back("class not in spec: " + e.class_name + " (" + e.path + ")");
        } else if (rule->second->label != e.label) {
            r.violations.push_back("label of " + e.path + " disagrees with class " + e.class_name);
        }
        auto& counts = r.class_counts[e.class_name];
        (train ? counts.first : counts.second) += 1;
        (train ? r.train_videos : r.test_videos) += 1;

        if (frame_counts) {
            auto fc = frame_counts->find(e.path);
            if (fc == frame_counts->end()) {
                ++r.videos_without_frame_count;
            } else {
                frames.total += fc->second;
                (train ? frames.train : frames.test) += fc->second;
            }
        }
    }

    for (const auto& c : spec.classes) {
        const auto counts = r.class_counts.count(c.name) ? r.class_counts[c.name] : std::pair<std::uint32_t, std::uint32_t>{};
        if (counts.first != c.train_count || counts.second != c.test_count) {
            r.violations.push_back("class " + c.name + ": " + std::to_string(counts.first) + " train / " +
                                   std::to_string(counts.second) + " test, expected " +
                                   std::to_string(c.train_count) + " / " + std::to_string(c.test_count));
        }
    }
    if (r.train_videos != spec.train_total() || r.test_videos != spec.test_total()) {
        r.violations.push_back("split totals " + std::to_string(r.train_videos) + " / " +
                               std::to_string(r.test_videos) + ", expected " + std::to_string(spec.train_total()) +
                               " / " + std::to_string(spec.test_total()));
    }

    if (frame_counts) {
        r.frames = frames;
        if (r.videos_without_frame_count > 0) {
            r.violations.push_back(std::to_string(r.videos_without_frame_count) + " videos have no frame count");
        } else if (spec.reference_frames) {
            const auto& ref = *spec.reference_frames;
            auto check = [&](const char* what, std::uint64_t got, std::uint64_t want) {
                const double rel = std::abs(static_cast<double>(got) - static_cast<double>(want)) / static_cast<double>(want);
                if (rel > spec.frame_tolerance) {
                    r.violations.push_back(std::string(what) + " frames " + std::to_string(got) + " differ from " +
                                           std::to_string(want) + " by more than the tolerance");
                }
            };
            check("total", frames.total, ref.total);
            check("train", frames.train, ref.train);
            check("test", frames.test, ref.test);
        }
    }
    return r;
}

nlohmann::ordered_json audit_report_to_json(const AuditReport& report, const SplitSpec& spec) {
    nlohmann::ordered_json j;
    j["dataset"] = spec.name;
    j["ok"] = report.ok();
    j["violations"] = report.violations;
    j["train_videos"] = report.train_videos;
    j["test_videos"] = report.test_videos;
    j["classes"] = nlohmann::ordered_json::object();
    for (const auto& [name, counts] : report.class_counts) {
        j["classes"][name] = {{"train", counts.first}, {"test", counts.second}};
    }
    if (report.frames) {
        nlohmann::ordered_json f;
        f["total"] = report.frames->total;
        f["train"] = report.frames->train;
        f["test"] = report.frames->test;
        if (spec.reference_frames) {
            f["reference"] = {{"total", spec.reference_frames->total},
                              {"train", spec.reference_frames->train},
                              {"test", spec.reference_frames->test}};
            f["tolerance"] = spec.frame_tolerance;
        }
        f["videos_without_frame_count"] = report.videos_without_frame_count;
        j["frames"] = std::move(f);
    }
    return j;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    for (const auto& e : manifest) {
        nlohmann::ordered_json j;
        j["path"] = e.path;
        j["class"] = e.class_name;
        j["split"] = e.split;
        j["label"] = label_name(e.label);
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestEntry e;
            e.path = j.at("path").get<std::string>();
            e.class_name = j.at("class").get<std::string>();
            e.split = j.at("split").get<std::string>();
            const auto label = j.at("label").get<std::string>();
            if (label != "normal" && label != "abnormal") {
                throw Error(ErrorCode::InvalidLabels, path.string() + ":" + std::to_string(lineno) + ": label '" +
                                                          label + "'");
            }
            e.label = label == "normal" ? VideoLabel::Normal : VideoLabel::Abnormal;
            m.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return m;
}

std::map<std::string, std::uint64_t> read_frame_counts(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    std::map<std::string, std::uint64_t> counts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) {
            throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": expected path,frames");
        }
        const std::string value = line.substr(comma + 1);
        if (lineno == 1 && value == "frames") continue;
        try {
            std::size_t used = 0;
            const auto n = std::stoull(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            counts[line.substr(0, comma)] = n;
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(lineno) + ": bad frame count '" +
                                                value + "'");
        }
    }
    return counts;
}

}  // namespace mfad
