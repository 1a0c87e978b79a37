#include "mfad/features.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "mfad/error.hpp"
#include "mfad/rng.hpp"

namespace mfad {

namespace fs = std::filesystem;
using detail::read_le;
using detail::write_le;

namespace {

constexpr char kMagic[4] = {'M', 'F', 'F', '1'};

std::string where(std::string_view origin, std::string_view video, FeatureKind kind, std::size_t record) {
    std::ostringstream s;
    s << origin << ": video '" << video << "' kind " << kind_name(kind) << " record " << record;
    return s.str();
}

// object_id ordering key: absent sorts before any present id.
std::int64_t object_key(const FeatureRecord& r) {
    return r.object_id ? static_cast<std::int64_t>(*r.object_id) : -1;
}

void validate_records(const std::vector<FeatureRecord>& records, FeatureKind kind, std::uint32_t dim,
                      std::uint32_t frame_count, std::string_view origin, std::string_view video) {
    const bool block_kind = kind == FeatureKind::VideoEncoding;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const FeatureRecord& r = records[i];
        if (r.vector.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, where(origin, video, kind, i) + ": vector has dimension " +
                                                          std::to_string(r.vector.size()) + ", expected " +
                                                          std::to_string(dim));
        }
        for (float v : r.vector) {
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::InvalidRecord, where(origin, video, kind, i) + ": non-finite value");
            }
        }
        if (r.block_length == 0 || (!block_kind && r.block_length != 1)) {
            throw Error(ErrorCode::InvalidRecord, where(origin, video, kind, i) + ": invalid block_length " +
                                                      std::to_string(r.block_length));
        }
        if (static_cast<std::uint64_t>(r.frame_index) + r.block_length > frame_count) {
            throw Error(ErrorCode::InvalidRecord, where(origin, video, kind, i) + ": frame range exceeds frame_count " +
                                                      std::to_string(frame_count));
        }
        if (r.object_id && *r.object_id > static_cast<std::uint32_t>(std::numeric_limits<std::int32_t>::max())) {
            throw Error(ErrorCode::InvalidRecord, where(origin, video, kind, i) + ": object_id out of range");
        }
        if (i == 0) continue;
        const FeatureRecord& p = records[i - 1];
        if (block_kind) {
            if (r.frame_index < p.frame_index + p.block_length) {
                throw Error(ErrorCode::UnsortedRecords,
                            where(origin, video, kind, i) + ": block overlaps or precedes previous block");
            }
        } else if (r.frame_index < p.frame_index ||
                   (r.frame_index == p.frame_index && object_key(r) <= object_key(p))) {
            throw Error(ErrorCode::UnsortedRecords,
                        where(origin, video, kind, i) + ": records not sorted by (frame_index, object_id)");
        }
    }
}

void validate_labels(const VideoFeatureSet& v, Split split, std::string_view origin) {
    const std::string id = std::string(origin) + ": video '" + v.video_id + "'";
    if (!v.ground_truth) {
        if (split == Split::Test) throw Error(ErrorCode::InvalidLabels, id + ": test video without ground truth");
        return;
    }
    const auto& gt = *v.ground_truth;
    if (gt.size() != v.frame_count) {
        throw Error(ErrorCode::LabelLengthMismatch, id + ": " + std::to_string(gt.size()) + " labels for " +
                                                        std::to_string(v.frame_count) + " frames");
    }
    for (std::size_t f = 0; f < gt.size(); ++f) {
        if (gt[f] > 1) throw Error(ErrorCode::InvalidLabels, id + ": label at frame " + std::to_string(f) + " not 0/1");
        if (split == Split::Train && gt[f] != 0) {
            throw Error(ErrorCode::InvalidLabels, id + ": positive label at frame " + std::to_string(f) +
                                                      " in a train video");
        }
    }
}

fs::path container_path(const fs::path& root, Split split, const std::string& id, FeatureKind kind) {
    return root / split_name(split) / (id + "." + std::string(kind_name(kind)) + ".mff");
}

fs::path labels_path(const fs::path& root, Split split, const std::string& id) {
    return root / split_name(split) / (id + ".labels");
}

std::vector<FeatureRecord> read_container(const fs::path& path, FeatureKind kind, std::uint32_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    const std::string file = path.string();
    auto truncated = [&](std::uint64_t rec) {
        return Error(ErrorCode::IoError, file + ": truncated at record " + std::to_string(rec));
    };

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorCode::MagicMismatch, file + ": bad magic bytes");
    }
    std::uint8_t tag = 0;
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    if (!read_le(in, tag) || !read_le(in, dim) || !read_le(in, count)) {
        throw Error(ErrorCode::IoError, file + ": truncated header");
    }
    if (tag != static_cast<std::uint8_t>(kind)) {
        throw Error(ErrorCode::MagicMismatch, file + ": kind tag " + std::to_string(tag) + " does not match " +
                                                  std::string(kind_name(kind)));
    }
    if (dim != expected_dim) {
        throw Error(ErrorCode::DimensionMismatch, file + ": header dimension " + std::to_string(dim) +
                                                      ", meta.json declares " + std::to_string(expected_dim));
    }

    std::vector<FeatureRecord> records;
    records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t i = 0; i < count; ++i) {
        FeatureRecord r;
        std::int32_t object = -1;
        if (!read_le(in, r.frame_index) || !read_le(in, r.block_length) || !read_le(in, object)) throw truncated(i);
        if (object < -1) {
            throw Error(ErrorCode::InvalidRecord, file + ": record " + std::to_string(i) + ": negative object_id");
        }
        if (object >= 0) r.object_id = static_cast<std::uint32_t>(object);
        r.vector.resize(dim);
        for (std::uint32_t d = 0; d < dim; ++d) {
            if (!read_le(in, r.vector[d])) throw truncated(i);
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_container(const fs::path& path, FeatureKind kind, std::uint32_t dim,
                     const std::vector<FeatureRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    write_le(out, static_cast<std::uint8_t>(kind));
    write_le(out, dim);
    write_le(out, static_cast<std::uint64_t>(records.size()));
    for (const auto& r : records) {
        write_le(out, r.frame_index);
        write_le(out, r.block_length);
        write_le(out, r.object_id ? static_cast<std::int32_t>(*r.object_id) : std::int32_t{-1});
        for (float v : r.vector) write_le(out, v);
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<std::uint8_t> read_labels(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    std::uint32_t n = 0;
    if (!read_le(in, n)) throw Error(ErrorCode::IoError, path.string() + ": truncated header");
    std::vector<std::uint8_t> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()), n);
    if (in.gcount() != static_cast<std::streamsize>(n)) {
        throw Error(ErrorCode::LabelLengthMismatch, path.string() + ": file holds fewer than " + std::to_string(n) +
                                                        " labels");
    }
    return labels;
}

void write_labels(const fs::path& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    write_le(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace

std::string_view kind_name(FeatureKind k) noexcept {
    switch (k) {
        case FeatureKind::Pose: return "pose";
        case FeatureKind::Velocity: return "velocity";
        case FeatureKind::ImageEncoding: return "image";
        case FeatureKind::VideoEncoding: return "video";
    }
    return "?";
}

std::string_view kind_short_name(FeatureKind k) noexcept {
    switch (k) {
        case FeatureKind::Pose: return "P";
        case FeatureKind::Velocity: return "V";
        case FeatureKind::ImageEncoding: return "IE";
        case FeatureKind::VideoEncoding: return "VE";
    }
    return "?";
}

std::optional<FeatureKind> kind_from_name(std::string_view name) noexcept {
    for (FeatureKind k : kAllKinds) {
        if (name == kind_name(k) || name == kind_short_name(k)) return k;
    }
    return std::nullopt;
}

std::string_view split_name(Split s) noexcept { return s == Split::Train ? "train" : "test"; }

void validate_dataset(const Dataset& dataset, std::string_view origin) {
    if (auto vd = dataset.dims[index_of(FeatureKind::Velocity)]; vd && *vd != kVelocityDim) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(origin) + ": velocity dimension must be 2, got " + std::to_string(*vd));
    }
    std::set<std::string> seen;
    for (Split split : {Split::Train, Split::Test}) {
        for (const auto& v : dataset.videos(split)) {
            if (v.video_id.empty() || v.video_id.find('/') != std::string::npos) {
                throw Error(ErrorCode::InvalidConfig, std::string(origin) + ": invalid video id '" + v.video_id + "'");
            }
            if (!seen.insert(v.video_id).second) {
                throw Error(ErrorCode::InvalidConfig, std::string(origin) + ": duplicate video id '" + v.video_id + "'");
            }
            if (v.frame_count == 0) {
                throw Error(ErrorCode::InvalidRecord, std::string(origin) + ": video '" + v.video_id +
                                                          "' has zero frames");
            }
            for (FeatureKind k : kAllKinds) {
                const auto& dim = dataset.dims[index_of(k)];
                if (!dim) {
                    if (!v.of(k).empty()) {
                        throw Error(ErrorCode::DimensionMismatch, where(origin, v.video_id, k, 0) +
                                                                      ": kind not declared in dataset dims");
                    }
                    continue;
                }
                validate_records(v.of(k), k, *dim, v.frame_count, origin, v.video_id);
            }
            validate_labels(v, split, origin);
        }
    }
}

Dataset load_dataset(const fs::path& root) {
    const fs::path meta_path = root / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw Error(ErrorCode::MissingFile, meta_path.string());

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, meta_path.string() + ": " + e.what());
    }

    Dataset ds;
    try {
        ds.name = meta.at("name").get<std::string>();
        for (const auto& [key, value] : meta.at("dims").items()) {
            auto kind = kind_from_name(key);
            if (!kind) throw Error(ErrorCode::InvalidConfig, meta_path.string() + ": unknown kind '" + key + "'");
            ds.dims[index_of(*kind)] = value.get<std::uint32_t>();
        }
        for (const auto& entry : meta.at("videos")) {
            VideoFeatureSet v;
            v.video_id = entry.at("id").get<std::string>();
            v.frame_count = entry.at("frame_count").get<std::uint32_t>();
            const std::string split = entry.at("split").get<std::string>();
            if (split == "train") {
                ds.train.push_back(std::move(v));
            } else if (split == "test") {
                ds.test.push_back(std::move(v));
            } else {
                throw Error(ErrorCode::InvalidConfig, meta_path.string() + ": unknown split '" + split + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, meta_path.string() + ": " + e.what());
    }

    if (auto vd = ds.dims[index_of(FeatureKind::Velocity)]; vd && *vd != kVelocityDim) {
        throw Error(ErrorCode::DimensionMismatch,
                    meta_path.string() + ": velocity dimension must be 2, got " + std::to_string(*vd));
    }

    for (Split split : {Split::Train, Split::Test}) {
        auto& videos = split == Split::Train ? ds.train : ds.test;
        for (auto& v : videos) {
            for (FeatureKind k : kAllKinds) {
                const auto& dim = ds.dims[index_of(k)];
                if (!dim) continue;
                const fs::path path = container_path(root, split, v.video_id, k);
                v.of(k) = read_container(path, k, *dim);
                validate_records(v.of(k), k, *dim, v.frame_count, path.string(), v.video_id);
            }
            const fs::path lp = labels_path(root, split, v.video_id);
            if (fs::exists(lp)) {
                v.ground_truth = read_labels(lp);
            }
            validate_labels(v, split, lp.string());
        }
    }
    validate_dataset(ds, root.string());
    return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
    validate_dataset(dataset);
    std::error_code ec;
    for (Split split : {Split::Train, Split::Test}) {
        fs::create_directories(root / split_name(split), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + (root / split_name(split)).string() + ": " + ec.message());
    }

    nlohmann::ordered_json meta;
    meta["name"] = dataset.name;
    meta["videos"] = nlohmann::ordered_json::array();
    for (Split split : {Split::Train, Split::Test}) {
        for (const auto& v : dataset.videos(split)) {
            meta["videos"].push_back({{"id", v.video_id}, {"split", split_name(split)}, {"frame_count", v.frame_count}});
        }
    }
    meta["dims"] = nlohmann::ordered_json::object();
    for (FeatureKind k : kAllKinds) {
        if (const auto& d = dataset.dims[index_of(k)]) meta["dims"][std::string(kind_name(k))] = *d;
    }
    {
        const fs::path meta_path = root / "meta.json";
        std::ofstream out(meta_path, std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + meta_path.string() + " for writing");
        out << meta.dump(2) << '\n';
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + meta_path.string());
    }

    for (Split split : {Split::Train, Split::Test}) {
        for (const auto& v : dataset.videos(split)) {
            for (FeatureKind k : kAllKinds) {
                if (const auto& d = dataset.dims[index_of(k)]) {
                    write_container(container_path(root, split, v.video_id, k), k, *d, v.of(k));
                }
            }
            if (v.ground_truth) write_labels(labels_path(root, split, v.video_id), *v.ground_truth);
        }
    }
}

std::vector<FrameRef> frames_of(const Dataset& dataset, Split split) {
    std::vector<FrameRef> out;
    const auto& videos = dataset.videos(split);
    for (std::size_t vi = 0; vi < videos.size(); ++vi) {
        for (std::uint32_t f = 0; f < videos[vi].frame_count; ++f) out.push_back({vi, f});
    }
    return out;
}

std::vector<std::size_t> video_offsets(const Dataset& dataset, Split split) {
    std::vector<std::size_t> offsets{0};
    for (const auto& v : dataset.videos(split)) offsets.push_back(offsets.back() + v.frame_count);
    return offsets;
}

std::uint64_t dataset_hash(const Dataset& dataset) {
    Fnv1a h;
    h.update(dataset.name.data(), dataset.name.size());
    for (const auto& d : dataset.dims) {
        h.update_value(d.value_or(0u));
    }
    for (Split split : {Split::Train, Split::Test}) {
        h.update_value(static_cast<std::uint8_t>(split));
        for (const auto& v : dataset.videos(split)) {
            h.update(v.video_id.data(), v.video_id.size());
            h.update_value(v.frame_count);
            for (const auto& recs : v.records) {
                h.update_value(static_cast<std::uint64_t>(recs.size()));
                for (const auto& r : recs) {
                    h.update_value(r.frame_index);
                    h.update_value(r.block_length);
                    h.update_value(r.object_id ? static_cast<std::int32_t>(*r.object_id) : std::int32_t{-1});
                    h.update(r.vector.data(), r.vector.size() * sizeof(float));
                }
            }
            if (v.ground_truth) h.update(v.ground_truth->data(), v.ground_truth->size());
        }
    }
    return h.digest();
}

}  // namespace mfad
