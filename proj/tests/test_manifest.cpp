#include <doctest.h>

#include <map>
#include <set>

#include "mfad/error.hpp"
#include "mfad/manifest.hpp"
#include "support.hpp"

using namespace mfad;

namespace {

// One directory per class holding `extra` more clips than the rule needs.
void mock_tree(const std::filesystem::path& root, const SplitSpec& spec, std::uint32_t extra) {
    for (const auto& c : spec.classes) {
        const auto dir = root / c.directory;
        std::filesystem::create_directories(dir);
        const std::uint32_t n = c.train_count + c.test_count + extra;
        for (std::uint32_t i = 0; i < n; ++i) test::write_bytes(dir / (c.directory + "_clip" + std::to_string(i) + ".avi"), "");
    }
}

std::map<std::string, std::pair<int, int>> count_by_class(const Manifest& m) {
    std::map<std::string, std::pair<int, int>> out;
    for (const auto& e : m) (e.split == "train" ? out[e.class_name].first : out[e.class_name].second) += 1;
    return out;
}

}  // namespace

TEST_CASE("split specs carry the published counts") {
    const auto ad = hmdb_ad_spec();
    CHECK(ad.train_total() == 680);
    CHECK(ad.test_total() == 315);
    CHECK(ad.reference_frames->total == 92585);
    const auto vio = hmdb_violence_spec();
    CHECK(vio.train_total() == 1601);
    CHECK(vio.test_total() == 965);
    CHECK(vio.reference_frames->total == 204471);
    CHECK_THROWS_AS(split_spec_by_name("ucf"), Error);
}

TEST_CASE("hmdb-ad manifest from a mock tree") {
    test::TempDir dir("hmdb");
    const SplitSpec spec = hmdb_ad_spec(0);
    mock_tree(dir.path(), spec, 0);
    const Manifest m = build_manifest(dir.path(), spec);

    const auto counts = count_by_class(m);
    CHECK(counts.at("run") == std::pair{207, 25});
    CHECK(counts.at("walk") == std::pair{473, 75});
    CHECK(counts.at("cartwheel") == std::pair{0, 107});
    CHECK(counts.at("climb") == std::pair{0, 108});
    CHECK(m.size() == 995);
    for (const auto& e : m) {
        if (e.class_name == "cartwheel" || e.class_name == "climb") CHECK(e.label == VideoLabel::Abnormal);
        else CHECK(e.label == VideoLabel::Normal);
    }
    CHECK(audit_manifest(m, spec).ok());
    CHECK(std::is_sorted(m.begin(), m.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
        return std::tie(a.split, a.class_name, a.path) < std::tie(b.split, b.class_name, b.path);
    }));
}

TEST_CASE("hmdb-violence manifest with larger class pools") {
    test::TempDir dir("hmdbv");
    const SplitSpec spec = hmdb_violence_spec(5);
    mock_tree(dir.path(), spec, 13);
    const Manifest m = build_manifest(dir.path(), spec);
    const auto counts = count_by_class(m);
    for (const auto& c : spec.classes) {
        CHECK(counts.at(c.name) == std::pair{int(c.train_count), int(c.test_count)});
    }
    const auto report = audit_manifest(m, spec);
    CHECK(report.ok());
    CHECK(report.train_videos == 1601);
    CHECK(report.test_videos == 965);

    std::set<std::string> paths;
    for (const auto& e : m) paths.insert(e.path);
    CHECK(paths.size() == m.size());
    CHECK(m[0].path.rfind("cartwheel/", 0) == 0);
}

TEST_CASE("same seed reproduces the manifest, a new seed changes it") {
    test::TempDir dir("det");
    const SplitSpec spec = hmdb_ad_spec(1);
    mock_tree(dir.path(), spec, 40);
    const Manifest a = build_manifest(dir.path(), spec);
    CHECK(build_manifest(dir.path(), spec) == a);
    CHECK_FALSE(build_manifest(dir.path(), hmdb_ad_spec(2)) == a);

    test::write_bytes(dir / "m.jsonl", "");
    write_manifest(a, dir / "m.jsonl");
    CHECK(read_manifest(dir / "m.jsonl") == a);
}

TEST_CASE("missing and undersized classes") {
    test::TempDir dir("missing");
    const SplitSpec spec = hmdb_ad_spec();
    mock_tree(dir.path(), spec, 0);
    std::filesystem::remove_all(dir / "climb");
    try {
        build_manifest(dir.path(), spec);
        FAIL("expected ClassMissing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ClassMissing);
        CHECK(std::string(e.what()).find("climb") != std::string::npos);
    }
    mock_tree(dir.path(), spec, 0);
    std::filesystem::remove(dir / "run" / "run_clip0.avi");
    try {
        build_manifest(dir.path(), spec);
        FAIL("expected InsufficientVideos");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientVideos);
    }
}

TEST_CASE("audit flags violations") {
    test::TempDir dir("audit");
    const SplitSpec spec = hmdb_ad_spec();
    mock_tree(dir.path(), spec, 0);
    Manifest m = build_manifest(dir.path(), spec);

    SUBCASE("abnormal video moved to train") {
        auto it = std::find_if(m.begin(), m.end(), [](const auto& e) { return e.label == VideoLabel::Abnormal; });
        it->split = "train";
        const auto r = audit_manifest(m, spec);
        CHECK_FALSE(r.ok());
        CHECK(std::any_of(r.violations.begin(), r.violations.end(), [](const std::string& v) {
            return v.find("abnormal video in train split") != std::string::npos;
        }));
    }
    SUBCASE("duplicate across splits") {
        ManifestEntry e = m.front();
        e.split = e.split == "train" ? "test" : "train";
        m.push_back(e);
        CHECK_FALSE(audit_manifest(m, spec).ok());
    }
    SUBCASE("missing video") {
        m.pop_back();
        CHECK_FALSE(audit_manifest(m, spec).ok());
    }
}

TEST_CASE("frame totals are compared within tolerance") {
    test::TempDir dir("frames");
    const SplitSpec spec = hmdb_ad_spec();
    mock_tree(dir.path(), spec, 0);
    const Manifest m = build_manifest(dir.path(), spec);

    // Spread the published totals over the videos of each split.
    std::map<std::string, std::uint64_t> frames;
    std::size_t train_seen = 0, test_seen = 0;
    for (const auto& e : m) {
        const bool train = e.split == "train";
        const std::uint64_t total = train ? 58790 : 33795;
        const std::size_t n = train ? 680 : 315;
        std::size_t& seen = train ? train_seen : test_seen;
        frames[e.path] = total / n + (seen < total % n ? 1 : 0);
        ++seen;
    }
    const auto ok = audit_manifest(m, spec, &frames);
    CHECK(ok.ok());
    CHECK(ok.frames->total == 92585);

    frames[m.front().path] += 2000;
    CHECK_FALSE(audit_manifest(m, spec, &frames).ok());

    std::string csv = "path,frames\n";
    for (const auto& [p, n] : frames) csv += p + "," + std::to_string(n) + "\n";
    test::write_bytes(dir / "fc.csv", csv);
    CHECK(read_frame_counts(dir / "fc.csv") == frames);
}
