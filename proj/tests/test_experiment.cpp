#include <doctest.h>

#include <sstream>

#include "mfad/error.hpp"
#include "mfad/experiment.hpp"
#include "support.hpp"

using namespace mfad;

namespace {

ExperimentConfig synth_experiment(SynthConfig s) {
    ExperimentConfig c;
    c.synth = std::move(s);
    c.fusion.n_trials = 10;
    return c;
}

SynthConfig with_shifts(SynthConfig c, std::array<double, kNumKinds> shift) {
    for (FeatureKind k : kAllKinds) {
        auto& spec = *c.kinds[index_of(k)];
        spec.anomaly_shift.assign(spec.dim, shift[index_of(k)]);
    }
    return c;
}

std::size_t count_lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("signal only in video encodings favours the VE subset") {
    ExperimentConfig c = synth_experiment(with_shifts(test::small_synth(0.0), {0, 0, 0, 4}));
    c.fusion.alpha = 0.0;
    c.features = {false, false, false, true};
    c.include_max = false;
    const double ve = run_experiment(c).report.mean_auc;
    c.features = {true, true, false, false};
    const double pv = run_experiment(c).report.mean_auc;
    CHECK(ve > pv);
    CHECK(ve > 0.9);
}

TEST_CASE("full protocol shape with the max column") {
    ExperimentConfig c = synth_experiment(test::small_synth(10.0));
    c.fusion.n_trials = 100;
    const auto r = run_experiment(c);
    CHECK(r.report.trials.size() == 100);
    CHECK(r.report.n_trials == 100);
    CHECK(r.columns == std::vector<std::string>{"P", "V", "IE", "VE", "max"});
    CHECK(r.report.mean_auc >= 0.99);
}

TEST_CASE("ablation has six rows in the fixed order") {
    const ExperimentConfig c = synth_experiment(test::small_synth(1.0));
    const auto rows = run_feature_ablation(c);
    REQUIRE(rows.size() == 6);
    const std::vector<std::string> want = {"VE", "P+V", "P+V+IE", "P+V+VE", "P+V+IE+VE", "P+V+IE+VE+max"};
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(rows[i].configuration == want[i]);
        CHECK(rows[i].result.report.std_auc == 0.0);
    }
    CHECK(count_lines(ablation_csv(rows)) == 7);
    const double full = rows[4].result.report.mean_auc;
    for (std::size_t i = 0; i < 4; ++i) CHECK(full >= rows[i].result.report.mean_auc - 0.02);

    ExperimentConfig cell = c;
    cell.features = rows[3].kinds;
    cell.include_max = false;
    cell.fusion.alpha = 0.0;
    CHECK(run_experiment(cell).report.mean_auc == rows[3].result.report.mean_auc);
}

TEST_CASE("VE-only without VE signal is near chance") {
    SynthConfig s = with_shifts(standard_synth_config(0.0, 7), {10, 10, 10, 0});
    s.n_test_videos = 40;
    s.anomaly_segments.clear();
    for (std::uint32_t v = 0; v < 40; ++v) {
        const std::uint32_t a = 16 * (1 + v % 3);
        s.anomaly_segments.push_back({{a, a + 48}, {16 * (7 + v % 4), v % 2 ? 16 * (9 + v % 4) : 200}});
    }
    const auto rows = run_feature_ablation(synth_experiment(s));
    CHECK(std::abs(rows[0].result.report.mean_auc - 0.5) < 0.05);
}

TEST_CASE("alpha sweep covers every alpha with and without max") {
    const ExperimentConfig c = synth_experiment(test::small_synth(10.0));
    const std::vector<double> alphas = {0.0, 0.02, 0.1};
    const auto rows = run_alpha_sweep(c, alphas);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(rows[i].alpha == alphas[i % 3]);
        CHECK(rows[i].include_max == (i >= 3));
    }
    CHECK(rows[0].result.report.std_auc == 0.0);
    CHECK(rows[3].result.report.std_auc == 0.0);
    CHECK(count_lines(sweep_csv(rows)) == 7);
    CHECK(default_sweep_alphas().size() == 10);
    CHECK_THROWS_AS(run_alpha_sweep(c, {0.95}), Error);
}

TEST_CASE("config parsing is strict") {
    const auto j = nlohmann::json::parse(R"({"synth": null, "dataset": "x", "fusion": {"alpha": 0.05}})");
    const ExperimentConfig c = experiment_config_from_json(j);
    CHECK(c.fusion.alpha == 0.05);
    CHECK(c.dataset_path == "x");

    auto expect_invalid = [](const char* text) {
        try {
            experiment_config_from_json(nlohmann::json::parse(text));
            FAIL("expected InvalidConfig for " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidConfig);
        }
    };
    expect_invalid(R"({"dataset": "x", "colour": 1})");
    expect_invalid(R"({"dataset": "x", "fusion": {"alpha": 0.95}})");
    expect_invalid(R"({"dataset": "x", "features": []})");
    expect_invalid(R"({"dataset": "x", "density": {"knn": 2}})");
    expect_invalid(R"({})");
    expect_invalid(R"({"dataset": "x", "fusion": {"n_trials": 0}})");

    const auto round = experiment_config_from_json(nlohmann::json::parse(experiment_config_to_json(c).dump()));
    CHECK(config_hash(round) == config_hash(c));
    ExperimentConfig moved = c;
    moved.output_dir = "/elsewhere";
    moved.workers = 8;
    CHECK(config_hash(moved) == config_hash(c));
    moved.fusion.alpha = 0.1;
    CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("errors name the pipeline stage") {
    ExperimentConfig c;
    c.dataset_path = "/nonexistent/mfad";
    try {
        run_experiment(c);
        FAIL("expected a load error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingFile);
        CHECK(std::string(e.what()).find("[load]") != std::string::npos);
    }
}

TEST_CASE("identical runs write identical artifacts") {
    test::TempDir a("runa"), b("runb");
    ExperimentConfig c = synth_experiment(test::small_synth(2.0));
    c.output_dir = a.path().string();
    run_experiment(c);
    c.output_dir = b.path().string();
    c.workers = 3;
    run_experiment(c);

    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = std::filesystem::relative(e.path(), a.path());
        std::string left = test::read_bytes(e.path());
        std::string right = test::read_bytes(b.path() / rel);
        if (rel == "report.json") {
            auto lj = nlohmann::json::parse(left), rj = nlohmann::json::parse(right);
            lj["config"].erase("output_dir");
            rj["config"].erase("output_dir");
            lj["config"].erase("workers");
            rj["config"].erase("workers");
            CHECK(lj == rj);
        } else {
            CHECK_MESSAGE(left == right, rel.string());
        }
    }
    CHECK(files >= 8);

    const auto report = nlohmann::json::parse(test::read_bytes(a / "report.json"));
    CHECK(report.contains("config"));
    CHECK(report["dataset"].contains("content_hash"));
}

TEST_CASE("timeline svg") {
    test::TempDir dir("svg");
    test::write_bytes(dir / "t.csv", "frame_index,score,label\n0,0.1,0\n1,0.8,1\n2,0.9,1\n3,0.2,0\n");
    const std::string svg = render_timeline_svg(dir / "t.csv", "video <1>");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("video &lt;1&gt;") != std::string::npos);
    CHECK(svg.find("<rect") != std::string::npos);
}

TEST_CASE("published schema lists every resolved config key") {
    const auto schema = nlohmann::json::parse(test::read_bytes(std::filesystem::path(MFAD_SOURCE_DIR) / "docs" / "config.schema.json"));
    ExperimentConfig c;
    c.synth = test::small_synth(1.0);
    const auto resolved = nlohmann::json::parse(experiment_config_to_json(c).dump());
    const auto& props = schema.at("properties");
    for (const auto& [key, value] : resolved.items()) {
        CHECK_MESSAGE(props.contains(key), key);
        if (value.is_object() && key != "synth") {
            for (const auto& [inner, _] : value.items()) CHECK_MESSAGE(props[key]["properties"].contains(inner), key << "." << inner);
        }
    }
    for (const auto& [key, _] : resolved["synth"].items()) {
        CHECK_MESSAGE(schema["$defs"]["synth"]["properties"].contains(key), "synth." << key);
    }
}
