// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: mfad_acceptance <path to mfad executable>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mfad/evaluation.hpp"
#include "mfad/experiment.hpp"
#include "mfad/gmm.hpp"
#include "mfad/knn.hpp"
#include "mfad/manifest.hpp"
#include "mfad/rng.hpp"
#include "support.hpp"

using namespace mfad;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

ExperimentConfig standard_experiment(double shift, double alpha) {
    ExperimentConfig c;
    c.synth = standard_synth_config(shift);
    c.fusion.alpha = alpha;
    c.fusion.n_trials = 100;
    c.workers = 1;
    return c;
}

Outcome synthetic_separation() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_experiment(standard_experiment(10.0, 0.02));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& rep = r.report;
    return {rep.mean_auc >= 0.99 && rep.std_auc <= 0.01 && rep.n_failed == 0 && secs < 60.0,
            fmt("mean %.6f std %.6f runtime %.2fs", rep.mean_auc, rep.std_auc, secs)};
}

Outcome null_hypothesis() {
    const auto r = run_experiment(standard_experiment(0.0, 0.02));
    return {r.report.mean_auc >= 0.45 && r.report.mean_auc <= 0.55,
            fmt("mean %.6f std %.6f", r.report.mean_auc, r.report.std_auc)};
}

Outcome alpha_robustness() {
    ExperimentConfig c = standard_experiment(10.0, 0.02);
    const auto rows = run_alpha_sweep(c, {0.01, 0.02, 0.03, 0.04, 0.05, 0.10});
    double lo = 1, hi = 0, worst_std = 0;
    for (const auto& row : rows) {
        lo = std::min(lo, row.result.report.mean_auc);
        hi = std::max(hi, row.result.report.mean_auc);
        worst_std = std::max(worst_std, row.result.report.std_auc);
    }
    return {hi - lo < 0.01 && worst_std <= 0.01, fmt("mean range [%.6f, %.6f] max std %.6f", lo, hi, worst_std)};
}

Outcome knn_oracle() {
    Rng rng(64);
    const std::uint32_t dim = 64;
    std::vector<double> stored(1000 * dim);
    for (double& v : stored) v = standard_normal(rng);
    std::size_t mismatches = 0, checked = 0;
    for (std::uint32_t k : {1u, 3u}) {
        const KnnIndex idx(stored, dim, k);
        Rng q(100 + k);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> x(dim);
            for (double& v : x) v = standard_normal(q);
            mismatches += knn_score(idx, x) != test::brute_knn(stored, dim, x, k);
            ++checked;
        }
    }
    return {mismatches == 0, fmt("%.0f of %.0f queries differ", double(mismatches), double(checked))};
}

Outcome gmm_correctness() {
    Rng rng(50);
    double worst_drop = 0.0;
    for (int fit = 0; fit < 50; ++fit) {
        std::vector<Vec2> s;
        const std::size_t clusters = 1 + uniform_below(rng, 4);
        for (std::size_t c = 0; c < clusters; ++c) {
            const double mx = 6 * standard_normal(rng), my = 6 * standard_normal(rng);
            const double sx = 0.2 + 2 * uniform_unit(rng), sy = 0.2 + 2 * uniform_unit(rng);
            for (int i = 0; i < 150; ++i) s.push_back({mx + sx * standard_normal(rng), my + sy * standard_normal(rng)});
        }
        GmmFitOptions o;
        o.n_components = 1 + std::uint32_t(uniform_below(rng, 5));
        o.seed = std::uint64_t(fit);
        const GmmModel m = fit_gmm(s, o);
        for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
            worst_drop = std::max(worst_drop, m.log_likelihood_trace[i - 1] - m.log_likelihood_trace[i]);
        }
    }

    std::vector<Vec2> s(10000);
    for (auto& p : s) {
        const double a = standard_normal(rng), b = standard_normal(rng);
        p = {3.0 + 2.0 * a, -1.0 + 0.5 * a + 0.8 * b};
    }
    double mx = 0, my = 0;
    for (const auto& p : s) {
        mx += p[0];
        my += p[1];
    }
    mx /= double(s.size());
    my /= double(s.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : s) {
        sxx += (p[0] - mx) * (p[0] - mx);
        sxy += (p[0] - mx) * (p[1] - my);
        syy += (p[1] - my) * (p[1] - my);
    }
    sxx /= double(s.size());
    sxy /= double(s.size());
    syy /= double(s.size());
    GmmFitOptions o;
    o.n_components = 1;
    const GmmModel m = fit_gmm(s, o);
    const double err = std::max({std::abs(m.means[0][0] - mx), std::abs(m.means[0][1] - my),
                                 std::abs(m.covariances[0].xx - sxx), std::abs(m.covariances[0].xy - sxy),
                                 std::abs(m.covariances[0].yy - syy)});
    return {worst_drop <= 1e-9 && err < 1e-6, fmt("largest likelihood drop %.3g, single-component error %.3g", worst_drop, err)};
}

Outcome logreg_gradient_check() {
    Rng rng(10);
    const double eps = 1e-5;
    double worst = 0.0;
    for (int point = 0; point < 10; ++point) {
        ScoreMatrix x(50, {"P", "V", "IE", "VE"}, true);
        std::vector<std::uint8_t> y(50);
        std::vector<std::size_t> rows(50);
        for (std::size_t r = 0; r < 50; ++r) {
            for (std::size_t c = 0; c < 4; ++c) x(r, c) = uniform_unit(rng);
            y[r] = std::uint8_t(uniform_below(rng, 2));
            rows[r] = r;
        }
        x.refresh_max();
        std::vector<double> w(5);
        for (double& v : w) v = 2 * standard_normal(rng);
        const double b = standard_normal(rng);
        const auto g = logreg_gradient(w, b, x, rows, y);
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto wp = w, wm = w;
            double bp = b, bm = b;
            if (j < w.size()) {
                wp[j] += eps;
                wm[j] -= eps;
            } else {
                bp += eps;
                bm -= eps;
            }
            const double fd = (logreg_loss(wp, bp, x, rows, y) - logreg_loss(wm, bm, x, rows, y)) / (2 * eps);
            worst = std::max(worst, std::abs(fd - g[j]) / std::max({std::abs(fd), std::abs(g[j]), 1e-8}));
        }
    }
    return {worst < 1e-4, fmt("max relative error %.3g", worst)};
}

Outcome auc_oracle() {
    Rng rng(200);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> s(200);
        std::vector<std::uint8_t> y(200);
        for (std::size_t i = 0; i < 200; ++i) {
            s[i] = double(uniform_below(rng, 25)) * 0.04;
            y[i] = std::uint8_t(uniform_below(rng, 2));
        }
        y[0] = 1;
        y[1] = 0;
        worst = std::max(worst, std::abs(roc_auc(s, y) - test::pair_count_auc(s, y)));
    }
    return {worst < 1e-12, fmt("max |delta| %.3g", worst)};
}

Outcome smoothing_invariants() {
    Rng rng(30);
    bool fixpoint = true, bounded = true;
    double worst_norm = 0.0;
    for (int t = 0; t < 200; ++t) {
        SmoothingConfig cfg;
        cfg.sigma = 0.2 + 8 * uniform_unit(rng);
        const std::size_t n = 1 + uniform_below(rng, 120);
        const std::vector<double> c(n, standard_normal(rng));
        fixpoint = fixpoint && gaussian_smooth(c, cfg) == c;

        std::vector<double> x(n);
        for (double& v : x) v = standard_normal(rng);
        const auto y = gaussian_smooth(x, cfg);
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        for (double v : y) bounded = bounded && v >= *lo && v <= *hi;
        for (std::size_t pos = 0; pos < n; ++pos) {
            double sum = 0.0;
            for (const auto& [i, w] : smoothing_weights(n, pos, cfg)) sum += w;
            worst_norm = std::max(worst_norm, std::abs(sum - 1.0));
        }
    }
    return {fixpoint && bounded && worst_norm <= 1e-12,
            std::string("fixpoint ") + (fixpoint ? "exact" : "broken") + ", bounds " + (bounded ? "held" : "broken") +
                fmt(", max |sum-1| %.3g", worst_norm)};
}

Outcome max_exactness() {
    Rng rng(10000);
    FrameScores s;
    s.present = kAllKindsMask;
    for (std::size_t r = 0; r < 10000; ++r) {
        s.frames.push_back({0, std::uint32_t(r)});
        s.labels.push_back(0);
        for (std::size_t k = 0; k < kNumKinds; ++k) s.values[k].push_back(uniform_unit(rng));
    }
    s.video_offsets = {0, 10000};
    s.video_ids = {"v"};
    const ScoreMatrix m = build_matrix(s, true);
    std::size_t bad = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double want = std::max({s.values[0][r], s.values[1][r], s.values[2][r], s.values[3][r]});
        bad += m(r, 4) != want;
    }
    return {bad == 0, fmt("%.0f of 10000 rows differ", double(bad))};
}

Outcome train_eval_isolation() {
    ExperimentConfig c = standard_experiment(10.0, 0.02);
    const Dataset ds = load_or_generate(c);
    const DensityModels models = fit_density(ds, kAllKindsMask, c.density);
    const FrameScores scores = score_dataset(ds, models, kAllKindsMask);
    std::vector<std::set<std::size_t>> reads(c.fusion.n_trials);
    evaluate_scores(scores, c, ds.name, 0, [&](std::uint32_t t, std::size_t row) { reads[t].insert(row); });
    std::size_t violations = 0, total_reads = 0;
    for (std::uint32_t t = 0; t < c.fusion.n_trials; ++t) {
        const auto split = sample_split(scores.rows(), c.fusion.alpha, trial_seed(c.fusion.base_seed, t));
        for (auto i : split.train_indices) violations += reads[t].count(i);
        total_reads += reads[t].size();
    }
    return {violations == 0 && total_reads > 0,
            fmt("%.0f reads of training rows over %.0f eval reads in 100 trials", double(violations), double(total_reads))};
}

Outcome manifest_golden() {
    test::TempDir root("accept_hmdb");
    std::string detail;
    bool ok = true;
    for (const SplitSpec& spec : {hmdb_ad_spec(), hmdb_violence_spec()}) {
        for (const auto& c : spec.classes) {
            const auto dir = root.path() / c.directory;
            std::filesystem::create_directories(dir);
            const std::uint32_t have = std::uint32_t(std::distance(std::filesystem::directory_iterator(dir), {}));
            for (std::uint32_t i = have; i < c.train_count + c.test_count + 5; ++i) {
                test::write_bytes(dir / (c.directory + "_" + std::to_string(i) + ".avi"), "");
            }
        }
        const Manifest m = build_manifest(root.path(), spec);
        const AuditReport a = audit_manifest(m, spec);
        bool counts = true;
        for (const auto& c : spec.classes) {
            const auto it = a.class_counts.find(c.name);
            counts = counts && it != a.class_counts.end() && it->second.first == c.train_count &&
                     it->second.second == c.test_count;
        }
        const bool this_ok = a.ok() && counts && build_manifest(root.path(), spec) == m;
        ok = ok && this_ok;
        detail += spec.name + " " + std::to_string(a.train_videos) + "/" + std::to_string(a.test_videos) +
                  (this_ok ? " ok; " : " FAILED; ");
    }
    ok = ok && hmdb_ad_spec().train_total() == 680 && hmdb_ad_spec().test_total() == 315 &&
         hmdb_violence_spec().train_total() == 1601 && hmdb_violence_spec().test_total() == 965;
    return {ok, detail};
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome cli_determinism(const std::string& exe) {
    test::TempDir dir("accept_cli");
    const std::string d = dir.path().string();
    const std::string q = "'" + exe + "'";
    std::vector<std::string> failures;

    if (run(q + " synth --standard-shift 10 --out " + d + "/ds1") != 0 ||
        run(q + " synth --standard-shift 10 --out " + d + "/ds2") != 0) {
        return {false, "synth failed"};
    }
    for (const auto& e : std::filesystem::recursive_directory_iterator(d + "/ds1")) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), d + "/ds1");
        if (test::read_bytes(e.path()) != test::read_bytes(d + "/ds2/" + rel.string())) failures.push_back(rel.string());
    }

    const std::string eval = q + " eval --dataset " + d + "/ds1 --n-trials 20 --seed 9 --out-dir " + d + "/out";
    if (run(eval) != 0) return {false, "eval failed"};
    const std::string json1 = test::read_bytes(d + "/out/report.json");
    const std::string csv1 = test::read_bytes(d + "/out/report.csv");
    const std::string model1 = test::read_bytes(d + "/out/models.bin");
    if (run(eval) != 0) return {false, "second eval failed"};
    if (json1.empty() || json1 != test::read_bytes(d + "/out/report.json")) failures.push_back("report.json");
    if (csv1.empty() || csv1 != test::read_bytes(d + "/out/report.csv")) failures.push_back("report.csv");
    if (model1 != test::read_bytes(d + "/out/models.bin")) failures.push_back("models.bin");

    const std::string cfg = d + "/cfg.json";
    test::write_bytes(cfg, "{\"dataset\": \"" + d + "/ds1\", \"fusion\": {\"n_trials\": 5}}");
    for (const std::string sub : {"ablate-features --config " + cfg, "sweep-alpha --config " + cfg + " --alphas 0,0.05"}) {
        if (run(q + " " + sub + " --out " + d + "/t1.csv") != 0 || run(q + " " + sub + " --out " + d + "/t2.csv") != 0) {
            return {false, sub + " failed"};
        }
        if (test::read_bytes(d + "/t1.csv") != test::read_bytes(d + "/t2.csv")) failures.push_back(sub);
    }

    std::string detail = failures.empty() ? "synth, eval, ablate-features, sweep-alpha outputs byte-identical" : "differs:";
    for (const auto& f : failures) detail += " " + f;
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <mfad executable>\n", argv[0]);
        return 2;
    }
    const std::string exe = argv[1];

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"synthetic separation", synthetic_separation},
        {"no-signal null", null_hypothesis},
        {"alpha robustness", alpha_robustness},
        {"knn oracle equivalence", knn_oracle},
        {"gmm correctness", gmm_correctness},
        {"logistic regression gradient", logreg_gradient_check},
        {"auc oracle equivalence", auc_oracle},
        {"smoothing invariants", smoothing_invariants},
        {"max column exactness", max_exactness},
        {"train/eval isolation", train_eval_isolation},
        {"manifest golden", manifest_golden},
        {"cli determinism", [&] { return cli_determinism(exe); }},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s  %-30s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
