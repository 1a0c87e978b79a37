#include "mfad/density.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "mfad/error.hpp"
#include "mfad/parallel.hpp"

namespace mfad {

namespace fs = std::filesystem;
using detail::read_le;
using detail::write_le;

namespace {

constexpr char kModelMagic[4] = {'M', 'F', 'M', '1'};

std::vector<double> to_double(std::span<const float> v) { return {v.begin(), v.end()}; }

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_double(std::string_view s, const std::string& ctx) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::IoError, ctx + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

double record_score(const DensityModel& model, std::span<const float> vector) {
    if (const auto* gmm = std::get_if<GmmModel>(&model)) {
        if (vector.size() != 2) throw Error(ErrorCode::DimensionMismatch, "GMM scores two-dimensional vectors only");
        return gmm_score(*gmm, Vec2{vector[0], vector[1]});
    }
    const auto& knn = std::get<KnnIndex>(model);
    const auto x = to_double(vector);
    return knn_score(knn, x);
}

std::vector<std::optional<double>> raw_frame_scores(const Dataset& dataset, Split split, FeatureKind kind,
                                                    const DensityModel& model, Aggregation aggregation,
                                                    bool leave_one_out, std::size_t workers) {
    const auto& videos = dataset.videos(split);
    const auto offsets = video_offsets(dataset, split);

    // Global record offset of each video, matching the order in which
    // fit_density stacks training vectors into the kNN index.
    std::vector<std::size_t> record_base(videos.size() + 1, 0);
    for (std::size_t v = 0; v < videos.size(); ++v) record_base[v + 1] = record_base[v] + videos[v].of(kind).size();

    const auto* knn = std::get_if<KnnIndex>(&model);
    std::vector<std::optional<double>> out(offsets.back());
    parallel_for(videos.size(), workers, [&](std::size_t vi) {
        const auto& video = videos[vi];
        std::vector<double> acc(video.frame_count, 0.0);
        std::vector<std::uint32_t> count(video.frame_count, 0);
        const auto& records = video.of(kind);
        for (std::size_t ri = 0; ri < records.size(); ++ri) {
            const auto& r = records[ri];
            double s;
            if (knn && leave_one_out) {
                s = knn_score(*knn, to_double(r.vector), record_base[vi] + ri);
            } else {
                s = record_score(model, r.vector);
            }
            for (std::uint32_t f = r.frame_index; f < r.frame_index + r.block_length; ++f) {
                if (count[f] == 0) {
                    acc[f] = s;
                } else if (aggregation == Aggregation::Max) {
                    acc[f] = std::max(acc[f], s);
                } else {
                    acc[f] += s;
                }
                ++count[f];
            }
        }
        for (std::uint32_t f = 0; f < video.frame_count; ++f) {
            if (count[f] == 0) continue;
            out[offsets[vi] + f] = aggregation == Aggregation::Mean ? acc[f] / count[f] : acc[f];
        }
    });
    return out;
}

DensityModels fit_density(const Dataset& dataset, const KindMask& kinds, const DensityOptions& options) {
    DensityModels models;
    models.aggregation = options.aggregation;
    for (FeatureKind k : kAllKinds) {
        if (!kinds[index_of(k)] || !dataset.has_kind(k)) continue;
        const std::uint32_t dim = *dataset.dims[index_of(k)];
        const std::string ctx = std::string(kind_name(k));

        DensityModel model;
        if (k == FeatureKind::Velocity) {
            std::vector<Vec2> samples;
            for (const auto& v : dataset.train) {
                for (const auto& r : v.of(k)) samples.push_back({r.vector[0], r.vector[1]});
            }
            model = fit_gmm(samples, options.gmm);
        } else {
            std::vector<double> data;
            for (const auto& v : dataset.train) {
                for (const auto& r : v.of(k)) data.insert(data.end(), r.vector.begin(), r.vector.end());
            }
            if (data.empty()) throw Error(ErrorCode::EmptyIndex, ctx + ": no training records");
            model = KnnIndex(std::move(data), dim, options.knn_k[index_of(k)]);
        }

        const auto raw = raw_frame_scores(dataset, Split::Train, k, model, options.aggregation,
                                          /*leave_one_out=*/true, options.workers);
        std::vector<double> covered;
        for (const auto& s : raw) {
            if (s) covered.push_back(*s);
        }
        if (covered.empty()) throw Error(ErrorCode::EmptyInput, ctx + ": no training frame carries a record");
        models.kinds[index_of(k)] = KindModel{std::move(model), fit_calibration(covered)};
    }
    return models;
}

FrameScores score_dataset(const Dataset& dataset, const DensityModels& models, const KindMask& kinds,
                          std::size_t workers) {
    FrameScores out;
    out.frames = frames_of(dataset, Split::Test);
    out.video_offsets = video_offsets(dataset, Split::Test);
    for (const auto& v : dataset.test) {
        out.video_ids.push_back(v.video_id);
        if (v.ground_truth) {
            out.labels.insert(out.labels.end(), v.ground_truth->begin(), v.ground_truth->end());
        } else {
            out.labels.insert(out.labels.end(), v.frame_count, std::uint8_t{0});
        }
    }

    for (FeatureKind k : kAllKinds) {
        if (!kinds[index_of(k)]) continue;
        const auto& km = models.kinds[index_of(k)];
        if (!km || !dataset.has_kind(k)) {
            throw Error(ErrorCode::ModelKindMissing, std::string(kind_name(k)) +
                                                         (km ? ": kind absent from dataset" : ": no fitted model"));
        }
        const auto raw = raw_frame_scores(dataset, Split::Test, k, km->model, models.aggregation, false, workers);
        auto& col = out.values[index_of(k)];
        col.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            col[i] = raw[i] ? apply_calibration(km->calibration, *raw[i]) : 0.0;
        }
        out.present[index_of(k)] = true;
    }
    return out;
}

void save_models(const DensityModels& models, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(kModelMagic, 4);
    write_le(out, static_cast<std::uint8_t>(models.aggregation));
    std::uint8_t count = 0;
    for (const auto& m : models.kinds) count += m ? 1 : 0;
    write_le(out, count);
    for (FeatureKind k : kAllKinds) {
        const auto& km = models.kinds[index_of(k)];
        if (!km) continue;
        write_le(out, static_cast<std::uint8_t>(k));
        write_le(out, static_cast<std::uint8_t>(km->model.index()));
        write_le(out, km->calibration.train_min);
        write_le(out, km->calibration.train_max);
        if (const auto* gmm = std::get_if<GmmModel>(&km->model)) {
            write_le(out, static_cast<std::uint32_t>(gmm->n_components()));
            write_le(out, gmm->iterations);
            write_le(out, gmm->log_likelihood);
            write_le(out, static_cast<std::uint64_t>(gmm->log_likelihood_trace.size()));
            for (double v : gmm->log_likelihood_trace) write_le(out, v);
            for (std::size_t j = 0; j < gmm->n_components(); ++j) {
                write_le(out, gmm->weights[j]);
                write_le(out, gmm->means[j][0]);
                write_le(out, gmm->means[j][1]);
                write_le(out, gmm->covariances[j].xx);
                write_le(out, gmm->covariances[j].xy);
                write_le(out, gmm->covariances[j].yy);
            }
        } else {
            const auto& knn = std::get<KnnIndex>(km->model);
            write_le(out, knn.dim());
            write_le(out, knn.k());
            write_le(out, static_cast<std::uint64_t>(knn.size()));
            for (double v : knn.data()) write_le(out, v);
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

DensityModels load_models(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    const std::string file = path.string();
    auto need = [&](bool ok) {
        if (!ok) throw Error(ErrorCode::IoError, file + ": truncated model file");
    };

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0) {
        throw Error(ErrorCode::MagicMismatch, file + ": not a model file");
    }
    DensityModels models;
    std::uint8_t agg = 0, count = 0;
    need(read_le(in, agg) && read_le(in, count));
    if (agg > 1) throw Error(ErrorCode::IoError, file + ": unknown aggregation tag");
    models.aggregation = static_cast<Aggregation>(agg);
    for (std::uint8_t m = 0; m < count; ++m) {
        std::uint8_t kind = 0, type = 0;
        CalibrationStats calib;
        need(read_le(in, kind) && read_le(in, type) && read_le(in, calib.train_min) && read_le(in, calib.train_max));
        if (kind >= kNumKinds || type > 1) throw Error(ErrorCode::IoError, file + ": bad model header");
        if (type == 0) {
            GmmModel g;
            std::uint32_t k = 0;
            std::uint64_t trace = 0;
            need(read_le(in, k) && read_le(in, g.iterations) && read_le(in, g.log_likelihood) && read_le(in, trace));
            g.log_likelihood_trace.resize(static_cast<std::size_t>(trace));
            for (double& v : g.log_likelihood_trace) need(read_le(in, v));
            g.weights.resize(k);
            g.means.resize(k);
            g.covariances.resize(k);
            for (std::uint32_t j = 0; j < k; ++j) {
                need(read_le(in, g.weights[j]) && read_le(in, g.means[j][0]) && read_le(in, g.means[j][1]) &&
                     read_le(in, g.covariances[j].xx) && read_le(in, g.covariances[j].xy) &&
                     read_le(in, g.covariances[j].yy));
            }
            models.kinds[kind] = KindModel{std::move(g), calib};
        } else {
            std::uint32_t dim = 0, k = 0;
            std::uint64_t n = 0;
            need(read_le(in, dim) && read_le(in, k) && read_le(in, n));
            std::vector<double> data(static_cast<std::size_t>(n * dim));
            for (double& v : data) need(read_le(in, v));
            models.kinds[kind] = KindModel{KnnIndex(std::move(data), dim, k), calib};
        }
    }
    return models;
}

void save_frame_scores(const FrameScores& scores, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out << "video_id,frame_index,label";
    for (FeatureKind k : kAllKinds) {
        if (scores.present[index_of(k)]) out << ',' << kind_name(k);
    }
    out << '\n';
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto& fr = scores.frames[i];
        out << scores.video_ids[fr.video] << ',' << fr.frame << ','
            << static_cast<int>(scores.labels.empty() ? 0 : scores.labels[i]);
        for (FeatureKind k : kAllKinds) {
            if (scores.present[index_of(k)]) out << ',' << format_double(scores.values[index_of(k)][i]);
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

FrameScores load_frame_scores(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    const std::string file = path.string();
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, file + ": empty score file");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "video_id" || header[1] != "frame_index" || header[2] != "label") {
        throw Error(ErrorCode::IoError, file + ": unexpected header");
    }
    FrameScores s;
    std::vector<FeatureKind> columns;
    for (std::size_t c = 3; c < header.size(); ++c) {
        auto k = kind_from_name(header[c]);
        if (!k) throw Error(ErrorCode::IoError, file + ": unknown column '" + std::string(header[c]) + "'");
        columns.push_back(*k);
        s.present[index_of(*k)] = true;
    }
    s.video_offsets.push_back(0);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::string ctx = file + " row " + std::to_string(row + 1);
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw Error(ErrorCode::IoError, ctx + ": wrong column count");
        const std::string id(cells[0]);
        if (s.video_ids.empty() || s.video_ids.back() != id) {
            if (!s.video_ids.empty()) s.video_offsets.push_back(row);
            s.video_ids.push_back(id);
        }
        const auto frame = static_cast<std::uint32_t>(parse_double(cells[1], ctx));
        s.frames.push_back({s.video_ids.size() - 1, frame});
        const double label = parse_double(cells[2], ctx);
        if (label != 0.0 && label != 1.0) throw Error(ErrorCode::InvalidLabels, ctx + ": label must be 0 or 1");
        s.labels.push_back(static_cast<std::uint8_t>(label));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            s.values[index_of(columns[c])].push_back(parse_double(cells[3 + c], ctx));
        }
        ++row;
    }
    s.video_offsets.push_back(row);
    if (s.video_ids.empty()) s.video_offsets = {0};
    return s;
}

}  // namespace mfad
