#include "ekm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace ekmid::ekm {

void EkmParams::validate() const {
    if (bpf < 2) throw ConfigError("bpf must be at least 2");
    if (alpha_i <= 0 || alpha_i >= 1 || alpha_e <= 0 || alpha_e >= 1)
        throw ConfigError("alpha_i and alpha_e must lie in (0, 1)");
    if (alpha_i + alpha_e > 1.0) throw ConfigError("alpha_i + alpha_e must not exceed 1");
}

EkmMatrix build_ekm(const sigproc::ConditionedEcg& ecg, const sigproc::RPeakList& peaks,
                    size_t window_start_peak, const EkmParams& params) {
    if (ecg.mu <= 0) throw NumericError("conditioned record has no mean R-R distance");
    size_t li = static_cast<size_t>(std::floor(params.alpha_i * ecg.mu));
    size_t le = static_cast<size_t>(std::floor(params.alpha_e * ecg.mu));
    size_t len = li + le;
    if (len == 0) throw NumericError("segment length is zero");
    if (window_start_peak + params.bpf > peaks.indices.size())
        throw DataError("WindowOutOfBounds: not enough peaks left");

    EkmMatrix m;
    m.rows = params.bpf;
    m.cols = static_cast<int>(len);
    m.window_start_peak = window_start_peak;
    m.values.resize(static_cast<size_t>(m.rows) * m.cols);
    const auto& sig = ecg.norm_samples;
    for (int k = 0; k < params.bpf; ++k) {
        size_t p = peaks.indices[window_start_peak + k];
        if (p < li || p + le > sig.size())
            throw DataError("WindowOutOfBounds: segment leaves the record");
        for (size_t j = 0; j < len; ++j) m.at(k, static_cast<int>(j)) = sig[p - li + j];
    }
    return m;
}

EkmMatrix standardize(const EkmMatrix& matrix) {
    auto [mn_it, mx_it] = std::minmax_element(matrix.values.begin(), matrix.values.end());
    double mn = *mn_it, mx = *mx_it;
    if (mx <= mn) throw NumericError("ConstantMatrix: cannot standardize");
    EkmMatrix out = matrix;
    double inv = 2.0 / (mx - mn);
    for (auto& v : out.values) v = (v - mn) * inv - 1.0;
    return out;
}

std::array<uint8_t, 3> colormap(double t) {
    static constexpr double anchors[5][3] = {
        {0, 0, 128}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {128, 0, 0}};
    t = std::clamp(t, 0.0, 1.0);
    double pos = t * 4.0;
    int lo = std::min(3, static_cast<int>(pos));
    double f = pos - lo;
    std::array<uint8_t, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
        double v = anchors[lo][c] + f * (anchors[lo + 1][c] - anchors[lo][c]);
        rgb[c] = static_cast<uint8_t>(std::floor(v + 0.5));  // round half up
    }
    return rgb;
}

EkmImage render_heatmap(const EkmMatrix& matrix, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ConfigError("raster dimensions must be positive");
    EkmImage img;
    img.label = matrix.subject_id;
    img.raster.height = out_h;
    img.raster.width = out_w;
    img.raster.pixels.resize(static_cast<size_t>(out_h) * out_w * 3);
    int rows = matrix.rows, cols = matrix.cols;
    for (int i = 0; i < out_h; ++i) {
        double sy = (out_h > 1 && rows > 1)
                        ? static_cast<double>(i) * (rows - 1) / (out_h - 1)
                        : 0.0;
        int y0 = std::min(rows - 1, static_cast<int>(sy));
        int y1 = std::min(rows - 1, y0 + 1);
        double fy = sy - y0;
        for (int j = 0; j < out_w; ++j) {
            double sx = (out_w > 1 && cols > 1)
                            ? static_cast<double>(j) * (cols - 1) / (out_w - 1)
                            : 0.0;
            int x0 = std::min(cols - 1, static_cast<int>(sx));
            int x1 = std::min(cols - 1, x0 + 1);
            double fx = sx - x0;
            double v = matrix.at(y0, x0) * (1 - fy) * (1 - fx) +
                       matrix.at(y0, x1) * (1 - fy) * fx +
                       matrix.at(y1, x0) * fy * (1 - fx) + matrix.at(y1, x1) * fy * fx;
            auto rgb = colormap((v + 1.0) / 2.0);
            size_t off = (static_cast<size_t>(i) * out_w + j) * 3;
            img.raster.pixels[off] = rgb[0];
            img.raster.pixels[off + 1] = rgb[1];
            img.raster.pixels[off + 2] = rgb[2];
        }
    }
    return img;
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EKM_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct RecordResult {
    std::string subject_id;
    std::vector<EkmMatrix> matrices;  // standardized, chronological
    SubjectStats stats;
    std::vector<double> mus;  // one per matrix
    std::string error;        // non-fatal per-record failure
};

RecordResult process_record(const wfdb::EcgRecord& rec, const EkmParams& params) {
    RecordResult res;
    res.subject_id = rec.subject_id;
    try {
        auto pt = sigproc::pan_tompkins(rec);
        auto cond = sigproc::condition(pt.filtered, pt.peaks);
        if (cond.mu <= 0) throw NumericError("TooFewPeaks: cannot compute mu");
        size_t nwin = pt.peaks.indices.size() / static_cast<size_t>(params.bpf);
        for (size_t w = 0; w < nwin; ++w) {
            size_t start = w * static_cast<size_t>(params.bpf);
            try {
                auto m = build_ekm(cond, pt.peaks, start, params);
                m.subject_id = rec.subject_id;
                res.matrices.push_back(standardize(m));
                res.mus.push_back(cond.mu);
                ++res.stats.ekms;
            } catch (const DataError&) {
                ++res.stats.skipped_out_of_bounds;
            } catch (const NumericError&) {
                ++res.stats.skipped_constant;
            }
        }
    } catch (const DataError& e) {
        res.error = e.what();  // short/flat records yield zero EKMs, reported upstream
    } catch (const NumericError& e) {
        res.error = e.what();
    }
    return res;
}

}  // namespace

DatasetManifest generate_ekm_dataset(const std::vector<wfdb::EcgRecord>& records,
                                     const EkmParams& params, const GenerationConfig& limits) {
    params.validate();
    if (limits.out_root.empty()) throw ConfigError("dataset output root not set");
    if (limits.train_fraction <= 0 || limits.train_fraction >= 1)
        throw ConfigError("train fraction must lie in (0, 1)");

    std::vector<RecordResult> results(records.size());
    int nthreads = std::min<int>(resolve_threads(limits.threads),
                                 std::max<size_t>(1, records.size()));
    if (nthreads <= 1) {
        for (size_t i = 0; i < records.size(); ++i) results[i] = process_record(records[i], params);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1))
                    results[i] = process_record(records[i], params);
            });
        }
        for (auto& th : pool) th.join();
    }

    // group per subject in order of first appearance
    std::vector<std::string> subject_order;
    std::map<std::string, std::vector<size_t>> by_subject;  // record indices
    for (size_t i = 0; i < records.size(); ++i) {
        auto& v = by_subject[records[i].subject_id];
        if (v.empty()) subject_order.push_back(records[i].subject_id);
        v.push_back(i);
    }

    DatasetManifest manifest;
    manifest.root = limits.out_root;
    std::filesystem::create_directories(limits.out_root);

    for (const auto& subject : subject_order) {
        std::vector<const EkmMatrix*> mats;
        std::vector<double> mus;
        SubjectStats stats;
        for (size_t ri : by_subject[subject]) {
            const auto& r = results[ri];
            stats.ekms += r.stats.ekms;
            stats.skipped_out_of_bounds += r.stats.skipped_out_of_bounds;
            stats.skipped_constant += r.stats.skipped_constant;
            for (size_t k = 0; k < r.matrices.size(); ++k) {
                mats.push_back(&r.matrices[k]);
                mus.push_back(r.mus[k]);
            }
        }
        if (limits.max_ekms_per_subject > 0 && mats.size() > limits.max_ekms_per_subject) {
            mats.resize(limits.max_ekms_per_subject);
            mus.resize(limits.max_ekms_per_subject);
            stats.ekms = mats.size();
        }
        size_t n_train = static_cast<size_t>(std::floor(limits.train_fraction *
                                                        static_cast<double>(mats.size())));
        for (size_t k = 0; k < mats.size(); ++k) {
            std::string split = k < n_train ? "train" : "test";
            auto dir = limits.out_root / split / subject;
            std::filesystem::create_directories(dir);
            std::string fname = "ekm_" + std::to_string(k) + ".png";
            auto img = render_heatmap(*mats[k], limits.raster_h, limits.raster_w);
            pngio::write_rgb8(dir / fname, img.raster);
            ManifestEntry e;
            e.subject_id = subject;
            e.split = split;
            e.path = split + "/" + subject + "/" + fname;
            e.window_start_peak = mats[k]->window_start_peak;
            e.bpf = params.bpf;
            e.mu = mus[k];
            manifest.entries.push_back(std::move(e));
        }
        manifest.per_subject.emplace_back(subject, stats);
    }

    write_manifest(manifest);
    return manifest;
}

void write_manifest(const DatasetManifest& manifest) {
    std::ofstream f(manifest.root / "manifest.csv");
    if (!f) throw DataError("cannot write manifest in " + manifest.root.string());
    f << "subject_id,split,path,window_start_peak,bpf,mu\n";
    char buf[64];
    for (const auto& e : manifest.entries) {
        std::snprintf(buf, sizeof buf, "%.10g", e.mu);
        f << e.subject_id << ',' << e.split << ',' << e.path << ',' << e.window_start_peak << ','
          << e.bpf << ',' << buf << '\n';
    }
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
    std::ifstream f(root / "manifest.csv");
    if (!f) throw DataError("cannot open manifest in " + root.string());
    DatasetManifest manifest;
    manifest.root = root;
    std::string line;
    std::getline(f, line);  // header
    std::map<std::string, size_t> subject_idx;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        ManifestEntry e;
        std::string tok;
        std::getline(iss, e.subject_id, ',');
        std::getline(iss, e.split, ',');
        std::getline(iss, e.path, ',');
        std::getline(iss, tok, ',');
        e.window_start_peak = std::stoull(tok);
        std::getline(iss, tok, ',');
        e.bpf = std::stoi(tok);
        std::getline(iss, tok, ',');
        e.mu = std::stod(tok);
        auto it = subject_idx.find(e.subject_id);
        if (it == subject_idx.end()) {
            subject_idx[e.subject_id] = manifest.per_subject.size();
            manifest.per_subject.emplace_back(e.subject_id, SubjectStats{});
            it = subject_idx.find(e.subject_id);
        }
        ++manifest.per_subject[it->second].second.ekms;
        manifest.entries.push_back(std::move(e));
    }
    if (manifest.entries.empty()) throw DataError("manifest is empty: " + root.string());
    return manifest;
}

}  // namespace ekmid::ekm
