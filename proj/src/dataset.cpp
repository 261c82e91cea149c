#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace ekmid::dataset {

namespace {

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t h = a + 0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2);
    h ^= h >> 33;
    h *= 0xFF51AFD7ED558CCDULL;
    h ^= h >> 33;
    return h;
}

}  // namespace

void SynthSubjectParams::validate() const {
    const WaveParams* waves[] = {&p, &q, &r, &s, &t};
    for (const auto* w : waves)
        if (w->width_s <= 0) throw ConfigError("synthetic wave widths must be positive");
    for (const auto* w : waves)
        if (w != &r && std::abs(w->amplitude_mv) >= r.amplitude_mv)
            throw ConfigError("R amplitude must dominate all other waves");
    if (heart_rate_bpm <= 0) throw ConfigError("heart rate must be positive");
    if (rr_jitter_fraction < 0 || rr_jitter_fraction >= 0.5)
        throw ConfigError("rr jitter fraction out of range");
    if (noise_std_mv < 0 || wander_amplitude_mv < 0) throw ConfigError("negative noise level");
}

SynthSubjectParams default_synth_params(int subject_index) {
    // Morphology varies deterministically with the subject index so EKMs from
    // different synthetic subjects are separable.
    std::mt19937_64 rng(0xEC6D1DB1u + static_cast<uint64_t>(subject_index) * 7919u);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SynthSubjectParams sp;
    sp.p.amplitude_mv = 0.10 + 0.12 * u(rng);
    sp.p.center_s = -0.23 + 0.05 * u(rng);
    sp.p.width_s = 0.020 + 0.012 * u(rng);
    sp.q.amplitude_mv = -(0.05 + 0.10 * u(rng));
    sp.q.width_s = 0.008 + 0.005 * u(rng);
    sp.r.amplitude_mv = 1.0 + 0.5 * u(rng);
    sp.r.width_s = 0.010 + 0.005 * u(rng);
    sp.s.amplitude_mv = -(0.15 + 0.20 * u(rng));
    sp.s.width_s = 0.009 + 0.006 * u(rng);
    sp.t.amplitude_mv = 0.20 + 0.25 * u(rng);
    sp.t.center_s = 0.22 + 0.08 * u(rng);
    sp.t.width_s = 0.040 + 0.025 * u(rng);
    sp.heart_rate_bpm = 55.0 + 10.0 * u(rng);
    sp.rr_jitter_fraction = 0.02;
    sp.wander_amplitude_mv = 0.05;
    sp.wander_freq_hz = 0.2 + 0.2 * u(rng);
    sp.noise_std_mv = 0.01;
    return sp;
}

SynthResult synth_ecg(const SynthSubjectParams& params, double fs, double duration_s,
                      uint64_t seed, const std::string& subject_id) {
    params.validate();
    if (fs <= 0 || duration_s <= 0) throw ConfigError("fs and duration must be positive");
    double rr_base = 60.0 / params.heart_rate_bpm;
    if (duration_s * fs < 2.0 * rr_base * fs)
        throw ConfigError("duration too short for two beats");

    const WaveParams* waves[] = {&params.p, &params.q, &params.r, &params.s, &params.t};
    double extent = 0.0;
    for (const auto* w : waves)
        extent = std::max(extent, std::abs(w->center_s) + 4.0 * w->width_s);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> beat_times;
    double t = extent;
    while (t + extent <= duration_s) {
        beat_times.push_back(t);
        double rr = rr_base;
        if (params.rr_jitter_fraction > 0) rr *= 1.0 + params.rr_jitter_fraction * uni(rng);
        t += rr;
    }

    size_t n = static_cast<size_t>(std::llround(duration_s * fs));
    std::vector<double> sig(n, 0.0);
    for (double tb : beat_times) {
        for (const auto* w : waves) {
            double c = tb + w->center_s;
            long lo = std::max<long>(0, std::llround((c - 4.0 * w->width_s) * fs));
            long hi = std::min<long>(static_cast<long>(n) - 1,
                                     std::llround((c + 4.0 * w->width_s) * fs));
            for (long i = lo; i <= hi; ++i) {
                double dt = i / fs - c;
                sig[static_cast<size_t>(i)] +=
                    w->amplitude_mv * std::exp(-dt * dt / (2.0 * w->width_s * w->width_s));
            }
        }
    }
    if (params.wander_amplitude_mv > 0) {
        double phase = M_PI * uni(rng);
        for (size_t i = 0; i < n; ++i)
            sig[i] += params.wander_amplitude_mv *
                      std::sin(2.0 * M_PI * params.wander_freq_hz * i / fs + phase);
    }
    if (params.noise_std_mv > 0)
        for (size_t i = 0; i < n; ++i) sig[i] += params.noise_std_mv * gauss(rng);

    SynthResult res;
    res.record.subject_id = subject_id;
    res.record.samples = std::move(sig);
    res.record.fs = fs;
    res.record.source = "synthetic:" + subject_id;
    res.true_r_peaks.fs = fs;
    for (double tb : beat_times)
        res.true_r_peaks.indices.push_back(static_cast<size_t>(std::llround(tb * fs)));
    return res;
}

std::vector<std::string> label_vocabulary(const ekm::DatasetManifest& manifest) {
    std::vector<std::string> vocab;
    for (const auto& [subject, _] : manifest.per_subject) vocab.push_back(subject);
    return vocab;
}

SplitResult split_dataset(const ekm::DatasetManifest& manifest, const SplitConfig& cfg) {
    if (cfg.train_fraction <= 0 || cfg.train_fraction >= 1 || cfg.validation_fraction <= 0 ||
        cfg.validation_fraction >= 1)
        throw ConfigError("split fractions must lie in (0, 1)");
    if (manifest.entries.empty()) throw DataError("manifest is empty");

    std::map<std::string, std::vector<size_t>> train_pool, test_pool;
    for (size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        (e.split == "test" ? test_pool : train_pool)[e.subject_id].push_back(i);
    }

    SplitResult out;
    for (const auto& [subject, _] : manifest.per_subject) {
        auto tr = train_pool.find(subject);
        auto te = test_pool.find(subject);
        size_t n_tr = tr == train_pool.end() ? 0 : tr->second.size();
        size_t n_te = te == test_pool.end() ? 0 : te->second.size();
        if (n_tr + n_te < 3 || n_tr == 0 || n_te == 0)
            throw DataError("SubjectTooSmall: subject '" + subject +
                            "' cannot populate train, validation and test");

        size_t n_val = static_cast<size_t>(
            std::floor(cfg.validation_fraction * static_cast<double>(n_tr)));
        std::vector<size_t> order(n_tr);
        for (size_t i = 0; i < n_tr; ++i) order[i] = i;
        std::mt19937_64 rng(mix(cfg.seed, fnv1a(subject)));
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<bool> is_val(n_tr, false);
        for (size_t i = 0; i < n_val; ++i) is_val[order[i]] = true;
        for (size_t i = 0; i < n_tr; ++i) {
            const auto& e = manifest.entries[tr->second[i]];
            (is_val[i] ? out.validation : out.train).push_back(e);
        }
        for (size_t i : te->second) out.test.push_back(manifest.entries[i]);
    }
    return out;
}

BatchLoader::BatchLoader(const ekm::DatasetManifest& manifest,
                         std::vector<ekm::ManifestEntry> entries,
                         const std::vector<std::string>& vocab, int batch_size)
    : entries_(std::move(entries)), vocab_(vocab), batch_size_(batch_size) {
    if (batch_size_ < 1) throw ConfigError("batch size must be at least 1");
    std::map<std::string, int> index;
    for (size_t i = 0; i < vocab_.size(); ++i) index[vocab_[i]] = static_cast<int>(i);
    labels_.reserve(entries_.size());
    cache_.reserve(entries_.size());
    for (const auto& e : entries_) {
        auto it = index.find(e.subject_id);
        if (it == index.end()) throw DataError("LabelUnknown: subject '" + e.subject_id + "'");
        labels_.push_back(it->second);
        auto img = pngio::read_rgb8(manifest.root / e.path);
        if (height_ == 0) {
            height_ = img.height;
            width_ = img.width;
        } else if (img.height != height_ || img.width != width_) {
            throw DataError("inconsistent image dimensions in dataset: " + e.path);
        }
        std::vector<float> px(img.pixels.size());
        for (size_t i = 0; i < img.pixels.size(); ++i)
            px[i] = static_cast<float>(img.pixels[i]) / 255.0f;
        cache_.push_back(std::move(px));
    }
}

std::vector<Batch> BatchLoader::epoch_batches(uint64_t seed, uint64_t epoch) const {
    std::vector<size_t> order(entries_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(mix(seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Batch> batches;
    size_t per_img = static_cast<size_t>(height_) * width_ * 3;
    for (size_t start = 0; start < order.size(); start += batch_size_) {
        size_t stop = std::min(order.size(), start + batch_size_);
        Batch b;
        b.batch = static_cast<int>(stop - start);
        b.height = height_;
        b.width = width_;
        b.num_classes = static_cast<int>(vocab_.size());
        b.images.reserve(b.batch * per_img);
        for (size_t i = start; i < stop; ++i) {
            const auto& px = cache_[order[i]];
            b.images.insert(b.images.end(), px.begin(), px.end());
            b.labels.push_back(labels_[order[i]]);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

Batch BatchLoader::all_as_batch() const {
    Batch b;
    b.batch = static_cast<int>(entries_.size());
    b.height = height_;
    b.width = width_;
    b.num_classes = static_cast<int>(vocab_.size());
    for (size_t i = 0; i < cache_.size(); ++i) {
        b.images.insert(b.images.end(), cache_[i].begin(), cache_[i].end());
        b.labels.push_back(labels_[i]);
    }
    return b;
}

}  // namespace ekmid::dataset
