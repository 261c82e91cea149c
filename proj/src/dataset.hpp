#ifndef EKMID_DATASET_HPP
#define EKMID_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ekm.hpp"
#include "errors.hpp"
#include "sigproc.hpp"
#include "wfdb.hpp"

namespace ekmid::dataset {

struct SplitConfig {
    double train_fraction = 0.8;
    double validation_fraction = 0.1;  // of the train pool
    uint64_t seed = 0;
};

struct WaveParams {
    double amplitude_mv = 0.0;
    double center_s = 0.0;  // offset from the R-peak time
    double width_s = 0.0;
};

struct SynthSubjectParams {
    WaveParams p{0.15, -0.20, 0.025};
    WaveParams q{-0.10, -0.030, 0.010};
    WaveParams r{1.20, 0.0, 0.012};
    WaveParams s{-0.25, 0.030, 0.012};
    WaveParams t{0.35, 0.25, 0.050};
    double heart_rate_bpm = 60.0;
    double rr_jitter_fraction = 0.0;   // multiplicative R-R jitter
    double wander_amplitude_mv = 0.0;  // slow baseline drift
    double wander_freq_hz = 0.25;
    double noise_std_mv = 0.0;
    void validate() const;
};

// Deterministic, seeded subject morphology for data-free runs and tests.
SynthSubjectParams default_synth_params(int subject_index);

struct SynthResult {
    wfdb::EcgRecord record;
    sigproc::RPeakList true_r_peaks;  // exact generator R times, the oracle
};

SynthResult synth_ecg(const SynthSubjectParams& params, double fs, double duration_s,
                      uint64_t seed, const std::string& subject_id = "synth");

struct SplitResult {
    std::vector<ekm::ManifestEntry> train;
    std::vector<ekm::ManifestEntry> validation;
    std::vector<ekm::ManifestEntry> test;
};

// Test is the chronological tail fixed at build time; validation is a seeded
// per-subject stratified sample of the train pool.
SplitResult split_dataset(const ekm::DatasetManifest& manifest, const SplitConfig& cfg);

struct Batch {
    int batch = 0, height = 0, width = 0;       // channels fixed at 3
    std::vector<float> images;                  // B x H x W x 3, values in [0,1]
    std::vector<int> labels;                    // class indices
    int num_classes = 0;
    float one_hot(int b, int c) const { return labels[b] == c ? 1.0f : 0.0f; }
};

// Label vocabulary: subjects in manifest order (first appearance).
std::vector<std::string> label_vocabulary(const ekm::DatasetManifest& manifest);

class BatchLoader {
public:
    BatchLoader(const ekm::DatasetManifest& manifest, std::vector<ekm::ManifestEntry> entries,
                const std::vector<std::string>& vocab, int batch_size);

    // Deterministic per-epoch shuffle keyed by (seed, epoch); the final short
    // batch is retained.
    std::vector<Batch> epoch_batches(uint64_t seed, uint64_t epoch) const;
    Batch all_as_batch() const;  // unshuffled, one batch with everything
    size_t size() const { return entries_.size(); }
    int image_height() const { return height_; }
    int image_width() const { return width_; }
    int num_classes() const { return static_cast<int>(vocab_.size()); }

private:
    std::vector<ekm::ManifestEntry> entries_;
    std::vector<std::string> vocab_;
    std::vector<int> labels_;
    std::vector<std::vector<float>> cache_;  // decoded images, [0,1]
    int batch_size_;
    int height_ = 0, width_ = 0;
};

}  // namespace ekmid::dataset

#endif
