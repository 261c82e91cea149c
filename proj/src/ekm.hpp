#ifndef EKMID_EKM_HPP
#define EKMID_EKM_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "errors.hpp"
#include "pngio.hpp"
#include "sigproc.hpp"
#include "wfdb.hpp"

namespace ekmid::ekm {

struct EkmParams {
    int bpf = 3;            // beats per frame
    double alpha_i = 0.2;   // fraction of mu taken before each R peak
    double alpha_e = 0.3;   // fraction of mu taken after each R peak
    void validate() const;  // bpf >= 2, alphas in (0,1), alpha_i + alpha_e <= 1
};

struct EkmMatrix {
    int rows = 0;  // bpf, beats are rows, time runs along columns
    int cols = 0;  // floor(alpha_i*mu) + floor(alpha_e*mu)
    std::vector<double> values;  // row-major
    size_t window_start_peak = 0;
    std::string subject_id;

    double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }
};

struct EkmImage {
    pngio::RgbImage raster;
    std::string label;  // subject id
};

// Slice bpf consecutive R-peak-aligned segments out of the conditioned signal.
// Throws DataError("WindowOutOfBounds") when a segment would leave the record.
EkmMatrix build_ekm(const sigproc::ConditionedEcg& ecg, const sigproc::RPeakList& peaks,
                    size_t window_start_peak, const EkmParams& params);

// Affine map of the matrix values onto [-1, 1].
// Throws NumericError("ConstantMatrix") for constant input.
EkmMatrix standardize(const EkmMatrix& matrix);

// Piecewise-linear colormap over t in [0,1]; anchors at 0, .25, .5, .75, 1.
std::array<uint8_t, 3> colormap(double t);

// Bilinear resample to out_h x out_w, then colormap each value from [-1,1].
EkmImage render_heatmap(const EkmMatrix& matrix, int out_h, int out_w);

struct GenerationConfig {
    size_t max_ekms_per_subject = 0;  // 0 = exhaust the signal
    int raster_h = 25;
    int raster_w = 37;
    double train_fraction = 0.8;  // chronological head of each subject's stream
    std::filesystem::path out_root;
    int threads = 0;  // 0 = EKM_THREADS env or hardware concurrency
};

struct ManifestEntry {
    std::string subject_id;
    std::string split;  // "train" or "test"
    std::string path;   // relative to the dataset root
    size_t window_start_peak = 0;
    int bpf = 0;
    double mu = 0.0;
};

struct SubjectStats {
    size_t ekms = 0;
    size_t skipped_out_of_bounds = 0;
    size_t skipped_constant = 0;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;
    std::vector<std::pair<std::string, SubjectStats>> per_subject;  // manifest order
};

// Run the full per-record pipeline (detector, conditioning, windowing,
// standardization, rendering) and write <root>/{train,test}/<subject>/ekm_<i>.png
// plus manifest.csv. Window start advances by bpf peaks per EKM.
DatasetManifest generate_ekm_dataset(const std::vector<wfdb::EcgRecord>& records,
                                     const EkmParams& params, const GenerationConfig& limits);

void write_manifest(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& root);

}  // namespace ekmid::ekm

#endif
