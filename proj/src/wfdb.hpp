#ifndef EKMID_WFDB_HPP
#define EKMID_WFDB_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ekmid::wfdb {

struct SignalSpec {
    std::string file_name;
    int format = 0;         // supported: 212, 16
    double gain = 200.0;    // adu per mV, default when header omits it
    int baseline = 0;       // adu value corresponding to 0 mV
    int adc_resolution = 0;
    int adc_zero = 0;
    int initial_value = 0;
    int checksum = 0;
    bool has_checksum = false;
    std::string description;
};

struct RecordMeta {
    std::string record_name;
    std::string subject_id;  // defaults to record_name; directory-derived for PTB-style layouts
    int n_signals = 0;
    double sampling_frequency = 0.0;
    int64_t n_samples = 0;
    std::vector<SignalSpec> signals;
    std::vector<std::string> comments;  // '#' lines, verbatim, in order
};

struct EcgRecord {
    std::string subject_id;
    std::vector<double> samples;  // calibrated, mV
    double fs = 0.0;              // Hz, always from the header
    std::string source;           // file path + channel index
    std::string label_hint;       // pathology text from header comments, if any
};

// Parse a WFDB .hea text. Throws DataError (malformed header / unsupported format).
RecordMeta parse_header(const std::string& header_text);

// Format 212: two 12-bit samples packed into three bytes.
std::vector<int> decode_format212(const std::vector<uint8_t>& bytes, size_t n_samples);

// Format 16: little-endian two's-complement 16-bit samples.
std::vector<int> decode_format16(const std::vector<uint8_t>& bytes, size_t n_samples);

struct LoadOptions {
    bool verify_checksum = false;  // several public records carry stale checksums
};

EcgRecord load_channel(const std::filesystem::path& header_path,
                       const std::filesystem::path& dat_path, int channel,
                       const LoadOptions& opts = {});

// Convenience: .dat path derived from the signal spec next to the header.
EcgRecord load_channel(const std::filesystem::path& header_path, int channel,
                       const LoadOptions& opts = {});

// One floating-point sample per line (or a chosen whitespace-separated column).
EcgRecord load_plaintext(const std::filesystem::path& path, double fs, int column = 0);

// Keep records whose comments contain an allowlisted pathology substring
// (case-insensitive), at most one record per subject (lexicographically
// first record name wins).
std::vector<RecordMeta> filter_subjects_by_pathology(const std::vector<RecordMeta>& metas,
                                                     const std::vector<std::string>& allowlist);

// Subject id for a header path: parent directory name when it looks like a
// per-subject folder (PTB layout), else the record name.
std::string derive_subject_id(const std::filesystem::path& header_path,
                              const std::string& record_name);

}  // namespace ekmid::wfdb

#endif
