#ifndef EKMID_SIGPROC_HPP
#define EKMID_SIGPROC_HPP

#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "wfdb.hpp"

namespace ekmid::sigproc {

struct RPeakList {
    std::vector<size_t> indices;  // strictly increasing, gaps >= 0.2 s * fs
    double fs = 0.0;
};

struct ConditionedEcg {
    std::vector<double> norm_samples;  // in [0, 1]
    double fs = 0.0;
    double mu = 0.0;  // mean R-R distance, samples
};

// IIR filter coefficients, b over a, a[0] == 1 after normalization.
struct IirCoeffs {
    std::vector<double> b;
    std::vector<double> a;
};

// Butterworth band-pass via bilinear transform of the analog prototype.
IirCoeffs butter_bandpass(int order, double low_hz, double high_hz, double fs);

// Forward-backward filtering with odd-reflection edge padding (zero phase).
std::vector<double> filtfilt(const IirCoeffs& c, const std::vector<double>& x);

// Complex frequency response magnitude at f (Hz) for a digital filter at fs.
double freq_response_mag(const IirCoeffs& c, double f, double fs);

struct PanTompkinsResult {
    std::vector<double> filtered;  // band-passed signal aligned to the input
    RPeakList peaks;
};

// QRS detection: band-pass, derivative, squaring, moving-window integration,
// adaptive dual thresholds with search-back, 200 ms refractory, T-wave slope
// rejection, fiducial refinement on the band-passed signal (+-50 ms).
// allow_empty=false throws when nothing is found (flat input is the valid case
// for an empty result).
PanTompkinsResult pan_tompkins(const wfdb::EcgRecord& record, bool allow_empty = false);

// Subtract the least-squares straight line over the whole signal.
std::vector<double> detrend(const std::vector<double>& signal);

// Min-max map to [0, 1]. Throws NumericError for constant input.
std::vector<double> normalize(const std::vector<double>& signal);

// Arithmetic mean of successive peak index differences.
double mean_peak_distance(const RPeakList& peaks);

ConditionedEcg condition(const std::vector<double>& filtered, const RPeakList& peaks);

}  // namespace ekmid::sigproc

#endif
