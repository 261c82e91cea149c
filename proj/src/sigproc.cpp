#include "sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace ekmid::sigproc {

namespace {

using cd = std::complex<double>;

// Polynomial coefficients (descending powers) from roots; result is real for
// conjugate-symmetric root sets.
std::vector<double> poly_from_roots(const std::vector<cd>& roots) {
    std::vector<cd> c{1.0};
    for (const auto& r : roots) {
        std::vector<cd> next(c.size() + 1, 0.0);
        for (size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= c[i] * r;
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    for (size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

// Solve M x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(std::vector<std::vector<double>> M, std::vector<double> rhs) {
    size_t n = rhs.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        std::swap(M[col], M[piv]);
        std::swap(rhs[col], rhs[piv]);
        double d = M[col][col];
        for (size_t r = col + 1; r < n; ++r) {
            double f = M[r][col] / d;
            for (size_t c2 = col; c2 < n; ++c2) M[r][c2] -= f * M[col][c2];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (size_t j = i + 1; j < n; ++j) s -= M[i][j] * x[j];
        x[i] = s / M[i][i];
    }
    return x;
}

// Steady-state initial filter state for a unit step input (direct form II
// transposed), so filtfilt startup transients vanish.
std::vector<double> lfilter_zi(const IirCoeffs& c) {
    size_t n = c.a.size();
    size_t m = n - 1;
    std::vector<std::vector<double>> M(m, std::vector<double>(m, 0.0));
    std::vector<double> rhs(m, 0.0);
    // M = I - companion(a)^T
    for (size_t i = 0; i < m; ++i) {
        M[i][0] = (i == 0 ? 1.0 : 0.0) + c.a[i + 1];
        for (size_t j = 1; j < m; ++j) {
            double a_t = (i == j - 1) ? 1.0 : 0.0;
            M[i][j] = (i == j ? 1.0 : 0.0) - a_t;
        }
        rhs[i] = c.b[i + 1] - c.a[i + 1] * c.b[0];
    }
    return solve_linear(std::move(M), std::move(rhs));
}

std::vector<double> lfilter(const IirCoeffs& c, const std::vector<double>& x,
                            std::vector<double> z) {
    size_t m = c.a.size() - 1;
    z.resize(m, 0.0);
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double xi = x[i];
        double yi = c.b[0] * xi + z[0];
        for (size_t k = 0; k + 1 < m; ++k) z[k] = c.b[k + 1] * xi + z[k + 1] - c.a[k + 1] * yi;
        z[m - 1] = c.b[m] * xi - c.a[m] * yi;
        y[i] = yi;
    }
    return y;
}

// Centered moving average over a window of w samples.
std::vector<double> moving_average_centered(const std::vector<double>& x, size_t w) {
    size_t n = x.size();
    std::vector<double> out(n, 0.0);
    if (w < 1) w = 1;
    size_t left = (w - 1) / 2, right = w / 2;
    double acc = 0.0;
    size_t lo = 0, hi = 0;  // [lo, hi) currently summed
    for (size_t i = 0; i < n; ++i) {
        size_t want_lo = i > left ? i - left : 0;
        size_t want_hi = std::min(n, i + right + 1);
        while (hi < want_hi) acc += x[hi++];
        while (lo < want_lo) acc -= x[lo++];
        out[i] = acc / static_cast<double>(hi - lo);
    }
    return out;
}

}  // namespace

IirCoeffs butter_bandpass(int order, double low_hz, double high_hz, double fs) {
    if (order < 1 || low_hz <= 0 || high_hz <= low_hz || high_hz >= fs / 2)
        throw ConfigError("invalid band-pass parameters");
    double fs2 = 2.0 * fs;
    double w1 = fs2 * std::tan(M_PI * low_hz / fs);
    double w2 = fs2 * std::tan(M_PI * high_hz / fs);
    double w0 = std::sqrt(w1 * w2);
    double bw = w2 - w1;

    std::vector<cd> apoles;
    for (int k = 0; k < order; ++k) {
        double theta = M_PI / 2.0 + M_PI * (2.0 * k + 1.0) / (2.0 * order);
        cd p = std::polar(1.0, theta);
        cd pb = p * (bw / 2.0);
        cd d = std::sqrt(pb * pb - cd(w0 * w0, 0.0));
        apoles.push_back(pb + d);
        apoles.push_back(pb - d);
    }
    // order zeros at s=0, gain bw^order
    double k_s = std::pow(bw, order);

    // bilinear transform
    std::vector<cd> zpoles, zzeros;
    cd num(1.0, 0.0), den(1.0, 0.0);
    for (const auto& p : apoles) {
        zpoles.push_back((cd(fs2, 0) + p) / (cd(fs2, 0) - p));
        den *= (cd(fs2, 0) - p);
    }
    for (int k = 0; k < order; ++k) {
        zzeros.push_back(cd(1.0, 0.0));   // s = 0 maps to z = 1
        num *= cd(fs2, 0.0);              // (fs2 - 0)
        zzeros.push_back(cd(-1.0, 0.0));  // zeros at infinity map to z = -1
    }
    double k_z = k_s * (num / den).real();

    IirCoeffs c;
    c.b = poly_from_roots(zzeros);
    for (auto& v : c.b) v *= k_z;
    c.a = poly_from_roots(zpoles);
    double a0 = c.a[0];
    for (auto& v : c.a) v /= a0;
    for (auto& v : c.b) v /= a0;
    return c;
}

double freq_response_mag(const IirCoeffs& c, double f, double fs) {
    cd z = std::polar(1.0, -2.0 * M_PI * f / fs);
    cd num = 0.0, den = 0.0, zp = 1.0;
    for (size_t i = 0; i < c.b.size(); ++i) {
        num += c.b[i] * zp;
        zp *= z;
    }
    zp = 1.0;
    for (size_t i = 0; i < c.a.size(); ++i) {
        den += c.a[i] * zp;
        zp *= z;
    }
    return std::abs(num / den);
}

std::vector<double> filtfilt(const IirCoeffs& c, const std::vector<double>& x) {
    size_t ntaps = std::max(c.a.size(), c.b.size());
    size_t padlen = 3 * ntaps;
    if (x.size() <= padlen) throw DataError("TooShort: signal shorter than filter padding");

    std::vector<double> ext;
    ext.reserve(x.size() + 2 * padlen);
    for (size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (size_t i = 2; i <= padlen + 1; ++i) ext.push_back(2.0 * x.back() - x[x.size() - i]);

    auto zi = lfilter_zi(c);
    auto scale_state = [&](double x0) {
        std::vector<double> z = zi;
        for (auto& v : z) v *= x0;
        return z;
    };
    auto y = lfilter(c, ext, scale_state(ext.front()));
    std::reverse(y.begin(), y.end());
    y = lfilter(c, y, scale_state(y.front()));
    std::reverse(y.begin(), y.end());
    return std::vector<double>(y.begin() + padlen, y.begin() + padlen + x.size());
}

std::vector<double> detrend(const std::vector<double>& signal) {
    size_t n = signal.size();
    if (n < 2) throw DataError("TooShort: detrend needs at least 2 samples");
    // least-squares line x = a*t + b, t = 0..n-1
    double st = (n - 1) * n / 2.0;
    double stt = (n - 1) * n * (2.0 * n - 1.0) / 6.0;
    double sx = std::accumulate(signal.begin(), signal.end(), 0.0);
    double stx = 0.0;
    for (size_t i = 0; i < n; ++i) stx += i * signal[i];
    double denom = n * stt - st * st;
    double a = (n * stx - st * sx) / denom;
    double b = (sx - a * st) / n;
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = signal[i] - (a * i + b);
    return out;
}

std::vector<double> normalize(const std::vector<double>& signal) {
    auto [mn_it, mx_it] = std::minmax_element(signal.begin(), signal.end());
    double mn = *mn_it, mx = *mx_it;
    if (mx <= mn) throw NumericError("ConstantSignal: cannot normalize");
    std::vector<double> out(signal.size());
    double inv = 1.0 / (mx - mn);
    for (size_t i = 0; i < signal.size(); ++i) out[i] = (signal[i] - mn) * inv;
    return out;
}

double mean_peak_distance(const RPeakList& peaks) {
    if (peaks.indices.size() < 2) throw DataError("TooFewPeaks: need at least 2 R peaks");
    double sum = 0.0;
    for (size_t i = 1; i < peaks.indices.size(); ++i)
        sum += static_cast<double>(peaks.indices[i] - peaks.indices[i - 1]);
    return sum / static_cast<double>(peaks.indices.size() - 1);
}

ConditionedEcg condition(const std::vector<double>& filtered, const RPeakList& peaks) {
    ConditionedEcg out;
    out.fs = peaks.fs;
    out.norm_samples = normalize(detrend(filtered));
    out.mu = peaks.indices.size() >= 2 ? mean_peak_distance(peaks) : 0.0;
    return out;
}

namespace {

// Original integer-coefficient cascade, valid at fs = 200 Hz. Returns the
// band-passed signal shifted left by the cascade group delay (21 samples).
std::vector<double> integer_bandpass_200(const std::vector<double>& x) {
    size_t n = x.size();
    std::vector<double> lp(n, 0.0), hp(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double v = x[i];
        if (i >= 1) v += 2.0 * lp[i - 1];
        if (i >= 2) v -= lp[i - 2];
        if (i >= 6) v -= 2.0 * x[i - 6];
        if (i >= 12) v += x[i - 12];
        lp[i] = v;
    }
    for (size_t i = 0; i < n; ++i) {
        double v = -lp[i] / 32.0;
        if (i >= 1) v += hp[i - 1];
        if (i >= 16) v += lp[i - 16];
        if (i >= 17) v -= lp[i - 17];
        if (i >= 32) v += lp[i - 32] / 32.0;
        hp[i] = v;
    }
    const size_t delay = 21;  // 5 (LP) + 16 (HP)
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = hp[std::min(n - 1, i + delay)] / 36.0;
    return out;
}

}  // namespace

PanTompkinsResult pan_tompkins(const wfdb::EcgRecord& record, bool allow_empty) {
    const auto& x = record.samples;
    double fs = record.fs;
    size_t n = x.size();
    if (fs < 100.0) throw DataError("sampling frequency below 100 Hz");
    if (n < static_cast<size_t>(2.0 * fs)) throw DataError("TooShort: need at least 2 s of signal");

    std::vector<double> bp;
    if (fs == 200.0) {
        bp = integer_bandpass_200(x);
    } else {
        bp = filtfilt(butter_bandpass(3, 5.0, 15.0, fs), x);
    }

    // five-point derivative, centered (delay compensated)
    std::vector<double> deriv(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        auto at = [&](long j) { return bp[static_cast<size_t>(std::clamp<long>(j, 0, n - 1))]; };
        long li = static_cast<long>(i);
        deriv[i] = (2.0 * at(li + 2) + at(li + 1) - at(li - 1) - 2.0 * at(li - 2)) / 8.0;
    }
    std::vector<double> sq(n);
    for (size_t i = 0; i < n; ++i) sq[i] = deriv[i] * deriv[i];

    size_t win = std::max<size_t>(1, static_cast<size_t>(std::lround(0.15 * fs)));
    auto mwi = moving_average_centered(sq, win);

    const size_t refractory = static_cast<size_t>(std::lround(0.2 * fs));
    const size_t twave_win = static_cast<size_t>(std::lround(0.36 * fs));
    const size_t slope_half = static_cast<size_t>(std::lround(0.075 * fs));

    // candidate fiducial marks: local maxima of the integrated signal
    struct Cand {
        size_t idx;
        double val;
    };
    std::vector<Cand> cands;
    for (size_t i = 1; i + 1 < n; ++i) {
        if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) cands.push_back({i, mwi[i]});
    }
    // The integration window is wider than the QRS, so each beat produces a
    // noisy plateau in the integrated signal and the first local maximum sits
    // toward its left edge. Centre every candidate on its plateau so the
    // fiducial refinement window below actually contains the R peak.
    for (auto& c : cands) {
        double floor_v = 0.75 * c.val;
        size_t lo = c.idx, hi = c.idx;
        while (lo > 0 && mwi[lo - 1] >= floor_v && c.idx - lo < win) --lo;
        while (hi + 1 < n && mwi[hi + 1] >= floor_v && hi - c.idx < win) ++hi;
        c.idx = (lo + hi) / 2;
    }

    // threshold training on the first 2 s
    size_t init_end = std::min(n, static_cast<size_t>(2.0 * fs));
    double init_max = 0.0, init_mean = 0.0;
    for (size_t i = 0; i < init_end; ++i) {
        init_max = std::max(init_max, mwi[i]);
        init_mean += mwi[i];
    }
    init_mean /= static_cast<double>(std::max<size_t>(1, init_end));
    double spki = init_max;
    double npki = init_mean * 0.5;

    auto max_slope_near = [&](size_t c) {
        size_t lo = c > slope_half ? c - slope_half : 0;
        size_t hi = std::min(n, c + slope_half + 1);
        double m = 0.0;
        for (size_t i = lo; i < hi; ++i) m = std::max(m, std::abs(deriv[i]));
        return m;
    };

    std::vector<size_t> qrs;  // MWI indices
    std::vector<double> rr_hist;
    double last_slope = 0.0;
    std::vector<Cand> since_last;  // sub-threshold candidates since the last QRS

    auto rr_average = [&]() {
        if (rr_hist.empty()) return 0.0;
        size_t k = std::min<size_t>(8, rr_hist.size());
        double s = 0.0;
        for (size_t i = rr_hist.size() - k; i < rr_hist.size(); ++i) s += rr_hist[i];
        return s / static_cast<double>(k);
    };

    auto accept = [&](size_t idx, double val, bool searchback) {
        if (!qrs.empty()) rr_hist.push_back(static_cast<double>(idx - qrs.back()));
        qrs.push_back(idx);
        if (searchback)
            spki = 0.25 * val + 0.75 * spki;
        else
            spki = 0.125 * val + 0.875 * spki;
        last_slope = max_slope_near(idx);
        since_last.clear();
    };

    for (const auto& c : cands) {
        double thr1 = npki + 0.25 * (spki - npki);

        // search-back when the expected beat never arrived
        double rr_avg = rr_average();
        if (!qrs.empty() && rr_avg > 0.0 &&
            static_cast<double>(c.idx - qrs.back()) > 1.66 * rr_avg) {
            const Cand* best = nullptr;
            for (const auto& s : since_last) {
                if (s.idx <= qrs.back() + refractory) continue;
                if (s.val > 0.5 * thr1 && (!best || s.val > best->val)) best = &s;
            }
            if (best) accept(best->idx, best->val, true);
        }

        if (!qrs.empty() && c.idx <= qrs.back() + refractory) {
            continue;  // inside the refractory period of the accepted beat
        }
        if (c.val > thr1) {
            bool t_wave = false;
            if (!qrs.empty() && c.idx - qrs.back() < twave_win) {
                double slope = max_slope_near(c.idx);
                if (slope < 0.5 * last_slope) t_wave = true;
            }
            if (t_wave) {
                npki = 0.125 * c.val + 0.875 * npki;
                since_last.push_back(c);
            } else {
                accept(c.idx, c.val, false);
            }
        } else {
            npki = 0.125 * c.val + 0.875 * npki;
            since_last.push_back(c);
        }
    }

    // refine each fiducial to the band-passed local maximum within +-50 ms
    size_t refine = static_cast<size_t>(std::lround(0.05 * fs));
    std::vector<size_t> refined;
    for (size_t idx : qrs) {
        size_t lo = idx > refine ? idx - refine : 0;
        size_t hi = std::min(n, idx + refine + 1);
        size_t best = lo;
        for (size_t i = lo; i < hi; ++i)
            if (bp[i] > bp[best]) best = i;
        refined.push_back(best);
    }
    std::sort(refined.begin(), refined.end());
    // refinement may merge neighbours: re-enforce refractory, keeping the
    // stronger band-passed peak
    std::vector<size_t> final_peaks;
    for (size_t idx : refined) {
        if (!final_peaks.empty() && idx < final_peaks.back() + refractory) {
            if (bp[idx] > bp[final_peaks.back()]) final_peaks.back() = idx;
        } else {
            final_peaks.push_back(idx);
        }
    }

    if (final_peaks.empty() && !allow_empty)
        throw DataError("NoPeaksFound: no QRS complexes detected");

    PanTompkinsResult res;
    res.filtered = std::move(bp);
    res.peaks.indices = std::move(final_peaks);
    res.peaks.fs = fs;
    return res;
}

}  // namespace ekmid::sigproc
