#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dataset.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "sigproc.hpp"

using namespace ekmid;

TEST_CASE("butterworth band-pass frequency response") {
    auto c = sigproc::butter_bandpass(3, 5.0, 15.0, 250.0);
    REQUIRE(c.a.size() == 7);
    REQUIRE(c.b.size() == 7);
    CHECK(c.a[0] == doctest::Approx(1.0));
    // pass band near unity, stop bands strongly attenuated
    CHECK(sigproc::freq_response_mag(c, 9.0, 250.0) > 0.9);
    CHECK(sigproc::freq_response_mag(c, 5.0, 250.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    CHECK(sigproc::freq_response_mag(c, 15.0, 250.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    CHECK(sigproc::freq_response_mag(c, 0.5, 250.0) < 0.01);
    CHECK(sigproc::freq_response_mag(c, 50.0, 250.0) < 0.05);
}

TEST_CASE("filtfilt is zero phase") {
    const double fs = 250.0;
    auto c = sigproc::butter_bandpass(3, 5.0, 15.0, fs);
    std::vector<double> x(2500);
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * M_PI * 10.0 * i / fs);
    auto y = sigproc::filtfilt(c, x);
    REQUIRE(y.size() == x.size());
    // compare against the input away from the edges: same phase, gain near the
    // squared single-pass magnitude at 10 Hz
    double g = sigproc::freq_response_mag(c, 10.0, fs);
    double expected = g * g;
    for (size_t i = 500; i < 2000; ++i)
        CHECK(y[i] == doctest::Approx(expected * x[i]).epsilon(0.05).scale(1.0));
}

TEST_CASE("detrend removes straight lines") {
    auto z = sigproc::detrend({1, 2, 3, 4});
    for (double v : z) CHECK(std::abs(v) < 1e-12);
    z = sigproc::detrend({5, 5, 5, 5, 5});
    for (double v : z) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("detrend matches an independent normal-equations fit") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> x(400);
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(0.05 * i) + 0.01 * i - 2.0 + noise(rng);
    auto z = sigproc::detrend(x);
    // brute-force least squares on (i, x[i])
    double n = static_cast<double>(x.size());
    double si = 0, sx = 0, sii = 0, six = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        si += i;
        sx += x[i];
        sii += static_cast<double>(i) * i;
        six += i * x[i];
    }
    double slope = (n * six - si * sx) / (n * sii - si * si);
    double intercept = (sx - slope * si) / n;
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(z[i] == doctest::Approx(x[i] - (slope * i + intercept)).epsilon(1e-9));
}

TEST_CASE("normalize maps to [0,1]") {
    CHECK(sigproc::normalize({-1, 0, 1}) == std::vector<double>{0, 0.5, 1});
    CHECK_THROWS_AS(sigproc::normalize({5, 5, 5}), NumericError);
}

TEST_CASE("mean peak distance") {
    sigproc::RPeakList p;
    p.fs = 250.0;
    p.indices = {100, 200, 300};
    CHECK(sigproc::mean_peak_distance(p) == doctest::Approx(100.0));
    p.indices = {0, 100, 300};
    CHECK(sigproc::mean_peak_distance(p) == doctest::Approx(150.0));

    // telescoping identity on a random strictly increasing list
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<size_t> step(1, 400);
    p.indices = {step(rng)};
    for (int i = 0; i < 50; ++i) p.indices.push_back(p.indices.back() + step(rng));
    double expected = static_cast<double>(p.indices.back() - p.indices.front()) /
                      static_cast<double>(p.indices.size() - 1);
    CHECK(sigproc::mean_peak_distance(p) == doctest::Approx(expected));

    p.indices = {100};
    CHECK_THROWS_AS(sigproc::mean_peak_distance(p), DataError);
}

TEST_CASE("detector: flat input yields no peaks") {
    wfdb::EcgRecord rec;
    rec.fs = 250.0;
    rec.samples.assign(2500, 0.0);
    auto res = sigproc::pan_tompkins(rec, /*allow_empty=*/true);
    CHECK(res.peaks.indices.empty());
    CHECK_THROWS_AS(sigproc::pan_tompkins(rec, false), DataError);
}

TEST_CASE("detector: clean synthetic 60 bpm against the generator oracle") {
    auto sp = dataset::SynthSubjectParams{};
    auto synth = dataset::synth_ecg(sp, 250.0, 60.0, 1, "s");
    auto res = sigproc::pan_tompkins(synth.record);
    size_t truth = synth.true_r_peaks.indices.size();
    REQUIRE(truth >= 58);
    CHECK(res.peaks.indices.size() >= truth - 1);
    CHECK(res.peaks.indices.size() <= truth + 1);
    // each detection within +-40 ms of some true peak
    size_t tol = static_cast<size_t>(0.040 * 250.0);
    for (size_t d : res.peaks.indices) {
        bool hit = false;
        for (size_t t : synth.true_r_peaks.indices)
            if ((d > t ? d - t : t - d) <= tol) {
                hit = true;
                break;
            }
        CHECK(hit);
    }
}

TEST_CASE("detector: amplitude scale invariance") {
    auto sp = dataset::default_synth_params(2);
    auto synth = dataset::synth_ecg(sp, 250.0, 30.0, 9, "s");
    auto base = sigproc::pan_tompkins(synth.record);
    auto scaled = synth.record;
    for (auto& v : scaled.samples) v *= 250.0;
    auto res = sigproc::pan_tompkins(scaled);
    CHECK(res.peaks.indices == base.peaks.indices);
}

TEST_CASE("detector: refractory spacing invariant") {
    auto sp = dataset::default_synth_params(4);
    sp.heart_rate_bpm = 170.0;
    sp.noise_std_mv = 0.02;
    auto synth = dataset::synth_ecg(sp, 360.0, 40.0, 5, "s");
    auto res = sigproc::pan_tompkins(synth.record);
    size_t min_gap = static_cast<size_t>(0.2 * 360.0);
    for (size_t i = 1; i < res.peaks.indices.size(); ++i)
        CHECK(res.peaks.indices[i] - res.peaks.indices[i - 1] >= min_gap);
}

TEST_CASE("conditioning pipeline output range and mu") {
    auto sp = dataset::SynthSubjectParams{};
    auto synth = dataset::synth_ecg(sp, 250.0, 30.0, 2, "s");
    auto det = sigproc::pan_tompkins(synth.record);
    auto cond = sigproc::condition(det.filtered, det.peaks);
    REQUIRE(!cond.norm_samples.empty());
    auto [mn, mx] = std::minmax_element(cond.norm_samples.begin(), cond.norm_samples.end());
    CHECK(*mn == doctest::Approx(0.0));
    CHECK(*mx == doctest::Approx(1.0));
    CHECK(cond.mu == doctest::Approx(sigproc::mean_peak_distance(det.peaks)));
    CHECK(cond.fs == doctest::Approx(250.0));
}
