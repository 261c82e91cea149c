#include <algorithm>
#include <cmath>

#include "dataset.hpp"
#include "doctest.h"
#include "ekm.hpp"
#include "errors.hpp"
#include "testutil.hpp"

using namespace ekmid;

namespace {

sigproc::ConditionedEcg ramp_ecg(size_t n, double mu, double fs = 250.0) {
    sigproc::ConditionedEcg e;
    e.fs = fs;
    e.mu = mu;
    e.norm_samples.resize(n);
    for (size_t i = 0; i < n; ++i) e.norm_samples[i] = static_cast<double>(i) / (n - 1);
    return e;
}

}  // namespace

TEST_CASE("parameter validation") {
    ekm::EkmParams p;
    CHECK_NOTHROW(p.validate());
    p.bpf = 1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.bpf = 3;
    p.alpha_i = 0.8;
    p.alpha_e = 0.8;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.alpha_i = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("slicing: peaks at 500/700/900 with mu 200") {
    auto ecg = ramp_ecg(1200, 200.0);
    sigproc::RPeakList peaks;
    peaks.fs = 250.0;
    peaks.indices = {500, 700, 900};
    ekm::EkmParams p;  // bpf 3, 0.2/0.3
    auto m = ekm::build_ekm(ecg, peaks, 0, p);
    CHECK(m.rows == 3);
    CHECK(m.cols == 100);  // floor(0.2*200) + floor(0.3*200)
    for (int c = 0; c < 100; ++c) {
        CHECK(m.at(0, c) == doctest::Approx(ecg.norm_samples[460 + c]));
        CHECK(m.at(1, c) == doctest::Approx(ecg.norm_samples[660 + c]));
        CHECK(m.at(2, c) == doctest::Approx(ecg.norm_samples[860 + c]));
    }
}

TEST_CASE("slicing: window leaving the record throws") {
    auto ecg = ramp_ecg(1000, 200.0);
    sigproc::RPeakList peaks;
    peaks.fs = 250.0;
    peaks.indices = {10, 210, 410};
    CHECK_THROWS_AS(ekm::build_ekm(ecg, peaks, 0, ekm::EkmParams{}), DataError);
    peaks.indices = {500, 700, 960};  // 960 + 60 = 1020 > 1000
    CHECK_THROWS_AS(ekm::build_ekm(ecg, peaks, 0, ekm::EkmParams{}), DataError);
}

TEST_CASE("slicing: rows peak at about floor(alpha_i*mu) on clean beats") {
    auto synth = dataset::synth_ecg(dataset::SynthSubjectParams{}, 250.0, 30.0, 4, "s");
    auto det = sigproc::pan_tompkins(synth.record);
    auto cond = sigproc::condition(det.filtered, det.peaks);
    auto m = ekm::build_ekm(cond, det.peaks, 3, ekm::EkmParams{});
    int expect = static_cast<int>(std::floor(0.2 * cond.mu));
    for (int r = 0; r < m.rows; ++r) {
        int arg = 0;
        for (int c = 1; c < m.cols; ++c)
            if (m.at(r, c) > m.at(r, arg)) arg = c;
        CHECK(std::abs(arg - expect) <= 3);
    }
}

TEST_CASE("standardize endpoints and fixed point") {
    ekm::EkmMatrix m;
    m.rows = 1;
    m.cols = 3;
    m.values = {0.0, 0.5, 1.0};
    auto s = ekm::standardize(m);
    CHECK(s.values[0] == doctest::Approx(-1.0));
    CHECK(s.values[1] == doctest::Approx(0.0));
    CHECK(s.values[2] == doctest::Approx(1.0));
    auto s2 = ekm::standardize(s);  // already spans [-1,1]
    for (size_t i = 0; i < 3; ++i) CHECK(s2.values[i] == doctest::Approx(s.values[i]));

    m.values = {0.7, 0.7, 0.7};
    CHECK_THROWS_AS(ekm::standardize(m), NumericError);
}

TEST_CASE("colormap anchors and interpolation") {
    CHECK(ekm::colormap(0.0) == std::array<uint8_t, 3>{0, 0, 128});
    CHECK(ekm::colormap(0.25) == std::array<uint8_t, 3>{0, 255, 255});
    CHECK(ekm::colormap(0.5) == std::array<uint8_t, 3>{0, 255, 0});
    CHECK(ekm::colormap(0.75) == std::array<uint8_t, 3>{255, 255, 0});
    CHECK(ekm::colormap(1.0) == std::array<uint8_t, 3>{128, 0, 0});
    // v = 0.125 -> t = 0.5625, a quarter of the way from green to yellow
    CHECK(ekm::colormap(0.5625) == std::array<uint8_t, 3>{64, 255, 0});
}

TEST_CASE("rendering: constant -1 matrix is all dark blue") {
    ekm::EkmMatrix m;
    m.rows = 3;
    m.cols = 100;
    m.values.assign(300, -1.0);
    auto img = ekm::render_heatmap(m, 25, 37);
    CHECK(img.raster.height == 25);
    CHECK(img.raster.width == 37);
    for (size_t i = 0; i < img.raster.pixels.size(); i += 3) {
        CHECK(img.raster.pixels[i] == 0);
        CHECK(img.raster.pixels[i + 1] == 0);
        CHECK(img.raster.pixels[i + 2] == 128);
    }
}

TEST_CASE("rendering determinism") {
    ekm::EkmMatrix m;
    m.rows = 3;
    m.cols = 100;
    m.values.resize(300);
    for (size_t i = 0; i < m.values.size(); ++i)
        m.values[i] = std::sin(0.17 * static_cast<double>(i)) * 0.99;
    auto a = ekm::render_heatmap(m, 25, 37);
    auto b = ekm::render_heatmap(m, 25, 37);
    CHECK(a.raster.pixels == b.raster.pixels);
}

TEST_CASE("dataset generation: counts, split, manifest round-trip") {
    testutil::TempDir tmp("ekmds");
    std::vector<wfdb::EcgRecord> records;
    for (int i = 0; i < 2; ++i) {
        auto sp = dataset::default_synth_params(i);
        records.push_back(dataset::synth_ecg(sp, 250.0, 120.0, 100 + i,
                                             "s0" + std::to_string(i))
                              .record);
    }
    ekm::EkmParams params;
    ekm::GenerationConfig gen;
    gen.out_root = tmp.path() / "ds";
    gen.max_ekms_per_subject = 10;
    gen.train_fraction = 0.8;
    gen.threads = 1;
    auto manifest = ekm::generate_ekm_dataset(records, params, gen);

    REQUIRE(manifest.per_subject.size() == 2);
    for (const auto& [subject, st] : manifest.per_subject) CHECK(st.ekms == 10);
    CHECK(manifest.entries.size() == 20);
    for (const auto& e : manifest.entries) {
        CHECK(e.bpf == 3);
        CHECK(std::filesystem::exists(gen.out_root / e.path));
        auto img = pngio::read_rgb8(gen.out_root / e.path);
        CHECK(img.height == 25);
        CHECK(img.width == 37);
    }
    // chronological split: first 8 of each subject train, last 2 test
    for (const auto& subject : {std::string("s00"), std::string("s01")}) {
        std::vector<ekm::ManifestEntry> mine;
        for (const auto& e : manifest.entries)
            if (e.subject_id == subject) mine.push_back(e);
        REQUIRE(mine.size() == 10);
        for (size_t i = 0; i + 1 < mine.size(); ++i)
            CHECK(mine[i].window_start_peak < mine[i + 1].window_start_peak);
        for (size_t i = 0; i < 8; ++i) CHECK(mine[i].split == "train");
        for (size_t i = 8; i < 10; ++i) CHECK(mine[i].split == "test");
    }

    auto loaded = ekm::read_manifest(gen.out_root);
    REQUIRE(loaded.entries.size() == manifest.entries.size());
    for (size_t i = 0; i < loaded.entries.size(); ++i) {
        CHECK(loaded.entries[i].subject_id == manifest.entries[i].subject_id);
        CHECK(loaded.entries[i].split == manifest.entries[i].split);
        CHECK(loaded.entries[i].path == manifest.entries[i].path);
        CHECK(loaded.entries[i].window_start_peak == manifest.entries[i].window_start_peak);
        CHECK(loaded.entries[i].bpf == manifest.entries[i].bpf);
        CHECK(loaded.entries[i].mu == doctest::Approx(manifest.entries[i].mu));
    }
}

TEST_CASE("dataset generation: uncapped count is floor(peaks/bpf) minus skips") {
    testutil::TempDir tmp("ekmfloor");
    auto sp = dataset::SynthSubjectParams{};
    auto synth = dataset::synth_ecg(sp, 250.0, 40.0, 42, "s00");
    auto det = sigproc::pan_tompkins(synth.record);
    size_t peaks = det.peaks.indices.size();

    ekm::GenerationConfig gen;
    gen.out_root = tmp.path() / "ds";
    gen.threads = 1;
    std::vector<wfdb::EcgRecord> one{synth.record,
                                     dataset::synth_ecg(dataset::default_synth_params(1), 250.0,
                                                        40.0, 43, "s01")
                                         .record};
    auto manifest = ekm::generate_ekm_dataset(one, ekm::EkmParams{}, gen);
    const auto& st = manifest.per_subject[0].second;
    CHECK(manifest.per_subject[0].first == "s00");
    CHECK(st.ekms + st.skipped_out_of_bounds + st.skipped_constant == peaks / 3);
    CHECK(st.skipped_constant == 0);
    CHECK(st.skipped_out_of_bounds <= 2);  // only edge windows can fall out
}
