#include <random>

#include "doctest.h"
#include "errors.hpp"
#include "testutil.hpp"
#include "wfdb.hpp"

using namespace ekmid;

TEST_CASE("header: two-signal format-212 record") {
    std::string hea =
        "100 2 360 650000\n"
        "100.dat 212 200 11 1024 995 -22131 0 MLII\n"
        "100.dat 212 200 11 1024 1011 20052 0 V5\n"
        "# 69 M 1085 1629 x1\n";
    auto meta = wfdb::parse_header(hea);
    CHECK(meta.record_name == "100");
    CHECK(meta.n_signals == 2);
    CHECK(meta.sampling_frequency == doctest::Approx(360.0));
    CHECK(meta.n_samples == 650000);
    REQUIRE(meta.signals.size() == 2);
    CHECK(meta.signals[0].format == 212);
    CHECK(meta.signals[0].gain == doctest::Approx(200.0));
    CHECK(meta.signals[0].baseline == 1024);  // defaults to adc_zero
    CHECK(meta.signals[1].description == "V5");
    REQUIRE(meta.comments.size() == 1);
}

TEST_CASE("header: explicit baseline in parentheses and units suffix") {
    auto meta = wfdb::parse_header("r 1 1000\nr.dat 16 2000(-5)/mV 16 0 0 0 0 i\n");
    CHECK(meta.signals[0].gain == doctest::Approx(2000.0));
    CHECK(meta.signals[0].baseline == -5);
}

TEST_CASE("header: missing gain falls back to 200") {
    auto meta = wfdb::parse_header("r 1 250\nr.dat 212\n");
    CHECK(meta.signals[0].gain == doctest::Approx(200.0));
}

TEST_CASE("header: zero sampling frequency rejected") {
    CHECK_THROWS_AS(wfdb::parse_header("r 1 0\nr.dat 212\n"), DataError);
}

TEST_CASE("header: unsupported format rejected") {
    CHECK_THROWS_AS(wfdb::parse_header("r 1 250\nr.dat 80\n"), DataError);
}

TEST_CASE("format 212 decode: hand-packed examples") {
    CHECK(wfdb::decode_format212({0xE8, 0x23, 0x01}, 2) == std::vector<int>{1000, 513});
    // 0x800 is the most negative 12-bit value; it sits in the second slot here
    CHECK(wfdb::decode_format212({0x00, 0x80, 0x00}, 2) == std::vector<int>{0, -2048});
    CHECK(wfdb::decode_format212({}, 0).empty());
    CHECK_THROWS_AS(wfdb::decode_format212({0xE8}, 2), DataError);
}

TEST_CASE("format 16 decode: two's complement") {
    CHECK(wfdb::decode_format16({0x01, 0x00}, 1) == std::vector<int>{1});
    CHECK(wfdb::decode_format16({0xFF, 0xFF}, 1) == std::vector<int>{-1});
    CHECK(wfdb::decode_format16({0x00, 0x80}, 1) == std::vector<int>{-32768});
    CHECK_THROWS_AS(wfdb::decode_format16({0x00}, 1), DataError);
}

TEST_CASE("format round-trip against independent packers") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> d12(-2048, 2047);
    std::uniform_int_distribution<int> d16(-32768, 32767);
    std::uniform_int_distribution<int> len(0, 64);
    for (int i = 0; i < 500; ++i) {
        std::vector<int> s(len(rng));
        for (auto& v : s) v = d12(rng);
        CHECK(wfdb::decode_format212(testutil::encode212(s), s.size()) == s);
        for (auto& v : s) v = d16(rng);
        CHECK(wfdb::decode_format16(testutil::encode16(s), s.size()) == s);
    }
}

TEST_CASE("load_channel: calibration and label hint") {
    testutil::TempDir tmp("wfdb");
    // two interleaved channels; channel 0 carries 1000, 1024 at gain 200
    std::vector<int> interleaved{1000, 1024, 1024, 0};
    testutil::write_bytes(tmp.path() / "r.dat", testutil::encode212(interleaved));
    testutil::write_file(tmp.path() / "r.hea",
                         "r 2 250 2\n"
                         "r.dat 212 200 12 0 1000 0 0 ch0\n"
                         "r.dat 212 200(1024) 12 0 0 0 0 ch1\n"
                         "# Reason for admission: Myocarditis\n");
    auto rec = wfdb::load_channel(tmp.path() / "r.hea", 0);
    REQUIRE(rec.samples.size() == 2);
    CHECK(rec.samples[0] == doctest::Approx(5.0));  // (1000 - 0)/200
    CHECK(rec.samples[1] == doctest::Approx(5.12));
    CHECK(rec.fs == doctest::Approx(250.0));
    CHECK(rec.label_hint == "Myocarditis");

    auto ch1 = wfdb::load_channel(tmp.path() / "r.hea", 1);
    CHECK(ch1.samples[0] == doctest::Approx(0.0));  // baseline cancellation
    CHECK(ch1.samples[1] == doctest::Approx((0 - 1024) / 200.0));

    CHECK_THROWS_AS(wfdb::load_channel(tmp.path() / "r.hea", 2), DataError);
}

TEST_CASE("load_plaintext: columns and failure modes") {
    testutil::TempDir tmp("txt");
    testutil::write_file(tmp.path() / "a.txt", "# header\n0.1 9\n-0.2 9\n0.3 9\n");
    auto rec = wfdb::load_plaintext(tmp.path() / "a.txt", 250.0, 0);
    CHECK(rec.samples == std::vector<double>{0.1, -0.2, 0.3});
    CHECK(rec.subject_id == "a");

    testutil::write_file(tmp.path() / "b.txt", "");
    CHECK_THROWS_AS(wfdb::load_plaintext(tmp.path() / "b.txt", 250.0), DataError);
    testutil::write_file(tmp.path() / "c.txt", "0.1\nnope\n");
    CHECK_THROWS_AS(wfdb::load_plaintext(tmp.path() / "c.txt", 250.0), DataError);
}

TEST_CASE("pathology filter: allowlist, case, one record per subject") {
    auto make = [](std::string rec, std::string subj, std::string comment) {
        wfdb::RecordMeta m;
        m.record_name = std::move(rec);
        m.subject_id = std::move(subj);
        m.comments = {std::move(comment)};
        return m;
    };
    std::vector<wfdb::RecordMeta> metas{
        make("p1_b", "p1", "# Reason for admission: Myocarditis"),
        make("p1_a", "p1", "# Reason for admission: MYOCARDITIS"),
        make("p2_a", "p2", "# Healthy control"),
        make("p3_a", "p3", "# Reason for admission: Dysrhythmia"),
    };
    auto kept = wfdb::filter_subjects_by_pathology(metas, {"myocarditis", "dysrhythmia"});
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].record_name == "p1_a");  // lexicographically first for p1
    CHECK(kept[1].record_name == "p3_a");
}

TEST_CASE("subject id derivation") {
    CHECK(wfdb::derive_subject_id("db/patient001/s0010_re.hea", "s0010_re") == "patient001");
    CHECK(wfdb::derive_subject_id("db/100.hea", "100") == "100");
}
