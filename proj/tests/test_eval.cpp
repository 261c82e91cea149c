#include <cmath>
#include <random>

#include "doctest.h"
#include "errors.hpp"
#include "evalmetrics.hpp"
#include "testutil.hpp"

using namespace ekmid;

TEST_CASE("confusion matrix construction") {
    auto cm = eval::confusion({0, 1, 1, 2}, {0, 1, 2, 2}, 3);
    CHECK(cm.total() == 4);
    CHECK(cm.trace() == 3);
    CHECK(cm.at(2, 1) == 1);
    CHECK_THROWS_AS(eval::confusion({3}, {0}, 3), DataError);
}

TEST_CASE("perfect two-class matrix") {
    eval::ConfusionMatrix cm(2);
    cm.at(0, 0) = 10;
    cm.at(1, 1) = 10;
    auto r = eval::metrics(cm, 0.0);
    CHECK(r.accuracy == doctest::Approx(1.0));
    CHECK(r.far == doctest::Approx(0.0));
    CHECK(r.frr == doctest::Approx(0.0));
    CHECK(r.eer == doctest::Approx(0.0));
    CHECK(r.class_recall == std::vector<double>{1.0, 1.0});
}

TEST_CASE("micro one-vs-rest identities over random matrices") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        int C = 2 + static_cast<int>(rng() % 299);
        eval::ConfusionMatrix cm(C);
        int rows = std::min(C, 40);
        for (int t = 0; t < rows; ++t)
            for (int j = 0; j < 6; ++j) cm.at(t, static_cast<int>(rng() % C)) += rng() % 50;
        if (cm.total() == 0) cm.at(0, 0) = 1;
        auto r = eval::metrics(cm, 0.0);
        CHECK(std::abs(r.frr - (1.0 - r.accuracy)) < 1e-12);
        CHECK(std::abs(r.far - (1.0 - r.accuracy) / (C - 1)) < 1e-12);
        CHECK(std::abs(r.eer - (r.far + r.frr) / 2.0) < 1e-12);
    }
}

TEST_CASE("published operating points reproduce their summary rates") {
    // (FAR%, FRR%) -> EER%, with the 2-decimal rounding the sources use
    auto eer = [](double far, double frr) { return (far + frr) / 2.0; };
    CHECK(eer(0.01, 0.15) == doctest::Approx(0.08));
    CHECK(eer(0.04, 2.11) == doctest::Approx(1.075));
    CHECK(eer(0.02, 2.91) == doctest::Approx(1.465));
    CHECK(eer(0.03, 0.81) == doctest::Approx(0.42));
    // FAR consistency at C=47: FRR/(C-1) = 0.0459, printed as 0.04 after truncation
    double far = 2.11 / 46.0;
    CHECK(far == doctest::Approx(0.0459).epsilon(0.01));
    CHECK(std::floor(far * 100.0) / 100.0 == doctest::Approx(0.04));
}

TEST_CASE("empty matrix rejected") {
    eval::ConfusionMatrix cm(3);
    CHECK_THROWS_AS(eval::metrics(cm, 0.0), DataError);
}

TEST_CASE("rank-k rates: perfect, uniform-tie, and monotone") {
    // perfect probabilities
    std::vector<float> probs{0.9f, 0.05f, 0.05f, 0.1f, 0.8f, 0.1f};
    auto r = eval::rank_k_rates(probs, {0, 1}, 3, 3);
    CHECK(r == std::vector<double>{1.0, 1.0, 1.0});

    // all ties: lower class indices fill the ranking first
    std::vector<float> uni(3, 1.0f / 3.0f);
    auto u = eval::rank_k_rates(uni, {2}, 3, 3);
    CHECK(u[0] == doctest::Approx(0.0));
    CHECK(u[1] == doctest::Approx(0.0));
    CHECK(u[2] == doctest::Approx(1.0));

    // monotone non-decreasing in k on random data
    std::mt19937_64 rng(8);
    const int C = 9, N = 40;
    std::vector<float> p(N * C);
    std::vector<int> labels(N);
    for (int i = 0; i < N; ++i) {
        float sum = 0;
        for (int k = 0; k < C; ++k) sum += p[i * C + k] = static_cast<float>(rng() % 100 + 1);
        for (int k = 0; k < C; ++k) p[i * C + k] /= sum;
        labels[i] = static_cast<int>(rng() % C);
    }
    auto m = eval::rank_k_rates(p, labels, C, 5);
    for (size_t k = 1; k < m.size(); ++k) CHECK(m[k] >= m[k - 1]);
    CHECK(m.back() <= 1.0);
}

TEST_CASE("report output formats") {
    testutil::TempDir tmp("report");
    eval::ReportRow row;
    row.database = "synthetic";
    row.bpf = 3;
    row.epochs = 50;
    eval::ConfusionMatrix cm(2);
    cm.at(0, 0) = 95;
    cm.at(0, 1) = 5;
    cm.at(1, 1) = 100;
    row.report = eval::metrics(cm, 0.123);
    row.report.ir_at_k = eval::rank_k_rates({0.9f, 0.1f}, {0}, 2, 5);

    auto table = eval::report_table(row);
    CHECK(table.find("synthetic") != std::string::npos);
    CHECK(table.find("97.50") != std::string::npos);  // accuracy percent

    auto csv = tmp.path() / "report.csv";
    eval::report_csv({row}, csv);
    auto bytes = testutil::read_bytes(csv);
    std::string text(bytes.begin(), bytes.end());
    CHECK(text.find("database") != std::string::npos);
    CHECK(text.find("97.50") != std::string::npos);
}
