#ifndef EKMID_EVALMETRICS_HPP
#define EKMID_EVALMETRICS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ekmid::eval {

struct ConfusionMatrix {
    int classes = 0;
    std::vector<int64_t> counts;  // rows = true class, cols = predicted

    explicit ConfusionMatrix(int c = 0) : classes(c), counts(static_cast<size_t>(c) * c, 0) {}
    int64_t& at(int t, int p) { return counts[static_cast<size_t>(t) * classes + p]; }
    int64_t at(int t, int p) const { return counts[static_cast<size_t>(t) * classes + p]; }
    int64_t total() const;
    int64_t trace() const;
};

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int classes);

struct EvalReport {
    double accuracy = 0.0;
    double far = 0.0;  // micro one-vs-rest false acceptance rate
    double frr = 0.0;  // 1 - accuracy under micro aggregation
    double eer = 0.0;  // (FAR + FRR) / 2
    std::vector<double> ir_at_k;       // rank-k cumulative match, k = 1..5
    double loss = 0.0;                 // mean test loss
    std::vector<double> class_recall;  // per-class
};

// FAR is computed by summing FP and TN over all one-vs-rest reductions; the
// result equals (1 - accuracy) / (C - 1) exactly.
EvalReport metrics(const ConfusionMatrix& cm, double mean_test_loss);

// Rank-k cumulative match rates from per-sample probability vectors.
std::vector<double> rank_k_rates(const std::vector<float>& probabilities,
                                 const std::vector<int>& labels, int classes, int k_max = 5);

struct ReportRow {
    std::string database;
    int bpf = 0;
    int epochs = 0;
    EvalReport report;
};

void report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);
std::string report_table(const ReportRow& row);

}  // namespace ekmid::eval

#endif
