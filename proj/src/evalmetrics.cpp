#include "evalmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ekmid::eval {

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

int64_t ConfusionMatrix::trace() const {
    int64_t s = 0;
    for (int i = 0; i < classes; ++i) s += at(i, i);
    return s;
}

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels,
                          int classes) {
    if (predictions.size() != labels.size()) throw DataError("predictions/labels size mismatch");
    ConfusionMatrix cm(classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes || predictions[i] < 0 ||
            predictions[i] >= classes)
            throw DataError("class index out of range");
        ++cm.at(labels[i], predictions[i]);
    }
    return cm;
}

EvalReport metrics(const ConfusionMatrix& cm, double mean_test_loss) {
    int64_t total = cm.total();
    if (total == 0) throw DataError("EmptyMatrix: confusion matrix has no samples");
    if (cm.classes < 2) throw DataError("need at least 2 classes");

    EvalReport r;
    r.loss = mean_test_loss;
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
    r.frr = 1.0 - r.accuracy;

    // micro one-vs-rest: sum FP and FP+TN over all class reductions
    int64_t fp_sum = 0, fp_tn_sum = 0;
    for (int c = 0; c < cm.classes; ++c) {
        int64_t col = 0, row = 0;
        for (int t = 0; t < cm.classes; ++t) {
            col += cm.at(t, c);
            row += cm.at(c, t);
        }
        int64_t tp = cm.at(c, c);
        int64_t fp = col - tp;
        int64_t fn = row - tp;
        int64_t tn = total - tp - fp - fn;
        fp_sum += fp;
        fp_tn_sum += fp + tn;
    }
    r.far = static_cast<double>(fp_sum) / static_cast<double>(fp_tn_sum);
    r.eer = (r.far + r.frr) / 2.0;

    r.class_recall.resize(cm.classes, 0.0);
    for (int c = 0; c < cm.classes; ++c) {
        int64_t row = 0;
        for (int p = 0; p < cm.classes; ++p) row += cm.at(c, p);
        r.class_recall[c] = row > 0 ? static_cast<double>(cm.at(c, c)) / row : 0.0;
    }
    return r;
}

std::vector<double> rank_k_rates(const std::vector<float>& probabilities,
                                 const std::vector<int>& labels, int classes, int k_max) {
    if (labels.empty()) throw DataError("EmptyMatrix: no samples for rank-k rates");
    k_max = std::min(k_max, classes);
    std::vector<int64_t> hits(k_max, 0);
    for (size_t i = 0; i < labels.size(); ++i) {
        const float* p = probabilities.data() + i * static_cast<size_t>(classes);
        float own = p[labels[i]];
        // rank = 1 + number of classes scoring strictly higher (ties do not hurt,
        // lower class index wins on exact ties as in predict)
        int rank = 1;
        for (int c = 0; c < classes; ++c) {
            if (p[c] > own || (p[c] == own && c < labels[i])) ++rank;
        }
        for (int k = rank; k <= k_max; ++k) ++hits[k - 1];
    }
    std::vector<double> out(k_max);
    for (int k = 0; k < k_max; ++k)
        out[k] = static_cast<double>(hits[k]) / static_cast<double>(labels.size());
    return out;
}

namespace {

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

}  // namespace

void report_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write report: " + path.string());
    f << "database,bpf,epochs,loss,accuracy,FAR,FRR,EER,IR@1,IR@2,IR@3,IR@4,IR@5\n";
    for (const auto& row : rows) {
        char loss[32];
        std::snprintf(loss, sizeof loss, "%.4f", row.report.loss);
        f << row.database << ',' << row.bpf << ',' << row.epochs << ',' << loss << ','
          << pct(row.report.accuracy) << ',' << pct(row.report.far) << ',' << pct(row.report.frr)
          << ',' << pct(row.report.eer);
        for (int k = 0; k < 5; ++k) {
            f << ',';
            if (k < static_cast<int>(row.report.ir_at_k.size())) f << pct(row.report.ir_at_k[k]);
        }
        f << '\n';
    }
}

std::string report_table(const ReportRow& row) {
    std::ostringstream os;
    char loss[32];
    std::snprintf(loss, sizeof loss, "%.4f", row.report.loss);
    os << "database  bpf  epochs  loss    accuracy(%)  FAR(%)  FRR(%)  EER(%)\n";
    os << row.database << "  " << row.bpf << "  " << row.epochs << "  " << loss << "  "
       << pct(row.report.accuracy) << "  " << pct(row.report.far) << "  " << pct(row.report.frr)
       << "  " << pct(row.report.eer) << "\n";
    if (!row.report.ir_at_k.empty()) {
        os << "IR@k(%):";
        for (size_t k = 0; k < row.report.ir_at_k.size(); ++k)
            os << " " << (k + 1) << ":" << pct(row.report.ir_at_k[k]);
        os << "\n";
    }
    return os.str();
}

}  // namespace ekmid::eval
