#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

/// Count matrix: entry (t, p) counts samples of true class t predicted as p.
inline Tensor confusion_matrix(const std::vector<std::size_t>& true_labels,
                               const std::vector<std::size_t>& predicted_labels,
                               std::size_t k) {
    if (true_labels.size() != predicted_labels.size())
        throw std::invalid_argument("confusion_matrix: label list lengths differ");
    if (k == 0) throw std::invalid_argument("confusion_matrix: K must be >= 1");
    Tensor cm({k, k});
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        if (true_labels[i] >= k)
            throw std::invalid_argument("confusion_matrix: true label " +
                                        std::to_string(true_labels[i]) + " out of range");
        if (predicted_labels[i] >= k)
            throw std::invalid_argument("confusion_matrix: predicted label " +
                                        std::to_string(predicted_labels[i]) + " out of range");
        cm.at(true_labels[i], predicted_labels[i]) += 1.0;
    }
    return cm;
}

struct ClassificationReport {
    std::vector<std::string> class_names;
    std::vector<double> precision, recall, f1;
    std::vector<std::size_t> support;
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

/// Per-class precision/recall/F1 with the zero-division-is-zero convention,
/// plus unweighted (macro) and support-weighted aggregate rows.
inline ClassificationReport report(const Tensor& cm,
                                   const std::vector<std::string>& class_names) {
    require_rank(cm, 2, "report: confusion matrix");
    const std::size_t k = cm.dim(0);
    if (cm.dim(1) != k) throw std::invalid_argument("report: confusion matrix must be square");
    if (class_names.size() != k)
        throw std::invalid_argument("report: expected " + std::to_string(k) + " class names");

    ClassificationReport r;
    r.class_names = class_names;
    r.precision.resize(k);
    r.recall.resize(k);
    r.f1.resize(k);
    r.support.resize(k);

    double trace = 0.0, total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const double tp = cm.at(c, c);
        r.precision[c] = col > 0.0 ? tp / col : 0.0;
        r.recall[c] = row > 0.0 ? tp / row : 0.0;
        const double pr = r.precision[c] + r.recall[c];
        r.f1[c] = pr > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / pr : 0.0;
        r.support[c] = static_cast<std::size_t>(row);
        trace += tp;
        total += row;
    }
    r.total = static_cast<std::size_t>(total);
    r.accuracy = total > 0.0 ? trace / total : 0.0;

    for (std::size_t c = 0; c < k; ++c) {
        r.macro_precision += r.precision[c];
        r.macro_recall += r.recall[c];
        r.macro_f1 += r.f1[c];
        const double w = total > 0.0 ? static_cast<double>(r.support[c]) / total : 0.0;
        r.weighted_precision += w * r.precision[c];
        r.weighted_recall += w * r.recall[c];
        r.weighted_f1 += w * r.f1[c];
    }
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
    return r;
}

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace detail

/// Two-decimal fixed-width table: one row per class, then accuracy, macro
/// and weighted average rows.
inline std::string render_report_text(const ClassificationReport& r) {
    std::size_t name_w = 12;  // fits "weighted avg"
    for (const std::string& n : r.class_names) name_w = std::max(name_w, n.size());
    const std::size_t col = 10;

    std::string out;
    out += detail::pad_left("", name_w) + detail::pad_left("precision", col) +
           detail::pad_left("recall", col) + detail::pad_left("f1-score", col) +
           detail::pad_left("support", col) + "\n\n";
    for (std::size_t c = 0; c < r.class_names.size(); ++c)
        out += detail::pad_left(r.class_names[c], name_w) +
               detail::pad_left(detail::fixed2(r.precision[c]), col) +
               detail::pad_left(detail::fixed2(r.recall[c]), col) +
               detail::pad_left(detail::fixed2(r.f1[c]), col) +
               detail::pad_left(std::to_string(r.support[c]), col) + "\n";
    out += "\n";
    out += detail::pad_left("accuracy", name_w) + detail::pad_left("", col) +
           detail::pad_left("", col) + detail::pad_left(detail::fixed2(r.accuracy), col) +
           detail::pad_left(std::to_string(r.total), col) + "\n";
    out += detail::pad_left("macro avg", name_w) +
           detail::pad_left(detail::fixed2(r.macro_precision), col) +
           detail::pad_left(detail::fixed2(r.macro_recall), col) +
           detail::pad_left(detail::fixed2(r.macro_f1), col) +
           detail::pad_left(std::to_string(r.total), col) + "\n";
    out += detail::pad_left("weighted avg", name_w) +
           detail::pad_left(detail::fixed2(r.weighted_precision), col) +
           detail::pad_left(detail::fixed2(r.weighted_recall), col) +
           detail::pad_left(detail::fixed2(r.weighted_f1), col) +
           detail::pad_left(std::to_string(r.total), col) + "\n";
    return out;
}

inline std::string render_report_csv(const ClassificationReport& r) {
    std::string out = "class,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < r.class_names.size(); ++c)
        out += r.class_names[c] + "," + detail::fixed6(r.precision[c]) + "," +
               detail::fixed6(r.recall[c]) + "," + detail::fixed6(r.f1[c]) + "," +
               std::to_string(r.support[c]) + "\n";
    out += "macro avg," + detail::fixed6(r.macro_precision) + "," +
           detail::fixed6(r.macro_recall) + "," + detail::fixed6(r.macro_f1) + "," +
           std::to_string(r.total) + "\n";
    out += "weighted avg," + detail::fixed6(r.weighted_precision) + "," +
           detail::fixed6(r.weighted_recall) + "," + detail::fixed6(r.weighted_f1) + "," +
           std::to_string(r.total) + "\n";
    return out;
}

inline std::string render_confusion_csv(const Tensor& cm,
                                        const std::vector<std::string>& class_names) {
    require_rank(cm, 2, "render_confusion_csv: matrix");
    const std::size_t k = cm.dim(0);
    if (class_names.size() != k)
        throw std::invalid_argument("render_confusion_csv: class name count mismatch");
    std::string out = "true\\predicted";
    for (const std::string& n : class_names) out += "," + n;
    out += "\n";
    for (std::size_t t = 0; t < k; ++t) {
        out += class_names[t];
        for (std::size_t p = 0; p < k; ++p)
            out += "," + std::to_string(static_cast<long long>(cm.at(t, p)));
        out += "\n";
    }
    return out;
}

}  // namespace sclc
