#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qat {

/// Classification metrics; a class absent from both gold and predictions
/// contributes F1 = 0 to the macro average.
struct EvalReport {
    int total = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> precision; // per class
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::vector<long long>> confusion; // [gold][pred]
};

inline EvalReport compute_metrics(std::span<const int> preds, std::span<const int> gold,
                                  int n_classes) {
    if (preds.size() != gold.size())
        throw std::invalid_argument("compute_metrics: prediction/gold length mismatch");
    if (n_classes < 1) throw std::invalid_argument("compute_metrics: n_classes must be >= 1");

    EvalReport r;
    r.total = int(preds.size());
    r.confusion.assign(std::size_t(n_classes), std::vector<long long>(std::size_t(n_classes), 0));
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= n_classes || preds[i] < 0 || preds[i] >= n_classes)
            throw std::invalid_argument("compute_metrics: class index out of range at item " +
                                        std::to_string(i));
        r.confusion[std::size_t(gold[i])][std::size_t(preds[i])] += 1;
    }

    long long correct = 0;
    for (int c = 0; c < n_classes; ++c) correct += r.confusion[std::size_t(c)][std::size_t(c)];
    r.accuracy = r.total == 0 ? 0.0 : double(correct) / r.total;

    r.precision.assign(std::size_t(n_classes), 0.0);
    r.recall.assign(std::size_t(n_classes), 0.0);
    r.f1.assign(std::size_t(n_classes), 0.0);
    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        long long tp = r.confusion[std::size_t(c)][std::size_t(c)];
        long long pred_c = 0, gold_c = 0;
        for (int k = 0; k < n_classes; ++k) {
            pred_c += r.confusion[std::size_t(k)][std::size_t(c)];
            gold_c += r.confusion[std::size_t(c)][std::size_t(k)];
        }
        const double p = pred_c == 0 ? 0.0 : double(tp) / pred_c;
        const double rec = gold_c == 0 ? 0.0 : double(tp) / gold_c;
        r.precision[std::size_t(c)] = p;
        r.recall[std::size_t(c)] = rec;
        r.f1[std::size_t(c)] = (p + rec) == 0.0 ? 0.0 : 2.0 * p * rec / (p + rec);
        f1_sum += r.f1[std::size_t(c)];
    }
    r.macro_f1 = f1_sum / n_classes;
    return r;
}

/// Counts over items where the two prediction vectors differ, partitioned by
/// which side matches the gold label.
struct DisagreementReport {
    int n_total = 0;
    int n_disagree = 0;
    int a_correct = 0;
    int b_correct = 0;
    int both_wrong = 0;
};

inline DisagreementReport disagree(std::span<const int> preds_a, std::span<const int> preds_b,
                                   std::span<const int> gold) {
    if (preds_a.size() != preds_b.size() || preds_a.size() != gold.size())
        throw std::invalid_argument("disagree: input length mismatch");
    DisagreementReport r;
    r.n_total = int(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (preds_a[i] == preds_b[i]) continue;
        r.n_disagree += 1;
        if (preds_a[i] == gold[i])
            r.a_correct += 1;
        else if (preds_b[i] == gold[i])
            r.b_correct += 1;
        else
            r.both_wrong += 1;
    }
    return r;
}

} // namespace qat
