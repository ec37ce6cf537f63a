// Copyright 2026 The wsseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "wsseg/error.hpp"
#include "wsseg/tensor.hpp"

namespace wsseg {

inline constexpr uint8_t kIgnoreLabel = 255;

/// (C+1)x(C+1) pixel counts; rows = ground truth, cols = prediction; pixels
/// whose ground truth is the ignore value are skipped. All statistics stay in
/// integer arithmetic until the final division.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes_with_bg)
        : k_(num_classes_with_bg), counts_(size_t(k_) * k_, 0) {
        WSSEG_CHECK(k_ >= 1, "ConfusionMatrix: need at least one class");
    }

    int num_classes() const { return k_; }
    uint64_t at(int gt, int pred) const { return counts_[size_t(gt) * k_ + pred]; }
    uint64_t& at(int gt, int pred) { return counts_[size_t(gt) * k_ + pred]; }

    uint64_t total() const {
        uint64_t t = 0;
        for (uint64_t c : counts_) t += c;
        return t;
    }

    /// Tallies one prediction/ground-truth pair.
    void accumulate(const LabelMask& pred, const LabelMask& gt) {
        if (pred.h != gt.h || pred.w != gt.w)
            throw Error("ConfusionMatrix::accumulate: dimension mismatch");
        for (int64_t i = 0; i < gt.size(); ++i) {
            uint8_t g = gt.v[size_t(i)];
            uint8_t p = pred.v[size_t(i)];
            if (g == kIgnoreLabel) continue;
            if (g >= k_) throw Error("ConfusionMatrix: illegal ground-truth label " + std::to_string(g));
            if (p >= k_) throw Error("ConfusionMatrix: illegal predicted label " + std::to_string(p));
            counts_[size_t(g) * k_ + p]++;
        }
    }

    /// Element-wise sum; lets per-image matrices be computed concurrently and
    /// reduced.
    void merge(const ConfusionMatrix& other) {
        WSSEG_CHECK(other.k_ == k_, "ConfusionMatrix::merge: class count mismatch");
        for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    }

    uint64_t row_sum(int gt) const {
        uint64_t s = 0;
        for (int p = 0; p < k_; ++p) s += at(gt, p);
        return s;
    }
    uint64_t col_sum(int pred) const {
        uint64_t s = 0;
        for (int g = 0; g < k_; ++g) s += at(g, pred);
        return s;
    }

private:
    int k_;
    std::vector<uint64_t> counts_;
};

struct MetricOptions {
    bool include_background = true;  // whether class 0 joins the per-class means
};

struct IouResult {
    double mean_iou = 0.0;
    std::vector<double> per_class;  // NaN-free: invalid classes carry 0 and valid=false
    std::vector<bool> valid;        // class participated in the mean
};

/// Per-class IoU = diag / (row + col - diag); classes absent from both pred
/// and gt are excluded from the unweighted mean.
inline IouResult mean_iou(const ConfusionMatrix& cm, MetricOptions opt = {}) {
    if (cm.total() == 0) throw Error("mean_iou: empty confusion matrix");
    int K = cm.num_classes();
    IouResult res;
    res.per_class.assign(size_t(K), 0.0);
    res.valid.assign(size_t(K), false);
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < K; ++c) {
        uint64_t diag = cm.at(c, c);
        uint64_t denom = cm.row_sum(c) + cm.col_sum(c) - diag;
        if (denom == 0) continue;  // class absent everywhere
        if (c == 0 && !opt.include_background) continue;
        res.per_class[size_t(c)] = double(diag) / double(denom);
        res.valid[size_t(c)] = true;
        sum += res.per_class[size_t(c)];
        ++n;
    }
    res.mean_iou = n > 0 ? sum / n : 0.0;
    return res;
}

inline double pixel_accuracy(const ConfusionMatrix& cm) {
    uint64_t total = cm.total();
    if (total == 0) throw Error("pixel_accuracy: empty confusion matrix");
    uint64_t diag = 0;
    for (int c = 0; c < cm.num_classes(); ++c) diag += cm.at(c, c);
    return double(diag) / double(total);
}

/// Unweighted mean over classes with ground-truth pixels of diag / row_sum.
inline double mean_accuracy(const ConfusionMatrix& cm, MetricOptions opt = {}) {
    if (cm.total() == 0) throw Error("mean_accuracy: empty confusion matrix");
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < cm.num_classes(); ++c) {
        uint64_t rs = cm.row_sum(c);
        if (rs == 0) continue;
        if (c == 0 && !opt.include_background) continue;
        sum += double(cm.at(c, c)) / double(rs);
        ++n;
    }
    return n > 0 ? sum / n : 0.0;
}

// ---------------------------------------------------------------------------
// Image-level multi-label F1
// ---------------------------------------------------------------------------

struct F1Result {
    std::vector<double> per_class;  // index 0 unused; class ids 1..C
    std::vector<bool> present;      // class has at least one ground-truth positive
    double macro = 0.0;             // unweighted mean over present classes
    double micro = 0.0;             // from pooled TP/FP/FN
};

/// F1 = 2PR/(P+R) per class with the 0 convention when P+R == 0. The macro
/// mean runs over classes present in the ground truth.
inline F1Result multilabel_f1(const std::vector<std::set<int>>& gt,
                              const std::vector<std::set<int>>& pred, int num_classes) {
    WSSEG_CHECK(gt.size() == pred.size(), "multilabel_f1: size mismatch");
    if (gt.empty()) throw Error("multilabel_f1: empty label sets");
    std::vector<uint64_t> tp(size_t(num_classes) + 1, 0), fp(size_t(num_classes) + 1, 0),
        fn(size_t(num_classes) + 1, 0);
    for (size_t i = 0; i < gt.size(); ++i) {
        for (int c : pred[i]) {
            WSSEG_CHECK(c >= 1 && c <= num_classes, "multilabel_f1: label out of range");
            if (gt[i].count(c)) tp[size_t(c)]++;
            else fp[size_t(c)]++;
        }
        for (int c : gt[i]) {
            WSSEG_CHECK(c >= 1 && c <= num_classes, "multilabel_f1: label out of range");
            if (!pred[i].count(c)) fn[size_t(c)]++;
        }
    }
    F1Result res;
    res.per_class.assign(size_t(num_classes) + 1, 0.0);
    res.present.assign(size_t(num_classes) + 1, false);
    double macro_sum = 0.0;
    int macro_n = 0;
    uint64_t TP = 0, FP = 0, FN = 0;
    for (int c = 1; c <= num_classes; ++c) {
        uint64_t denom = 2 * tp[size_t(c)] + fp[size_t(c)] + fn[size_t(c)];
        res.per_class[size_t(c)] = denom == 0 ? 0.0 : 2.0 * double(tp[size_t(c)]) / double(denom);
        res.present[size_t(c)] = tp[size_t(c)] + fn[size_t(c)] > 0;
        if (res.present[size_t(c)]) {
            macro_sum += res.per_class[size_t(c)];
            ++macro_n;
        }
        TP += tp[size_t(c)];
        FP += fp[size_t(c)];
        FN += fn[size_t(c)];
    }
    res.macro = macro_n > 0 ? macro_sum / macro_n : 0.0;
    uint64_t micro_denom = 2 * TP + FP + FN;
    res.micro = micro_denom == 0 ? 0.0 : 2.0 * double(TP) / double(micro_denom);
    return res;
}

}  // namespace wsseg
