#include "seqal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqal/error.hpp"

namespace seqal::metrics {

Rect to_rect(const BoundingBox& b) { return {b.x_min(), b.y_min(), b.x_max(), b.y_max()}; }

double iou(const Rect& a, const Rect& b) {
    const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) { return iou(to_rect(a), to_rect(b)); }

namespace {

struct Candidate {
    double confidence;
    std::size_t frame;
    // Truth indices of the frame with their IoU, best first (ties by index).
    std::vector<std::pair<double, std::size_t>> overlaps;
};

struct ClassData {
    std::vector<Candidate> preds;                  // sorted by descending confidence
    std::vector<std::size_t> truths_per_frame;
    std::size_t total_truths = 0;
};

ClassData gather(std::span<const FrameEval> frames, std::optional<int> class_id) {
    ClassData d;
    d.truths_per_frame.resize(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::vector<const BoundingBox*> truths;
        for (const auto& t : frames[f].truths)
            if (!class_id || t.class_id == *class_id) truths.push_back(&t);
        d.truths_per_frame[f] = truths.size();
        d.total_truths += truths.size();
        for (const auto& p : frames[f].predictions) {
            if (class_id && p.box.class_id != *class_id) continue;
            Candidate c{p.confidence, f, {}};
            for (std::size_t k = 0; k < truths.size(); ++k) {
                const double v = iou(p.box, *truths[k]);
                if (v > 0.0) c.overlaps.emplace_back(v, k);
            }
            std::stable_sort(c.overlaps.begin(), c.overlaps.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            d.preds.push_back(std::move(c));
        }
    }
    std::stable_sort(d.preds.begin(), d.preds.end(),
                     [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });
    return d;
}

std::optional<double> ap_from(const ClassData& d, double iou_thresh) {
    if (d.total_truths == 0) return d.preds.empty() ? std::nullopt : std::optional<double>(0.0);

    std::vector<std::vector<bool>> matched(d.truths_per_frame.size());
    for (std::size_t f = 0; f < matched.size(); ++f) matched[f].assign(d.truths_per_frame[f], false);

    std::vector<bool> is_tp(d.preds.size(), false);
    std::vector<double> precision(d.preds.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < d.preds.size(); ++i) {
        const auto& c = d.preds[i];
        for (const auto& [v, k] : c.overlaps) {
            if (v < iou_thresh) break;
            if (!matched[c.frame][k]) {
                matched[c.frame][k] = true;
                is_tp[i] = true;
                ++tp;
                break;
            }
        }
        precision[i] = double(tp) / double(i + 1);
    }
    // Precision envelope: best precision at any later cut.
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.preds.size(); ++i)
        if (is_tp[i]) sum += precision[i];
    return sum / double(d.total_truths);
}

}  // namespace

std::optional<double> average_precision(std::span<const FrameEval> frames, double iou_thresh,
                                        std::optional<int> class_id) {
    for (const auto& f : frames)
        for (const auto& p : f.predictions)
            if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) throw DomainError("confidence outside [0,1]");
    return ap_from(gather(frames, class_id), iou_thresh);
}

std::optional<double> average_precision(std::span<const ScoredBox> predictions, std::span<const BoundingBox> truths,
                                        double iou_thresh) {
    FrameEval f{{predictions.begin(), predictions.end()}, {truths.begin(), truths.end()}};
    return average_precision(std::span<const FrameEval>(&f, 1), iou_thresh);
}

std::vector<double> coco_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

MapResult mean_ap(std::span<const FrameEval> frames) {
    const auto t = coco_thresholds();
    return mean_ap(frames, t);
}

MapResult mean_ap(std::span<const FrameEval> frames, std::span<const double> thresholds) {
    if (frames.empty()) throw EmptyTestError("no test frames to evaluate");
    if (thresholds.empty()) throw DomainError("no IoU thresholds");
    auto is_half = [](double t) { return std::abs(t - 0.5) < 1e-9; };
    if (std::none_of(thresholds.begin(), thresholds.end(), is_half))
        throw DomainError("threshold 0.5 is required for map50");

    std::vector<int> classes;
    for (const auto& f : frames)
        for (const auto& t : f.truths)
            if (std::find(classes.begin(), classes.end(), t.class_id) == classes.end()) classes.push_back(t.class_id);
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) throw EmptyTestError("test split has no ground-truth boxes");

    double sum50 = 0.0, sum_all = 0.0;
    for (int cls : classes) {
        const ClassData d = gather(frames, cls);
        for (double t : thresholds) {
            const double ap = *ap_from(d, t);
            sum_all += ap;
            if (is_half(t)) sum50 += ap;
        }
    }
    MapResult r;
    r.map50 = sum50 / double(classes.size());
    r.map5095 = sum_all / double(classes.size() * thresholds.size());
    return r;
}

}  // namespace seqal::metrics
