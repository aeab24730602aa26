#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "seqal/types.hpp"

namespace seqal::metrics {

// ---------------------------------------------------------------------------
// Detection evaluation

// Corner-format rectangle in any consistent unit.
struct Rect {
    double x0, y0, x1, y1;
};

Rect to_rect(const BoundingBox& b);
double iou(const Rect& a, const Rect& b);
double iou(const BoundingBox& a, const BoundingBox& b);

// Predictions and ground truth of one frame.
struct FrameEval {
    std::vector<ScoredBox> predictions;
    std::vector<BoundingBox> truths;
};

// All-point interpolated AP over the pooled frames, considering only boxes of
// `class_id` (or every box when class_id is empty). Predictions are processed
// by descending confidence, ties in insertion order; each claims the
// highest-IoU unmatched truth of its frame with IoU >= iou_thresh. Returns
// nullopt when there are neither truths nor predictions.
std::optional<double> average_precision(std::span<const FrameEval> frames, double iou_thresh,
                                        std::optional<int> class_id = std::nullopt);

// Single-frame convenience form.
std::optional<double> average_precision(std::span<const ScoredBox> predictions, std::span<const BoundingBox> truths,
                                        double iou_thresh);

struct MapResult {
    double map50 = 0.0;
    double map5095 = 0.0;
};

std::vector<double> coco_thresholds();  // 0.50, 0.55, ..., 0.95

// Class-pooled mAP across a test split. Classes without any truth are left
// out of the mean. map50 uses threshold 0.5, which must be in `thresholds`.
MapResult mean_ap(std::span<const FrameEval> frames, std::span<const double> thresholds);
MapResult mean_ap(std::span<const FrameEval> frames);

// ---------------------------------------------------------------------------
// Performance-cost analysis

// (cumulative cost, mAP) points with strictly increasing cost.
class PerfCostCurve {
public:
    PerfCostCurve() = default;
    // Validates the invariants; throws DomainError otherwise.
    explicit PerfCostCurve(std::vector<std::pair<double, double>> points);

    // Builds a curve from raw per-round points, keeping the last mAP among
    // points that share a cost.
    static PerfCostCurve from_rounds(std::span<const double> costs, std::span<const double> maps);

    const std::vector<std::pair<double, double>>& points() const { return points_; }
    bool empty() const { return points_.empty(); }
    double max_cost() const { return points_.back().first; }
    double max_map() const;

    // Piecewise-linear mAP at cost c, constant at the first point's value
    // for c below the first cost.
    double map_at(double c) const;

private:
    std::vector<std::pair<double, double>> points_;
};

// Integral of mAP over cost from 0 to min(budget, max cost).
double car(const PerfCostCurve& curve, double budget);

struct ParResult {
    double value = 0.0;
    bool truncated = false;  // budget exceeded the best mAP reached
};

// Cost needed to first reach mAP p along the curve; the first point's cost
// for p at or below its mAP.
double cost_to_reach(const PerfCostCurve& curve, double p);

// Integral of cost_to_reach over p from 0 to min(budget, max mAP).
ParResult par(const PerfCostCurve& curve, double budget);

// ---------------------------------------------------------------------------
// Correlation

struct Correlation {
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::optional<double> kendall_tau_b;
};

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);
Correlation correlations(std::span<const double> x, std::span<const double> y);

// 1-based ranks with ties given their average rank.
std::vector<double> average_ranks(std::span<const double> x);

}  // namespace seqal::metrics
