#include <algorithm>
#include <cmath>
#include <limits>

#include "seqal/error.hpp"
#include "seqal/metrics.hpp"

namespace seqal::metrics {

PerfCostCurve::PerfCostCurve(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto [c, m] = points_[i];
        if (!std::isfinite(c) || c < 0.0) throw DomainError("curve costs must be finite and non-negative");
        if (!(m >= 0.0 && m <= 1.0)) throw DomainError("curve mAP values must lie in [0,1]");
        if (i > 0 && !(c > points_[i - 1].first)) throw DomainError("curve costs must be strictly increasing");
    }
}

PerfCostCurve PerfCostCurve::from_rounds(std::span<const double> costs, std::span<const double> maps) {
    if (costs.size() != maps.size()) throw DomainError("cost and mAP series differ in length");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        if (!pts.empty() && costs[i] <= pts.back().first) {
            if (costs[i] == pts.back().first) pts.back().second = maps[i];
            continue;
        }
        pts.emplace_back(costs[i], maps[i]);
    }
    return PerfCostCurve(std::move(pts));
}

double PerfCostCurve::max_map() const {
    double m = 0.0;
    for (const auto& p : points_) m = std::max(m, p.second);
    return m;
}

double PerfCostCurve::map_at(double c) const {
    if (points_.empty()) throw EmptyCurveError("empty performance-cost curve");
    if (c <= points_.front().first) return points_.front().second;
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const auto [c1, m1] = points_[i];
        if (c <= c1) {
            const auto [c0, m0] = points_[i - 1];
            return m0 + (m1 - m0) * (c - c0) / (c1 - c0);
        }
    }
    return points_.back().second;
}

double car(const PerfCostCurve& curve, double budget) {
    if (curve.empty()) throw EmptyCurveError("empty performance-cost curve");
    if (budget < 0.0) throw DomainError("negative cost budget");
    const auto& pts = curve.points();
    const double end = std::min(budget, curve.max_cost());
    double area = 0.0;
    // Constant extension from cost 0 to the first point.
    area += pts.front().second * std::min(end, pts.front().first);
    for (std::size_t i = 1; i < pts.size() && pts[i - 1].first < end; ++i) {
        const auto [c0, m0] = pts[i - 1];
        const double c1 = std::min(pts[i].first, end);
        const double m1 = curve.map_at(c1);
        area += (m0 + m1) / 2.0 * (c1 - c0);
    }
    return area;
}

double cost_to_reach(const PerfCostCurve& curve, double p) {
    if (curve.empty()) throw EmptyCurveError("empty performance-cost curve");
    const auto& pts = curve.points();
    if (p <= pts.front().second) return pts.front().first;
    double best = pts.front().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto [c1, m1] = pts[i];
        if (m1 >= p && best < p) {
            const auto [c0, m0] = pts[i - 1];
            return c0 + (p - m0) / (m1 - m0) * (c1 - c0);
        }
        best = std::max(best, m1);
    }
    return std::numeric_limits<double>::infinity();
}

ParResult par(const PerfCostCurve& curve, double budget) {
    if (curve.empty()) throw EmptyCurveError("empty performance-cost curve");
    if (budget < 0.0 || budget > 1.0) throw DomainError("performance budget must lie in [0,1]");
    const auto& pts = curve.points();
    ParResult out;
    const double top = curve.max_map();
    out.truncated = budget > top;
    const double end = std::min(budget, top);

    // Below the first point's mAP the cost is that of the first point.
    double reached = pts.front().second;
    out.value = pts.front().first * std::min(end, reached);
    // Every segment that lifts the running maximum contributes a linear piece
    // of cost(p) from the old maximum to its end value.
    for (std::size_t i = 1; i < pts.size() && reached < end; ++i) {
        const auto [c0, m0] = pts[i - 1];
        const auto [c1, m1] = pts[i];
        if (m1 <= reached) continue;
        const double p_lo = reached;
        const double p_hi = std::min(m1, end);
        const double cost_lo = c0 + (p_lo - m0) / (m1 - m0) * (c1 - c0);
        const double cost_hi = c0 + (p_hi - m0) / (m1 - m0) * (c1 - c0);
        out.value += (cost_lo + cost_hi) / 2.0 * (p_hi - p_lo);
        reached = m1;
    }
    return out;
}

}  // namespace seqal::metrics
