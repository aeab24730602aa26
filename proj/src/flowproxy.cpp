#include "seqal/flowproxy.hpp"

#include <cstdlib>

#include "seqal/error.hpp"

namespace seqal::flow {
namespace {

void check_shapes(const Raster& a, const Raster& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("raster " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                         std::to_string(b.width) + "x" + std::to_string(b.height));
    if (a.pixels.size() != static_cast<std::size_t>(a.width) * a.height ||
        b.pixels.size() != static_cast<std::size_t>(b.width) * b.height)
        throw ShapeError("raster byte count does not match its dimensions");
}

// Labels 8-connected foreground components with an explicit stack.
template <typename OnComponent>
void for_each_component(const std::vector<std::uint8_t>& mask, int width, int height, OnComponent&& on_component) {
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(mask.size()); ++start) {
        if (!mask[start] || seen[start]) continue;
        std::size_t area = 0;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++area;
            const int x = p % width, y = p / width;
            for (int dy = -1; dy <= 1; ++dy) {
                const int ny = y + dy;
                if (ny < 0 || ny >= height) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    if ((dx == 0 && dy == 0) || nx < 0 || nx >= width) continue;
                    const int q = ny * width + nx;
                    if (mask[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        on_component(area);
    }
}

std::vector<std::uint8_t> difference_mask(const Raster& prev, const Raster& curr, int threshold) {
    std::vector<std::uint8_t> mask(curr.pixels.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = std::abs(int(curr.pixels[i]) - int(prev.pixels[i])) >= threshold ? 1 : 0;
    return mask;
}

}  // namespace

std::uint64_t motion_score(const Raster& prev, const Raster& curr) {
    check_shapes(prev, curr);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < curr.pixels.size(); ++i)
        sum += static_cast<std::uint64_t>(std::abs(int(curr.pixels[i]) - int(prev.pixels[i])));
    return sum;
}

std::vector<std::size_t> component_sizes(const Raster& prev, const Raster& curr, int threshold) {
    check_shapes(prev, curr);
    if (threshold < 0 || threshold > 255) throw DomainError("threshold must be in [0,255]");
    std::vector<std::size_t> sizes;
    for_each_component(difference_mask(prev, curr, threshold), curr.width, curr.height,
                       [&](std::size_t area) { sizes.push_back(area); });
    return sizes;
}

std::uint64_t estimate_boxes(const Raster& prev, const Raster& curr, int threshold, int min_area) {
    check_shapes(prev, curr);
    if (threshold < 0 || threshold > 255) throw DomainError("threshold must be in [0,255]");
    if (min_area < 1) throw DomainError("min_area must be positive");
    std::uint64_t count = 0;
    for_each_component(difference_mask(prev, curr, threshold), curr.width, curr.height,
                       [&](std::size_t area) {
                           if (area >= static_cast<std::size_t>(min_area)) ++count;
                       });
    return count;
}

void FlowAccumulator::push(const Raster& frame) {
    if (has_prev_) {
        stats_.motion_scores.push_back(motion_score(prev_, frame));
        stats_.box_estimates.push_back(estimate_boxes(prev_, frame, params_.threshold, params_.min_area));
    } else {
        stats_.motion_scores.push_back(0);
        stats_.box_estimates.push_back(0);
        has_prev_ = true;
    }
    prev_ = frame;
}

FlowStats FlowAccumulator::finish() && {
    stats_.threshold = params_.threshold;
    stats_.min_area = params_.min_area;
    return std::move(stats_);
}

FlowStats compute_flow_stats(Sequence& seq, const FlowParams& params) {
    FlowAccumulator acc(params);
    for (const auto& f : seq.frames) {
        if (!f.raster)
            throw MissingRasterError("frame " + std::to_string(f.frame_id) + " of " + seq.id() + " has no raster");
        acc.push(*f.raster);
    }
    FlowStats stats = std::move(acc).finish();
    seq.motion_scores = stats.motion_scores;
    seq.box_estimates = stats.box_estimates;
    return stats;
}

}  // namespace seqal::flow
