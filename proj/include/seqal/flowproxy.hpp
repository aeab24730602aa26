#pragma once

// Frame-differencing stand-in for dense optical flow. Motion per frame is the
// summed absolute intensity change against the previous frame; the number of
// moving objects is estimated from 8-connected components of the thresholded
// difference map. All arithmetic is integral, so results do not depend on
// evaluation order.

#include <cstdint>
#include <vector>

#include "seqal/types.hpp"

namespace seqal::flow {

struct FlowParams {
    int threshold = 10;
    int min_area = 25;
};

struct FlowStats {
    std::vector<std::uint64_t> motion_scores;
    std::vector<std::uint64_t> box_estimates;
    int threshold = 10;
    int min_area = 25;
};

std::uint64_t motion_score(const Raster& prev, const Raster& curr);

// Number of 8-connected components of {|curr - prev| >= threshold} with at
// least min_area pixels.
std::uint64_t estimate_boxes(const Raster& prev, const Raster& curr, int threshold, int min_area);

// Components of the thresholded difference map before the area filter, sizes
// in raster scan order of each component's first pixel.
std::vector<std::size_t> component_sizes(const Raster& prev, const Raster& curr, int threshold);

// Computes per-frame statistics and caches them on the sequence.
FlowStats compute_flow_stats(Sequence& seq, const FlowParams& params = {});

// Incremental form used when frames are produced one at a time and not kept.
class FlowAccumulator {
public:
    explicit FlowAccumulator(FlowParams params = {}) : params_(params) {}

    void push(const Raster& frame);
    FlowStats finish() &&;

private:
    FlowParams params_;
    Raster prev_;
    bool has_prev_ = false;
    FlowStats stats_;
};

}  // namespace seqal::flow
