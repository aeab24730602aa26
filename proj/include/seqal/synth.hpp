#pragma once

// Synthetic pools of moving-rectangle sequences with a known cost model.
//
// Each sequence is a set of axis-aligned rectangles translating at constant
// velocity and reflecting elastically at the raster border. Annotation cost is
//
//   cost_hours = alpha * boxes + beta * motion + gamma * occluded + delta * N + noise
//
// clamped below at 0.1 h, where `motion` is the summed |velocity| * N over
// objects. All randomness comes from std::mt19937_64 streams seeded per
// sequence from mix64(rng_seed ^ sequence index), so sequences can be built
// in any order or in parallel.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "seqal/flowproxy.hpp"
#include "seqal/types.hpp"

namespace seqal::synth {

template <typename T>
struct Range {
    T min;
    T max;
};

struct CostCoeffs {
    double alpha_boxes = 0.002;
    double beta_motion = 0.0015;
    double gamma_occlusion = 0.004;
    double delta_length = 0.0005;
    double noise_sd = 0.3;
};

struct GenConfig {
    std::uint64_t rng_seed = 1;
    int n_sequences = 126;
    Range<int> frame_len_range{594, 864};
    int width = 64;
    int height = 64;
    Range<int> objects_per_seq_range{0, 6};
    Range<double> speed_range{1.5, 4.0};
    Range<int> object_size_range{8, 16};  // side length in pixels
    double occlusion_rate = 0.15;
    CostCoeffs cost_coeffs;

    // Throws GenError on an invalid configuration.
    void validate() const;
};

struct GenOptions {
    bool keep_rasters = true;
    // When set, flow statistics are computed while frames are produced.
    std::optional<flow::FlowParams> stream_flow;
    unsigned threads = 1;
};

struct SequenceTruth {
    int object_count = 0;
    double true_motion = 0.0;  // sum over objects of |velocity| * N
    std::size_t total_boxes = 0;
    std::size_t occluded_boxes = 0;
    double cost_noise = 0.0;
};

struct GeneratedPool {
    PoolState pool;
    std::map<std::string, SequenceTruth> truth;
};

GeneratedPool generate(const GenConfig& cfg, const GenOptions& opts = {});
PoolState generate_pool(const GenConfig& cfg, const GenOptions& opts = {});

std::string sequence_name(int index);

}  // namespace seqal::synth
