#include "seqal/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "seqal/error.hpp"
#include "seqal/parallel.hpp"
#include "seqal/rng.hpp"

namespace seqal::synth {
namespace {

constexpr int kBackground = 30;
constexpr int kForeground = 200;
constexpr int kNoise = 5;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

struct Mover {
    int w = 0, h = 0;
    int class_id = 0;
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
    double speed = 0.0;
};

struct Placed {
    int x, y, w, h;
};

void reflect(double& pos, double& vel, double limit) {
    // A single reflection suffices because |vel| is bounded by the raster size.
    if (pos < 0.0) {
        pos = -pos;
        vel = -vel;
    } else if (pos > limit) {
        pos = 2.0 * limit - pos;
        vel = -vel;
    }
    pos = std::clamp(pos, 0.0, limit);
}

int overlap_area(const Placed& a, const Placed& b) {
    const int ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const int iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return (ix > 0 && iy > 0) ? ix * iy : 0;
}

void draw_frame(Raster& r, const std::vector<Placed>& rects, std::mt19937_64& noise) {
    std::fill(r.pixels.begin(), r.pixels.end(), std::uint8_t{kBackground});
    for (const auto& p : rects)
        for (int y = p.y; y < p.y + p.h; ++y)
            std::fill_n(r.pixels.begin() + static_cast<std::ptrdiff_t>(y) * r.width + p.x, p.w,
                        std::uint8_t{kForeground});
    // Four 16-bit noise draws per engine call, each mapped onto [-5, 5].
    const std::size_t n = r.pixels.size();
    std::size_t i = 0;
    while (i < n) {
        std::uint64_t bits = noise();
        for (int k = 0; k < 4 && i < n; ++k, ++i) {
            const int v = static_cast<int>(((bits & 0xffffu) * (2 * kNoise + 1)) >> 16) - kNoise;
            bits >>= 16;
            r.pixels[i] = static_cast<std::uint8_t>(int(r.pixels[i]) + v);
        }
    }
}

struct BuiltSequence {
    Sequence seq;
    SequenceTruth truth;
};

BuiltSequence build_sequence(const GenConfig& cfg, const GenOptions& opts, int index, const SequenceMeta& meta) {
    const std::uint64_t sub_seed = rng::mix64(cfg.rng_seed ^ static_cast<std::uint64_t>(index));
    std::mt19937_64 geo(sub_seed);
    std::mt19937_64 noise(rng::mix64(sub_seed ^ kNoiseStream));

    const int n_frames = static_cast<int>(rng::uniform_int(geo, cfg.frame_len_range.min, cfg.frame_len_range.max));
    const int n_obj =
        static_cast<int>(rng::uniform_int(geo, cfg.objects_per_seq_range.min, cfg.objects_per_seq_range.max));
    const double cost_noise = rng::normal(geo, 0.0, cfg.cost_coeffs.noise_sd);

    std::vector<Mover> movers;
    for (int k = 0; k < n_obj; ++k) {
        Mover m;
        m.w = static_cast<int>(rng::uniform_int(geo, cfg.object_size_range.min, cfg.object_size_range.max));
        m.h = static_cast<int>(rng::uniform_int(geo, cfg.object_size_range.min, cfg.object_size_range.max));
        m.class_id = static_cast<int>(rng::uniform_int(geo, 0, kNumClasses - 1));
        const bool follower = k > 0 && rng::bernoulli(geo, cfg.occlusion_rate);
        if (follower) {
            const Mover& lead = movers[static_cast<std::size_t>(rng::uniform_int(geo, 0, k - 1))];
            m.x = std::clamp(lead.x + rng::uniform(geo, -2.0, 2.0), 0.0, double(cfg.width - m.w));
            m.y = std::clamp(lead.y + rng::uniform(geo, -2.0, 2.0), 0.0, double(cfg.height - m.h));
            m.vx = lead.vx;
            m.vy = lead.vy;
            m.speed = lead.speed;
        } else {
            m.x = rng::uniform(geo, 0.0, double(cfg.width - m.w));
            m.y = rng::uniform(geo, 0.0, double(cfg.height - m.h));
            m.speed = rng::uniform(geo, cfg.speed_range.min, cfg.speed_range.max);
            const double angle = rng::uniform(geo, 0.0, 2.0 * std::numbers::pi);
            m.vx = m.speed * std::cos(angle);
            m.vy = m.speed * std::sin(angle);
        }
        movers.push_back(m);
    }

    BuiltSequence out;
    out.seq.meta = meta;
    out.seq.frames.resize(static_cast<std::size_t>(n_frames));
    out.truth.object_count = n_obj;
    out.truth.cost_noise = cost_noise;

    const bool need_raster = opts.keep_rasters || opts.stream_flow.has_value();
    std::optional<flow::FlowAccumulator> acc;
    if (opts.stream_flow) acc.emplace(*opts.stream_flow);
    Raster raster(cfg.width, cfg.height);
    std::vector<Placed> rects(movers.size());

    for (int t = 0; t < n_frames; ++t) {
        Frame& frame = out.seq.frames[static_cast<std::size_t>(t)];
        frame.frame_id = t;
        for (std::size_t k = 0; k < movers.size(); ++k) {
            const auto& m = movers[k];
            rects[k] = {static_cast<int>(std::lround(m.x)), static_cast<int>(std::lround(m.y)), m.w, m.h};
        }
        frame.boxes.reserve(movers.size());
        for (std::size_t k = 0; k < movers.size(); ++k) {
            const Placed& p = rects[k];
            // Later movers are drawn on top of earlier ones.
            int covered = 0;
            for (std::size_t j = k + 1; j < movers.size(); ++j) covered = std::max(covered, overlap_area(p, rects[j]));
            const double frac = double(covered) / double(p.w * p.h);
            BoundingBox b;
            b.class_id = movers[k].class_id;
            b.cx = (p.x + p.w / 2.0) / cfg.width;
            b.cy = (p.y + p.h / 2.0) / cfg.height;
            b.w = double(p.w) / cfg.width;
            b.h = double(p.h) / cfg.height;
            b.occluded = frac > 0.9 ? Occlusion::full : (frac > 0.5 ? Occlusion::partial : Occlusion::visible);
            if (b.occluded != Occlusion::visible) ++out.truth.occluded_boxes;
            frame.boxes.push_back(b);
        }
        out.truth.total_boxes += movers.size();

        if (need_raster) {
            draw_frame(raster, rects, noise);
            if (acc) acc->push(raster);
            if (opts.keep_rasters) frame.raster = raster;
        }

        for (auto& m : movers) {
            m.x += m.vx;
            m.y += m.vy;
            reflect(m.x, m.vx, double(cfg.width - m.w));
            reflect(m.y, m.vy, double(cfg.height - m.h));
        }
    }

    for (const auto& m : movers) out.truth.true_motion += m.speed * n_frames;

    const auto& c = cfg.cost_coeffs;
    const double cost = c.alpha_boxes * double(out.truth.total_boxes) + c.beta_motion * out.truth.true_motion +
                        c.gamma_occlusion * double(out.truth.occluded_boxes) + c.delta_length * n_frames +
                        cost_noise;
    out.seq.meta.cost_hours = std::max(cost, 0.1);

    if (acc) {
        flow::FlowStats stats = std::move(*acc).finish();
        out.seq.motion_scores = std::move(stats.motion_scores);
        out.seq.box_estimates = std::move(stats.box_estimates);
    }
    return out;
}

// Scene, season, time of day and split for every sequence index. Scenes hold
// up to three sequences and never straddle splits.
std::vector<SequenceMeta> assign_metadata(const GenConfig& cfg) {
    const int n = cfg.n_sequences;
    std::mt19937_64 rng(rng::mix64(cfg.rng_seed ^ 0x73706c6974ULL));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng::uniform_int(rng, 0, i))]);

    const int n_test = n >= 3 ? std::max(1, static_cast<int>(std::lround(0.1 * n))) : 0;
    const int n_val = n >= 2 ? std::max(1, static_cast<int>(std::lround(0.2 * n))) : 0;
    const int n_train = n - n_test - n_val;

    std::vector<SequenceMeta> metas(static_cast<std::size_t>(n));
    int scene = -1;
    Season scene_season = Season::spring;
    for (int pos = 0; pos < n; ++pos) {
        const Split split = pos < n_train ? Split::train : (pos < n_train + n_val ? Split::validation : Split::test);
        const int offset = split == Split::train ? pos : (split == Split::validation ? pos - n_train : pos - n_train - n_val);
        if (offset % 3 == 0) {
            ++scene;
            // Roughly 10% winter, 63% spring, 27% summer.
            const double u = rng::uniform01(rng);
            scene_season = u < 0.10 ? Season::winter : (u < 0.73 ? Season::spring : Season::summer);
        }
        SequenceMeta& m = metas[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
        m.sequence_id = sequence_name(order[static_cast<std::size_t>(pos)]);
        m.split = split;
        m.scene_id = scene;
        m.season = scene_season;
        m.time_of_day = static_cast<TimeOfDay>(rng::uniform_int(rng, 0, 2));
    }
    return metas;
}

}  // namespace

void GenConfig::validate() const {
    auto bad = [](const std::string& msg) { throw GenError(msg); };
    if (n_sequences < 1) bad("n_sequences must be positive");
    if (frame_len_range.min < 1 || frame_len_range.min > frame_len_range.max) bad("invalid frame_len_range");
    if (width < 16 || height < 16) bad("raster must be at least 16x16");
    if (objects_per_seq_range.min < 0 || objects_per_seq_range.min > objects_per_seq_range.max)
        bad("invalid objects_per_seq_range");
    if (speed_range.min < 0.0 || speed_range.min > speed_range.max) bad("invalid speed_range");
    if (object_size_range.min < 1 || object_size_range.min > object_size_range.max) bad("invalid object_size_range");
    if (object_size_range.max > width || object_size_range.max > height)
        bad("objects of size " + std::to_string(object_size_range.max) + " do not fit a " + std::to_string(width) +
            "x" + std::to_string(height) + " raster");
    if (speed_range.max >= std::min(width - object_size_range.max, height - object_size_range.max) &&
        speed_range.max > 0.0)
        bad("speed_range.max must be below the free space inside the raster");
    if (occlusion_rate < 0.0 || occlusion_rate > 1.0) bad("occlusion_rate must be in [0,1]");
    const auto& c = cost_coeffs;
    if (c.alpha_boxes < 0 || c.beta_motion < 0 || c.gamma_occlusion < 0 || c.delta_length < 0 || c.noise_sd < 0)
        bad("cost coefficients must be non-negative");
}

std::string sequence_name(int index) { return fmt::format("seq{:03d}", index); }

GeneratedPool generate(const GenConfig& cfg, const GenOptions& opts) {
    cfg.validate();
    const auto metas = assign_metadata(cfg);
    std::vector<BuiltSequence> built(metas.size());
    parallel_for(metas.size(), opts.threads, [&](std::size_t i) {
        built[i] = build_sequence(cfg, opts, static_cast<int>(i), metas[i]);
    });
    GeneratedPool out;
    for (auto& b : built) {
        out.truth.emplace(b.seq.id(), b.truth);
        out.pool.add(std::move(b.seq));
    }
    return out;
}

PoolState generate_pool(const GenConfig& cfg, const GenOptions& opts) { return generate(cfg, opts).pool; }

}  // namespace seqal::synth
