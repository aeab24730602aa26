#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqal {

enum class Occlusion : std::uint8_t { visible = 0, partial = 1, full = 2 };
enum class Season : std::uint8_t { winter = 0, spring = 1, summer = 2 };
enum class TimeOfDay : std::uint8_t { morning = 0, noon = 1, evening = 2 };
enum class Split : std::uint8_t { train = 0, validation = 1, test = 2 };

inline constexpr int kNumClasses = 4;  // pedestrian, bicycle, car, cart

std::string_view to_string(Season s);
std::string_view to_string(TimeOfDay t);
std::string_view to_string(Split s);
// Folder name used under labels/ and frames/ for a split.
std::string_view split_dir(Split s);

Season parse_season(std::string_view s);
TimeOfDay parse_time_of_day(std::string_view s);
Split parse_split(std::string_view s);

// Normalized center-format box.
struct BoundingBox {
    int class_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    Occlusion occluded = Occlusion::visible;

    double x_min() const { return cx - w / 2.0; }
    double x_max() const { return cx + w / 2.0; }
    double y_min() const { return cy - h / 2.0; }
    double y_max() const { return cy + h / 2.0; }

    bool operator==(const BoundingBox&) const = default;
};

// Row-major 8-bit grayscale image.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const Raster&) const = default;
};

struct ScoredBox {
    BoundingBox box;
    double confidence = 0.0;
};

struct Frame {
    int frame_id = 0;
    std::vector<BoundingBox> boxes;
    std::optional<Raster> raster;
};

struct SequenceMeta {
    std::string sequence_id;
    double cost_hours = 0.0;
    int scene_id = 0;
    Season season = Season::winter;
    TimeOfDay time_of_day = TimeOfDay::morning;
    Split split = Split::train;

    bool operator==(const SequenceMeta&) const = default;
};

struct Sequence {
    SequenceMeta meta;
    std::vector<Frame> frames;
    // Per-frame flow-proxy statistics, filled by flow::compute_flow_stats.
    std::optional<std::vector<std::uint64_t>> motion_scores;
    std::optional<std::vector<std::uint64_t>> box_estimates;

    std::size_t length() const { return frames.size(); }
    const std::string& id() const { return meta.sequence_id; }
    bool has_flow_stats() const { return motion_scores.has_value() && box_estimates.has_value(); }

    std::size_t total_boxes() const;
    std::size_t occluded_boxes() const;
    std::uint64_t total_motion() const;         // requires flow stats
    std::uint64_t total_box_estimate() const;   // requires flow stats
};

// The pool of sequences across all splits plus the labeled/unlabeled partition
// of the training split. Acquisition order is append-only.
class PoolState {
public:
    PoolState() = default;

    // Adds a sequence. Train sequences start unlabeled.
    void add(Sequence seq);

    const std::map<std::string, Sequence>& sequences() const { return sequences_; }
    std::map<std::string, Sequence>& mutable_sequences() { return sequences_; }
    const Sequence& at(const std::string& id) const;
    Sequence& at(const std::string& id);
    bool contains(const std::string& id) const { return sequences_.count(id) != 0; }

    const std::vector<std::string>& labeled() const { return labeled_; }
    const std::set<std::string>& unlabeled() const { return unlabeled_; }

    // Moves the given train ids from unlabeled to labeled, in order.
    void acquire(std::span<const std::string> ids);
    // Returns all ids of a split, sorted.
    std::vector<std::string> ids_in(Split split) const;
    // Clears the labeled set, making every train sequence unlabeled again.
    void reset_labels();

    // Throws if the partition invariant is broken.
    void check_partition() const;

private:
    std::map<std::string, Sequence> sequences_;
    std::vector<std::string> labeled_;
    std::set<std::string> unlabeled_;
};

}  // namespace seqal
