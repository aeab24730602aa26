#include "seqal/types.hpp"

#include <algorithm>
#include <numeric>

#include "seqal/error.hpp"

namespace seqal {

std::string_view to_string(Season s) {
    switch (s) {
        case Season::winter: return "winter";
        case Season::spring: return "spring";
        case Season::summer: return "summer";
    }
    return "?";
}

std::string_view to_string(TimeOfDay t) {
    switch (t) {
        case TimeOfDay::morning: return "morning";
        case TimeOfDay::noon: return "noon";
        case TimeOfDay::evening: return "evening";
    }
    return "?";
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

std::string_view split_dir(Split s) {
    switch (s) {
        case Split::train: return "training";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

Season parse_season(std::string_view s) {
    if (s == "winter") return Season::winter;
    if (s == "spring") return Season::spring;
    if (s == "summer") return Season::summer;
    throw ManifestError("unknown season '" + std::string(s) + "'");
}

TimeOfDay parse_time_of_day(std::string_view s) {
    if (s == "morning") return TimeOfDay::morning;
    if (s == "noon") return TimeOfDay::noon;
    if (s == "evening") return TimeOfDay::evening;
    throw ManifestError("unknown time_of_day '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
    if (s == "train" || s == "training") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ManifestError("unknown split '" + std::string(s) + "'");
}

std::size_t Sequence::total_boxes() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.boxes.size();
    return n;
}

std::size_t Sequence::occluded_boxes() const {
    std::size_t n = 0;
    for (const auto& f : frames)
        for (const auto& b : f.boxes)
            if (b.occluded != Occlusion::visible) ++n;
    return n;
}

std::uint64_t Sequence::total_motion() const {
    if (!motion_scores) throw MissingRasterError("sequence " + id() + " has no flow statistics");
    return std::accumulate(motion_scores->begin(), motion_scores->end(), std::uint64_t{0});
}

std::uint64_t Sequence::total_box_estimate() const {
    if (!box_estimates) throw MissingRasterError("sequence " + id() + " has no flow statistics");
    return std::accumulate(box_estimates->begin(), box_estimates->end(), std::uint64_t{0});
}

void PoolState::add(Sequence seq) {
    const std::string id = seq.id();
    if (sequences_.count(id)) throw ManifestError("duplicate sequence id " + id);
    const bool train = seq.meta.split == Split::train;
    sequences_.emplace(id, std::move(seq));
    if (train) unlabeled_.insert(id);
}

const Sequence& PoolState::at(const std::string& id) const {
    auto it = sequences_.find(id);
    if (it == sequences_.end()) throw ManifestError("unknown sequence id " + id);
    return it->second;
}

Sequence& PoolState::at(const std::string& id) {
    auto it = sequences_.find(id);
    if (it == sequences_.end()) throw ManifestError("unknown sequence id " + id);
    return it->second;
}

void PoolState::acquire(std::span<const std::string> ids) {
    for (const auto& id : ids) {
        if (unlabeled_.erase(id) == 0)
            throw PoolExhaustedError("sequence " + id + " is not in the unlabeled pool");
        labeled_.push_back(id);
    }
}

std::vector<std::string> PoolState::ids_in(Split split) const {
    std::vector<std::string> out;
    for (const auto& [id, seq] : sequences_)
        if (seq.meta.split == split) out.push_back(id);
    return out;
}

void PoolState::reset_labels() {
    labeled_.clear();
    unlabeled_.clear();
    for (const auto& [id, seq] : sequences_)
        if (seq.meta.split == Split::train) unlabeled_.insert(id);
}

void PoolState::check_partition() const {
    std::set<std::string> labeled(labeled_.begin(), labeled_.end());
    if (labeled.size() != labeled_.size()) throw Error("labeled list contains duplicates");
    std::size_t train = 0;
    for (const auto& [id, seq] : sequences_) {
        if (seq.meta.split != Split::train) {
            if (labeled.count(id) || unlabeled_.count(id))
                throw Error("non-train sequence " + id + " in the acquisition partition");
            continue;
        }
        ++train;
        const bool in_l = labeled.count(id) != 0;
        const bool in_u = unlabeled_.count(id) != 0;
        if (in_l == in_u) throw Error("train sequence " + id + " breaks the labeled/unlabeled partition");
    }
    if (labeled.size() + unlabeled_.size() != train) throw Error("partition does not cover the train split");
}

}  // namespace seqal
