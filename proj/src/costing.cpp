#include "seqal/costing.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <functional>

#include "seqal/error.hpp"

namespace seqal::cost {

std::string_view to_string(Mode m) { return m == Mode::sequential ? "sequential" : "singular"; }

Mode parse_mode(std::string_view s) {
    if (s == "sequential") return Mode::sequential;
    if (s == "singular") return Mode::singular;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

void OverheadModel::validate() const {
    if (!(detector_gflops_per_frame > 0.0) || !(flow_gflops_per_pair > 0.0))
        throw ConfigError("overhead GFLOPS must be positive");
}

std::size_t effective_frames(std::size_t length, int interpolation_rate) {
    if (interpolation_rate < 1) throw DomainError("interpolation rate must be at least 1");
    const auto r = static_cast<std::size_t>(interpolation_rate);
    return (length + r - 1) / r;
}

double sequence_cost(const SequenceMeta& meta, std::size_t length, Mode mode, int interpolation_rate,
                     std::size_t frames_taken) {
    if (interpolation_rate < 1) throw DomainError("interpolation rate must be at least 1");
    if (mode == Mode::sequential) return meta.cost_hours;
    if (frames_taken > length)
        throw DomainError(fmt::format("{} frames taken from a {}-frame sequence", frames_taken, length));
    if (frames_taken == 0) return 0.0;
    return double(frames_taken) * meta.cost_hours / double(effective_frames(length, interpolation_rate));
}

double frame_cost(const SequenceMeta& meta, std::size_t length, int frame_id, int interpolation_rate) {
    const std::size_t eff = effective_frames(length, interpolation_rate);
    if (frame_id < 0 || static_cast<std::size_t>(frame_id) >= length)
        throw DomainError(fmt::format("frame {} outside a {}-frame sequence", frame_id, length));
    return frame_id % interpolation_rate == 0 ? meta.cost_hours / double(eff) : 0.0;
}

Bounds theoretical_cost_bounds(std::vector<double> costs, std::size_t n_rounds) {
    if (n_rounds > costs.size())
        throw PoolExhaustedError(fmt::format("{} rounds requested from {} sequences", n_rounds, costs.size()));
    Bounds out;
    std::sort(costs.begin(), costs.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n_rounds; ++i) out.lower.push_back(acc += costs[i]);
    acc = 0.0;
    for (std::size_t i = 0; i < n_rounds; ++i) out.upper.push_back(acc += costs[costs.size() - 1 - i]);
    return out;
}

std::vector<double> overhead_inferential(const OverheadModel& model, std::span<const std::size_t> unlabeled_frames_per_round) {
    std::vector<double> out;
    double acc = 0.0;
    for (std::size_t frames : unlabeled_frames_per_round) out.push_back(acc += model.detector_gflops_per_frame * double(frames));
    return out;
}

double overhead_conformal(const OverheadModel& model, std::size_t total_train_frames) {
    return model.flow_gflops_per_pair * double(total_train_frames);
}

double front_loaded_overhead(const OverheadModel& model, acq::StrategyKind kind, std::size_t total_train_frames) {
    if (acq::uses_flow_stats(kind)) return overhead_conformal(model, total_train_frames);
    return 0.0;
}

Bounds overhead_bounds(const OverheadModel& model, std::vector<std::size_t> sequence_lengths, std::size_t n_rounds) {
    if (n_rounds > sequence_lengths.size())
        throw PoolExhaustedError(fmt::format("{} rounds requested from {} sequences", n_rounds, sequence_lengths.size()));
    auto simulate = [&](std::vector<std::size_t> order) {
        std::size_t remaining = 0;
        for (auto n : order) remaining += n;
        std::vector<std::size_t> per_round;
        for (std::size_t i = 0; i < n_rounds; ++i) {
            per_round.push_back(remaining);
            remaining -= order[i];
        }
        return overhead_inferential(model, per_round);
    };
    std::vector<std::size_t> longest_first = sequence_lengths;
    std::sort(longest_first.begin(), longest_first.end(), std::greater<>());
    std::vector<std::size_t> shortest_first = std::move(sequence_lengths);
    std::sort(shortest_first.begin(), shortest_first.end());
    return {simulate(std::move(longest_first)), simulate(std::move(shortest_first))};
}

const LedgerEntry& CostLedger::add_round(int round, std::vector<std::string> selected, double cost_hours,
                                         double overhead_gflops) {
    if (cost_hours < 0.0 || overhead_gflops < 0.0) throw DomainError("negative charge");
    LedgerEntry e;
    e.round = round;
    e.selected = std::move(selected);
    e.round_cost_hours = cost_hours;
    e.round_overhead_gflops = overhead_gflops;
    e.cumulative_cost_hours = total_cost() + cost_hours;
    e.cumulative_overhead_gflops = total_overhead() + overhead_gflops;
    entries_.push_back(std::move(e));
    return entries_.back();
}

std::string CostLedger::to_csv(bool header) const {
    std::string out = header ? "round,selected_ids,round_cost_h,cum_cost_h,round_gflops,cum_gflops\n" : "";
    for (const auto& e : entries_)
        out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", e.round, fmt::join(e.selected, ";"),
                           e.round_cost_hours, e.cumulative_cost_hours, e.round_overhead_gflops,
                           e.cumulative_overhead_gflops);
    return out;
}

}  // namespace seqal::cost
