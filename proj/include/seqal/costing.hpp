#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seqal/acquisition.hpp"
#include "seqal/types.hpp"

namespace seqal::cost {

enum class Mode { sequential, singular };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

struct OverheadModel {
    double detector_gflops_per_frame = 4.1;
    double flow_gflops_per_pair = 30.54;

    void validate() const;
};

// Annotation hours charged for a sequence. Sequential mode charges the full
// cost; singular mode charges frames_taken keyframes at cost / ceil(N / r).
double sequence_cost(const SequenceMeta& meta, std::size_t length, Mode mode, int interpolation_rate,
                     std::size_t frames_taken);

// Number of frames that need full annotation at interpolation rate r.
std::size_t effective_frames(std::size_t length, int interpolation_rate);

// Hours charged for acquiring one frame in singular mode: keyframes
// (frame_id % r == 0) carry cost / ceil(N / r), interpolated frames are free.
double frame_cost(const SequenceMeta& meta, std::size_t length, int frame_id, int interpolation_rate);

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

// Cumulative cost when acquiring in ascending (lower) or descending (upper) cost order.
Bounds theoretical_cost_bounds(std::vector<double> costs, std::size_t n_rounds);

// Per-round inference cost over the unlabeled frames, cumulated.
std::vector<double> overhead_inferential(const OverheadModel& model, std::span<const std::size_t> unlabeled_frames_per_round);

// One-off flow cost over the training frames.
double overhead_conformal(const OverheadModel& model, std::size_t total_train_frames);

// Front-loaded overhead charged by a strategy: zero for the zero-overhead
// kinds, the flow cost for flow-based conformal kinds. Inferential kinds are
// charged per round instead and return 0 here.
double front_loaded_overhead(const OverheadModel& model, acq::StrategyKind kind, std::size_t total_train_frames);

// Inferential overhead envelope. Each round charges inference over the frames
// still in the pool, then removes one sequence: removing longest first gives
// the lower bound, shortest first the upper bound.
Bounds overhead_bounds(const OverheadModel& model, std::vector<std::size_t> sequence_lengths, std::size_t n_rounds);

struct LedgerEntry {
    int round = 0;
    std::vector<std::string> selected;
    double round_cost_hours = 0.0;
    double cumulative_cost_hours = 0.0;
    double round_overhead_gflops = 0.0;
    double cumulative_overhead_gflops = 0.0;

    bool operator==(const LedgerEntry&) const = default;
};

// Per-round annotation and overhead charges with running totals.
class CostLedger {
public:
    const LedgerEntry& add_round(int round, std::vector<std::string> selected, double cost_hours, double overhead_gflops);

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    double total_cost() const { return entries_.empty() ? 0.0 : entries_.back().cumulative_cost_hours; }
    double total_overhead() const { return entries_.empty() ? 0.0 : entries_.back().cumulative_overhead_gflops; }

    // round,selected_ids,round_cost_h,cum_cost_h,round_gflops,cum_gflops
    std::string to_csv(bool header = true) const;

private:
    std::vector<LedgerEntry> entries_;
};

}  // namespace seqal::cost
