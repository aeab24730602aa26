#pragma once

// Experiment driver. Per seed: draw the seed sequences, then for each round
// select, acquire, charge annotation and overhead, refresh the surrogate,
// evaluate on the test split and record.
//
// Inference-based strategies run the model over the unlabeled pool at the end
// of every round, seed round included; round r selects with the scores from
// the end of round r-1. Flow-based strategies pay for flow statistics once, in
// round 0.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "seqal/acquisition.hpp"
#include "seqal/costing.hpp"
#include "seqal/flowproxy.hpp"
#include "seqal/surrogate.hpp"
#include "seqal/synth.hpp"
#include "seqal/types.hpp"

namespace seqal::run {

struct RunConfig {
    // Synthetic generator settings or the root of a FOCAL tree.
    std::variant<synth::GenConfig, std::filesystem::path> pool_source = synth::GenConfig{};
    acq::StrategySpec strategy;
    cost::Mode mode = cost::Mode::sequential;
    int interpolation_rate = 1;
    int seed_sequences = 2;
    int rounds = 11;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    surrogate::SurrogateParams surrogate;
    // Directory of logged traces (<strategy>_seed<seed>.csv); replaces the surrogate's scores.
    std::optional<std::filesystem::path> trace_dir;
    cost::OverheadModel overhead;
    double min_box_pixels = 50.0;
    double reference_resolution = 640.0;
    std::vector<double> iou_thresholds = {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    bool evaluate = true;
    flow::FlowParams flow;
    int frames_per_round = 100;  // singular mode batch
    unsigned threads = 1;

    // Throws ConfigError / ModeError on an unusable configuration.
    void validate() const;
};

struct RoundRecord {
    int round = 0;
    std::uint64_t seed = 0;
    acq::StrategyKind strategy = acq::StrategyKind::random;
    std::vector<std::string> selected;
    double round_cost_hours = 0.0;
    double cum_cost_hours = 0.0;
    double cum_overhead_gflops = 0.0;
    std::optional<double> map50;
    std::optional<double> map5095;

    bool operator==(const RoundRecord&) const = default;
};

// Instrumentation of what a run asked of the model and the flow proxy.
struct Counters {
    std::size_t scorer_calls = 0;       // per-sequence model score queries for acquisition
    std::size_t flow_computations = 0;  // sequences whose flow statistics were computed
};

struct SeedRun {
    std::uint64_t seed = 0;
    acq::StrategyKind strategy = acq::StrategyKind::random;
    std::vector<RoundRecord> records;
    cost::CostLedger ledger;
    surrogate::ScoreTrace trace;
    Counters counters;
};

struct RunResult {
    std::vector<SeedRun> runs;
    std::size_t flow_computations = 0;  // during pool preparation

    std::vector<RoundRecord> records() const;
    Counters totals() const;
};

// Builds or loads the pool and computes flow statistics when the strategy reads them.
PoolState prepare_pool(const RunConfig& cfg, std::size_t* flow_computations = nullptr);

// Full experiment on a freshly prepared pool.
RunResult run_experiment(const RunConfig& cfg);
// Experiment on a prepared pool (labels are reset per seed; flow statistics
// must already be present for flow-based strategies).
RunResult run_experiment(const RunConfig& cfg, const PoolState& pool);

// Frame-level acquisition; the sequential runner dispatches here in singular mode.
RunResult run_singular(const RunConfig& cfg, const PoolState& pool);

// Uniform draw of k train sequences for the seed round.
std::vector<std::string> draw_seed_sequences(const PoolState& pool, int k, std::uint64_t seed);

// Boxes whose shorter side, scaled to the reference resolution, is under min_pixels.
bool is_small_box(const BoundingBox& b, double min_pixels, double reference_resolution);

struct AggregateRow {
    acq::StrategyKind strategy = acq::StrategyKind::random;
    int round = 0;
    std::size_t n = 0;
    double mean_cum_cost = 0.0;
    std::optional<double> se_cum_cost;
    double mean_cum_overhead = 0.0;
    std::optional<double> mean_map50;
    std::optional<double> se_map50;
    std::optional<double> mean_map5095;
    std::optional<double> se_map5095;
};

// Mean and standard error (sample SD / sqrt(n)) per (strategy, round) across
// seeds. SE is null for a single seed.
std::vector<AggregateRow> aggregate(std::span<const RoundRecord> records);

// CSV renderings; all reals at 6 decimals, nulls as empty fields.
std::string records_csv(std::span<const RoundRecord> records);
std::string ledger_csv(std::span<const SeedRun> runs);
std::string curves_csv(std::span<const RoundRecord> records);
std::string aggregate_csv(std::span<const AggregateRow> rows);
std::vector<AggregateRow> parse_aggregate_csv(const std::string& text);

std::string trace_file_name(acq::StrategyKind kind, std::uint64_t seed);

// Writes records.csv, ledger.csv, curves.csv, aggregate.csv and, when asked,
// traces/<strategy>_seed<seed>.csv with their metrics files.
void write_outputs(const std::filesystem::path& dir, std::span<const RunResult> results, bool write_traces);

}  // namespace seqal::run
