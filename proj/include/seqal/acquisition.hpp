#pragma once

// Query strategies. Every strategy reduces to "maximize a per-candidate
// criterion over the unlabeled pool", with ties broken by ascending id so that
// results never depend on enumeration order.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqal/surrogate.hpp"
#include "seqal/types.hpp"

namespace seqal::acq {

enum class StrategyKind {
    random,
    entropy,
    least_confidence,
    margin,
    false_switch,
    gauss_switch,
    coreset,
    least_frame,
    most_frame,
    min_motion,
    min_max_motion,
    min_boxes,
};

// Which extreme min_max_motion takes on odd rounds (the first acquisition is
// round 1). max_first is the plain parity rule: even rounds take the minimum,
// odd rounds the maximum.
enum class ParityPhase { max_first, min_first };

struct StrategySpec {
    StrategyKind kind = StrategyKind::random;
    int batch_size = 1;
    ParityPhase parity_phase = ParityPhase::max_first;
};

inline constexpr std::array<StrategyKind, 12> kAllStrategies = {
    StrategyKind::random,      StrategyKind::entropy,        StrategyKind::least_confidence,
    StrategyKind::margin,      StrategyKind::false_switch,   StrategyKind::gauss_switch,
    StrategyKind::coreset,     StrategyKind::least_frame,    StrategyKind::most_frame,
    StrategyKind::min_motion,  StrategyKind::min_max_motion, StrategyKind::min_boxes,
};

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view s);
std::string_view to_string(ParityPhase p);
ParityPhase parse_parity(std::string_view s);

// Uses only pool statistics (no model).
bool is_conformal(StrategyKind k);
// Needs per-round model scores over the unlabeled pool.
bool needs_model_scores(StrategyKind k);
// Reads flow-proxy statistics.
bool uses_flow_stats(StrategyKind k);
// Queries cost no computation beyond the selection itself.
bool zero_overhead(StrategyKind k);

// Summary over frames: arithmetic mean.
double sequence_score(std::span<const double> per_frame);

// Uncertainty of a frame from its objectness probability. All three peak at
// p = 0.5; entropy uses the natural log.
double score_entropy(double p);
double score_least_confidence(double p);
double score_margin(double p);

// Per-frame |curr - prev|. An empty `prev` means there is no previous round
// and yields zeros.
std::vector<double> score_switch(std::span<const int> prev, std::span<const int> curr);

struct GmmFit {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<double, 2> means{0.0, 0.0};
    std::array<double, 2> variances{1.0, 1.0};
    int iterations = 0;
    double log_likelihood = 0.0;
    bool degenerate = false;

    // Posterior probability that x belongs to component k.
    double responsibility(double x, int k) const;
    int higher_mean_component() const { return means[1] > means[0] ? 1 : 0; }
};

inline constexpr double kVarianceFloor = 1e-12;

// One-dimensional two-component Gaussian mixture fitted by EM.
GmmFit fit_gmm2(std::span<const double> values, int max_iter = 500, double tol = 1e-12);

// Model outputs available to inferential strategies at a round.
struct ModelScores {
    // Scores from the most recent model, for every unlabeled sequence.
    std::map<std::string, std::vector<surrogate::FrameScore>> current;
    // Scores from the model one round earlier; absent before the second model exists.
    std::optional<std::map<std::string, std::vector<surrogate::FrameScore>>> previous;
    // Sequence embeddings for coreset, for every train sequence.
    std::map<std::string, std::vector<double>> embeddings;
};

// Top-b ids by descending score, ties by ascending id.
std::vector<std::string> rank_by_score(const std::map<std::string, double>& scores, std::size_t b);

// Per-sequence criterion (higher is selected first) for score-based kinds.
std::map<std::string, double> sequence_criteria(const StrategySpec& spec, const PoolState& pool,
                                                const ModelScores* scores, int round);

// Picks the next batch from pool.unlabeled(). Conformal kinds require
// scores == nullptr; inferential kinds other than random require scores.
std::vector<std::string> select(const StrategySpec& spec, const PoolState& pool, const ModelScores* scores,
                                int round, std::uint64_t rng_seed);

// k-center greedy: repeatedly takes the candidate farthest from its nearest center.
std::vector<std::string> k_center_greedy(const std::map<std::string, std::vector<double>>& candidates,
                                         std::vector<std::vector<double>> centers, std::size_t b);

struct FrameKey {
    std::string sequence_id;
    int frame_id = 0;

    auto operator<=>(const FrameKey&) const = default;
};

// Frame-level acquisition for singular mode. Only random and the
// uncertainty/switch kinds are meaningful per frame; others raise ModeError.
std::vector<FrameKey> select_frames(const StrategySpec& spec, std::span<const FrameKey> unlabeled,
                                    const ModelScores* scores, std::size_t b, int round, std::uint64_t rng_seed);

}  // namespace seqal::acq
