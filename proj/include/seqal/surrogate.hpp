#pragma once

// Deterministic stand-in for a detector retrained every round.
//
// Detection quality for a target sequence grows with how well the labeled set
// covers it in feature space:
//
//   q = 1 - exp(-kappa * sum_{s in labeled} w_s * exp(-|f_s - f_t|^2 / (2 sigma^2)))
//
// with sigma the pool's median pairwise feature distance. Per-frame scores and
// test-set predictions are q perturbed by noise keyed on
// (noise_seed, round, sequence_id, frame_id), so any frame can be scored in
// isolation and reruns are bit-identical.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqal/types.hpp"

namespace seqal::surrogate {

using FeatureVector = std::vector<double>;

// Per-sequence features: standardized (mean box count, mean box area, length),
// a one-hot scene code and the season ordinal. Everything is derived from the
// annotations, so building features never touches rasters or flow statistics.
class FeatureSpace {
public:
    explicit FeatureSpace(const PoolState& pool);

    const FeatureVector& features(const std::string& id) const;
    // The standardized numeric part of the features, used as a sequence embedding.
    FeatureVector embedding(const std::string& id) const;
    double sigma() const { return sigma_; }
    std::size_t dimension() const { return dimension_; }

private:
    std::map<std::string, FeatureVector> features_;
    double sigma_ = 1.0;
    std::size_t dimension_ = 0;
};

struct SurrogateParams {
    double kappa = 0.15;
    std::uint64_t noise_seed = 7;
};

struct SurrogateState {
    int round_index = 0;
    std::vector<FeatureVector> labeled_features;
    // Optional per-sequence coverage weights in [0,1]; empty means all 1.
    std::vector<double> labeled_weights;
    double kappa = 0.15;
    std::uint64_t noise_seed = 7;
    double sigma = 1.0;
};

SurrogateState make_state(const FeatureSpace& space, std::span<const std::string> labeled, int round,
                          const SurrogateParams& params);

double similarity(const SurrogateState& state, std::span<const double> a, std::span<const double> b);
double quality(const SurrogateState& state, std::span<const double> target);

struct FrameScore {
    double objectness = 0.0;
    int pred_count = 0;

    bool operator==(const FrameScore&) const = default;
};

// Objectness values are quantized to 1e-6 so that logged traces replay exactly.
std::vector<FrameScore> frame_scores(const SurrogateState& state, const Sequence& seq,
                                     std::span<const double> target_features);

// Per-frame predictions for a test sequence.
std::vector<std::vector<ScoredBox>> predict_test(const SurrogateState& state, const Sequence& seq,
                                                 std::span<const double> target_features);

double quantize6(double x);

// Logged per-round scores from a detector run (or exported from a surrogate run).
struct TestMetrics {
    std::optional<double> map50;
    std::optional<double> map5095;
};

struct ScoreTrace {
    // round -> sequence_id -> per-frame scores
    std::map<int, std::map<std::string, std::vector<FrameScore>>> rounds;
    std::map<int, TestMetrics> metrics;
};

const std::map<std::string, std::vector<FrameScore>>& replay_scores(const ScoreTrace& trace, int round);
std::optional<TestMetrics> replay_metrics(const ScoreTrace& trace, int round);

// Scores: round,sequence_id,frame_id,uncertainty,pred_count. The uncertainty
// column carries the per-frame objectness probability. Metrics: round,map50,map5095.
void write_trace(const ScoreTrace& trace, const std::filesystem::path& scores_csv,
                 const std::filesystem::path& metrics_csv);
ScoreTrace read_trace(const std::filesystem::path& scores_csv, const std::filesystem::path& metrics_csv);
// The metrics file that accompanies a scores file: <stem>.metrics.csv.
std::filesystem::path metrics_path_for(const std::filesystem::path& scores_csv);

}  // namespace seqal::surrogate
