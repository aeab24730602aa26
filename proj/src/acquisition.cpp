#include "seqal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

namespace seqal::acq {
namespace {

using ScoreMap = std::map<std::string, std::vector<surrogate::FrameScore>>;

template <typename Key>
std::vector<Key> top_b(std::vector<std::pair<Key, double>> items, std::size_t b) {
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    std::vector<Key> out;
    for (std::size_t i = 0; i < std::min(b, items.size()); ++i) out.push_back(items[i].first);
    return out;
}

// Draws b items uniformly without replacement from a sorted candidate list.
template <typename Key>
std::vector<Key> draw_uniform(std::vector<Key> sorted, std::size_t b, std::uint64_t seed, int round,
                              std::string_view stream) {
    rng::SplitMix64 eng(rng::combine(seed, static_cast<std::uint64_t>(round), stream));
    const std::size_t n = sorted.size();
    for (std::size_t i = 0; i < std::min(b, n); ++i) {
        const auto j = static_cast<std::size_t>(rng::uniform_int(eng, static_cast<std::int64_t>(i),
                                                                 static_cast<std::int64_t>(n - 1)));
        std::swap(sorted[i], sorted[j]);
    }
    sorted.resize(std::min(b, n));
    return sorted;
}

double frame_uncertainty(StrategyKind kind, double p) {
    switch (kind) {
        case StrategyKind::entropy: return score_entropy(p);
        case StrategyKind::least_confidence: return score_least_confidence(p);
        case StrategyKind::margin: return score_margin(p);
        default: throw DomainError("not an uncertainty strategy");
    }
}

bool is_switch(StrategyKind k) { return k == StrategyKind::false_switch || k == StrategyKind::gauss_switch; }

bool is_uncertainty(StrategyKind k) {
    return k == StrategyKind::entropy || k == StrategyKind::least_confidence || k == StrategyKind::margin;
}

const std::vector<surrogate::FrameScore>& scores_for(const ScoreMap& m, const std::string& id) {
    auto it = m.find(id);
    if (it == m.end()) throw MissingScoresError("no model scores for sequence " + id);
    return it->second;
}

std::vector<int> counts_of(const std::vector<surrogate::FrameScore>& s) {
    std::vector<int> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), [](const auto& f) { return f.pred_count; });
    return out;
}

// GauSS: sample from the candidates that the higher-mean mixture component
// owns; fall back to plain top-score when the fit is degenerate or owns fewer
// than b candidates.
template <typename Key>
std::vector<Key> gauss_pick(const std::vector<std::pair<Key, double>>& items, std::size_t b, std::uint64_t seed,
                            int round) {
    std::vector<double> values;
    for (const auto& [k, v] : items) values.push_back(v);
    if (values.size() < 2) return top_b(items, b);
    const GmmFit fit = fit_gmm2(values);
    if (fit.degenerate) return top_b(items, b);
    const int hi = fit.higher_mean_component();
    std::vector<Key> members;
    for (const auto& [k, v] : items)
        if (fit.responsibility(v, hi) > 0.5) members.push_back(k);
    if (members.size() < b) return top_b(items, b);
    std::sort(members.begin(), members.end());
    return draw_uniform(std::move(members), b, seed, round, "gauss");
}

double log_normal_pdf(double x, double mean, double var) {
    constexpr double kLog2Pi = 1.8378770664093453;
    return -0.5 * (kLog2Pi + std::log(var) + (x - mean) * (x - mean) / var);
}

double percentile(const std::vector<double>& sorted, double p) {
    const double pos = p * double(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string_view to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::random: return "random";
        case StrategyKind::entropy: return "entropy";
        case StrategyKind::least_confidence: return "least_confidence";
        case StrategyKind::margin: return "margin";
        case StrategyKind::false_switch: return "false_switch";
        case StrategyKind::gauss_switch: return "gauss_switch";
        case StrategyKind::coreset: return "coreset";
        case StrategyKind::least_frame: return "least_frame";
        case StrategyKind::most_frame: return "most_frame";
        case StrategyKind::min_motion: return "min_motion";
        case StrategyKind::min_max_motion: return "min_max_motion";
        case StrategyKind::min_boxes: return "min_boxes";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view s) {
    for (auto k : kAllStrategies)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown strategy kind '" + std::string(s) + "'");
}

std::string_view to_string(ParityPhase p) { return p == ParityPhase::max_first ? "max_first" : "min_first"; }

ParityPhase parse_parity(std::string_view s) {
    if (s == "max_first") return ParityPhase::max_first;
    if (s == "min_first") return ParityPhase::min_first;
    throw ConfigError("unknown parity_phase '" + std::string(s) + "'");
}

bool is_conformal(StrategyKind k) {
    return k == StrategyKind::least_frame || k == StrategyKind::most_frame || k == StrategyKind::min_motion ||
           k == StrategyKind::min_max_motion || k == StrategyKind::min_boxes;
}

bool needs_model_scores(StrategyKind k) { return !is_conformal(k) && k != StrategyKind::random; }

bool uses_flow_stats(StrategyKind k) {
    return k == StrategyKind::min_motion || k == StrategyKind::min_max_motion || k == StrategyKind::min_boxes;
}

bool zero_overhead(StrategyKind k) {
    return k == StrategyKind::random || k == StrategyKind::least_frame || k == StrategyKind::most_frame;
}

double sequence_score(std::span<const double> per_frame) {
    if (per_frame.empty()) throw EmptyScoreError("no frame scores to summarize");
    return std::accumulate(per_frame.begin(), per_frame.end(), 0.0) / double(per_frame.size());
}

static void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability " + std::to_string(p) + " outside [0,1]");
}

double score_entropy(double p) {
    check_probability(p);
    auto term = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
    return term(p) + term(1.0 - p);
}

double score_least_confidence(double p) {
    check_probability(p);
    return 1.0 - std::max(p, 1.0 - p);
}

double score_margin(double p) {
    check_probability(p);
    return -std::abs(2.0 * p - 1.0);
}

std::vector<double> score_switch(std::span<const int> prev, std::span<const int> curr) {
    if (prev.empty()) return std::vector<double>(curr.size(), 0.0);
    if (prev.size() != curr.size())
        throw ShapeError("switch inputs have " + std::to_string(prev.size()) + " and " + std::to_string(curr.size()) +
                         " frames");
    std::vector<double> out(curr.size());
    for (std::size_t i = 0; i < curr.size(); ++i) out[i] = std::abs(double(curr[i]) - double(prev[i]));
    return out;
}

double GmmFit::responsibility(double x, int k) const {
    const double l0 = std::log(weights[0]) + log_normal_pdf(x, means[0], variances[0]);
    const double l1 = std::log(weights[1]) + log_normal_pdf(x, means[1], variances[1]);
    const double m = std::max(l0, l1);
    const double p0 = std::exp(l0 - m), p1 = std::exp(l1 - m);
    return (k == 0 ? p0 : p1) / (p0 + p1);
}

GmmFit fit_gmm2(std::span<const double> values, int max_iter, double tol) {
    if (values.size() < 2) throw DomainError("a two-component mixture needs at least two values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = double(values.size());

    GmmFit fit;
    if (sorted.front() == sorted.back()) {
        fit.means = {sorted.front(), sorted.front()};
        fit.variances = {kVarianceFloor, kVarianceFloor};
        fit.degenerate = true;
        return fit;
    }

    fit.means = {percentile(sorted, 0.25), percentile(sorted, 0.75)};
    if (fit.means[0] == fit.means[1]) fit.means = {sorted.front(), sorted.back()};
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double var = 0.0;
    for (double x : sorted) var += (x - mean) * (x - mean);
    var = std::max(var / n, kVarianceFloor);
    fit.variances = {var, var};

    std::vector<double> r1(values.size());
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        // E-step
        double ll = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double l0 = std::log(fit.weights[0]) + log_normal_pdf(values[i], fit.means[0], fit.variances[0]);
            const double l1 = std::log(fit.weights[1]) + log_normal_pdf(values[i], fit.means[1], fit.variances[1]);
            const double m = std::max(l0, l1);
            const double s = std::exp(l0 - m) + std::exp(l1 - m);
            r1[i] = std::exp(l1 - m) / s;
            ll += m + std::log(s);
        }
        fit.log_likelihood = ll;
        fit.iterations = it + 1;
        if (std::abs(ll - prev_ll) < tol) break;
        prev_ll = ll;

        // M-step
        double n1 = 0.0, s1 = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            n1 += r1[i];
            s1 += r1[i] * values[i];
            s0 += (1.0 - r1[i]) * values[i];
        }
        const double n0 = n - n1;
        if (n0 <= 0.0 || n1 <= 0.0) {
            fit.degenerate = true;
            break;
        }
        fit.weights = {n0 / n, n1 / n};
        fit.means = {s0 / n0, s1 / n1};
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            v0 += (1.0 - r1[i]) * (values[i] - fit.means[0]) * (values[i] - fit.means[0]);
            v1 += r1[i] * (values[i] - fit.means[1]) * (values[i] - fit.means[1]);
        }
        fit.variances = {std::max(v0 / n0, kVarianceFloor), std::max(v1 / n1, kVarianceFloor)};
    }
    if (fit.means[0] == fit.means[1]) fit.degenerate = true;
    return fit;
}

std::vector<std::string> rank_by_score(const std::map<std::string, double>& scores, std::size_t b) {
    return top_b(std::vector<std::pair<std::string, double>>(scores.begin(), scores.end()), b);
}

std::vector<std::string> k_center_greedy(const std::map<std::string, std::vector<double>>& candidates,
                                         std::vector<std::vector<double>> centers, std::size_t b) {
    auto dist2 = [](const std::vector<double>& a, const std::vector<double>& c) {
        if (a.size() != c.size()) throw FeatureError("embedding dimensions differ");
        double d = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - c[j]) * (a[j] - c[j]);
        return d;
    };
    std::map<std::string, double> nearest;
    for (const auto& [id, e] : candidates) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, dist2(e, c));
        nearest[id] = best;
    }
    std::vector<std::string> picked;
    while (picked.size() < b && !nearest.empty()) {
        const std::string id = rank_by_score(nearest, 1).front();
        picked.push_back(id);
        const auto& e = candidates.at(id);
        nearest.erase(id);
        for (auto& [other, d] : nearest) d = std::min(d, dist2(candidates.at(other), e));
    }
    return picked;
}

std::map<std::string, double> sequence_criteria(const StrategySpec& spec, const PoolState& pool,
                                                const ModelScores* scores, int round) {
    std::map<std::string, double> out;
    const auto kind = spec.kind;
    if (is_conformal(kind)) {
        bool take_max = false;
        if (kind == StrategyKind::min_max_motion) {
            const bool odd = (round % 2) != 0;
            take_max = spec.parity_phase == ParityPhase::max_first ? odd : !odd;
        }
        for (const auto& id : pool.unlabeled()) {
            const Sequence& s = pool.at(id);
            double v = 0.0;
            switch (kind) {
                case StrategyKind::least_frame: v = -double(s.length()); break;
                case StrategyKind::most_frame: v = double(s.length()); break;
                case StrategyKind::min_motion: v = -double(s.total_motion()); break;
                case StrategyKind::min_boxes: v = -double(s.total_box_estimate()); break;
                case StrategyKind::min_max_motion:
                    v = take_max ? double(s.total_motion()) : -double(s.total_motion());
                    break;
                default: break;
            }
            out[id] = v;
        }
        return out;
    }
    if (!scores) throw MissingScoresError(std::string(to_string(kind)) + " needs model scores");
    for (const auto& id : pool.unlabeled()) {
        const auto& cur = scores_for(scores->current, id);
        if (cur.empty()) throw EmptyScoreError("sequence " + id + " has no frame scores");
        std::vector<double> per_frame;
        if (is_uncertainty(kind)) {
            for (const auto& f : cur) per_frame.push_back(frame_uncertainty(kind, f.objectness));
        } else if (is_switch(kind)) {
            std::vector<int> prev;
            if (scores->previous) prev = counts_of(scores_for(*scores->previous, id));
            per_frame = score_switch(prev, counts_of(cur));
        } else {
            throw DomainError(std::string(to_string(kind)) + " has no per-sequence score");
        }
        out[id] = sequence_score(per_frame);
    }
    return out;
}

std::vector<std::string> select(const StrategySpec& spec, const PoolState& pool, const ModelScores* scores,
                                int round, std::uint64_t rng_seed) {
    if (spec.batch_size < 1) throw DomainError("batch size must be positive");
    const auto b = static_cast<std::size_t>(spec.batch_size);
    if (pool.unlabeled().size() < b)
        throw PoolExhaustedError("asked for " + std::to_string(b) + " sequences, " +
                                 std::to_string(pool.unlabeled().size()) + " unlabeled");
    const auto kind = spec.kind;
    if (is_conformal(kind) && scores)
        throw UnexpectedScoresError(std::string(to_string(kind)) + " must not consult model scores");
    if (needs_model_scores(kind) && !scores)
        throw MissingScoresError(std::string(to_string(kind)) + " needs model scores");

    const std::vector<std::string> ids(pool.unlabeled().begin(), pool.unlabeled().end());
    if (kind == StrategyKind::random) return draw_uniform(ids, b, rng_seed, round, "random");
    if (is_switch(kind) && !scores->previous) return draw_uniform(ids, b, rng_seed, round, "random");
    if (kind == StrategyKind::coreset) {
        std::map<std::string, std::vector<double>> candidates;
        for (const auto& id : ids) {
            auto it = scores->embeddings.find(id);
            if (it == scores->embeddings.end()) throw MissingScoresError("no embedding for sequence " + id);
            candidates.emplace(id, it->second);
        }
        std::vector<std::vector<double>> centers;
        for (const auto& id : pool.labeled()) {
            auto it = scores->embeddings.find(id);
            if (it == scores->embeddings.end()) throw MissingScoresError("no embedding for sequence " + id);
            centers.push_back(it->second);
        }
        return k_center_greedy(candidates, std::move(centers), b);
    }

    const auto criteria = sequence_criteria(spec, pool, scores, round);
    if (kind == StrategyKind::gauss_switch)
        return gauss_pick(std::vector<std::pair<std::string, double>>(criteria.begin(), criteria.end()), b, rng_seed,
                          round);
    return rank_by_score(criteria, b);
}

std::vector<FrameKey> select_frames(const StrategySpec& spec, std::span<const FrameKey> unlabeled,
                                    const ModelScores* scores, std::size_t b, int round, std::uint64_t rng_seed) {
    const auto kind = spec.kind;
    if (is_conformal(kind) || kind == StrategyKind::coreset)
        throw ModeError(std::string(to_string(kind)) + " cannot rank individual frames");
    if (unlabeled.size() < b)
        throw PoolExhaustedError("asked for " + std::to_string(b) + " frames, " + std::to_string(unlabeled.size()) +
                                 " unlabeled");
    std::vector<FrameKey> keys(unlabeled.begin(), unlabeled.end());
    std::sort(keys.begin(), keys.end());
    if (kind == StrategyKind::random) return draw_uniform(std::move(keys), b, rng_seed, round, "random");
    if (!scores) throw MissingScoresError(std::string(to_string(kind)) + " needs model scores");
    if (is_switch(kind) && !scores->previous) return draw_uniform(std::move(keys), b, rng_seed, round, "random");

    std::vector<std::pair<FrameKey, double>> items;
    items.reserve(keys.size());
    for (const auto& k : keys) {
        const auto& cur = scores_for(scores->current, k.sequence_id);
        if (k.frame_id < 0 || static_cast<std::size_t>(k.frame_id) >= cur.size())
            throw MissingScoresError("no score for frame " + std::to_string(k.frame_id) + " of " + k.sequence_id);
        const auto& f = cur[static_cast<std::size_t>(k.frame_id)];
        double v = 0.0;
        if (is_uncertainty(kind)) {
            v = frame_uncertainty(kind, f.objectness);
        } else {
            const auto& prev = scores_for(*scores->previous, k.sequence_id);
            v = std::abs(double(f.pred_count) - double(prev.at(static_cast<std::size_t>(k.frame_id)).pred_count));
        }
        items.emplace_back(k, v);
    }
    if (kind == StrategyKind::gauss_switch) return gauss_pick(items, b, rng_seed, round);
    return top_b(std::move(items), b);
}

}  // namespace seqal::acq
