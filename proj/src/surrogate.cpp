#include "seqal/surrogate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seqal/error.hpp"
#include "seqal/rng.hpp"

namespace seqal::surrogate {
namespace {

constexpr std::size_t kNumeric = 3;

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

BoundingBox clip_box(double cx, double cy, double w, double h, int class_id) {
    const double x0 = std::clamp(cx - w / 2.0, 0.0, 1.0), x1 = std::clamp(cx + w / 2.0, 0.0, 1.0);
    const double y0 = std::clamp(cy - h / 2.0, 0.0, 1.0), y1 = std::clamp(cy + h / 2.0, 0.0, 1.0);
    BoundingBox b;
    b.class_id = class_id;
    b.cx = (x0 + x1) / 2.0;
    b.cy = (y0 + y1) / 2.0;
    b.w = std::max(x1 - x0, 1e-6);
    b.h = std::max(y1 - y0, 1e-6);
    return b;
}

}  // namespace

double quantize6(double x) { return std::round(x * 1e6) / 1e6; }

FeatureSpace::FeatureSpace(const PoolState& pool) {
    std::map<int, std::size_t> scene_index;
    for (const auto& [id, seq] : pool.sequences()) scene_index.emplace(seq.meta.scene_id, 0);
    std::size_t k = 0;
    for (auto& [scene, idx] : scene_index) idx = k++;

    std::map<std::string, std::array<double, kNumeric>> raw;
    for (const auto& [id, seq] : pool.sequences()) {
        double area = 0.0;
        const std::size_t boxes = seq.total_boxes();
        for (const auto& f : seq.frames)
            for (const auto& b : f.boxes) area += b.w * b.h;
        const double n = static_cast<double>(std::max<std::size_t>(seq.length(), 1));
        raw[id] = {double(boxes) / n, boxes ? area / double(boxes) : 0.0, double(seq.length())};
    }

    std::array<double, kNumeric> mean{}, sd{};
    for (const auto& [id, r] : raw)
        for (std::size_t j = 0; j < kNumeric; ++j) mean[j] += r[j];
    const double count = static_cast<double>(std::max<std::size_t>(raw.size(), 1));
    for (auto& m : mean) m /= count;
    for (const auto& [id, r] : raw)
        for (std::size_t j = 0; j < kNumeric; ++j) sd[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    for (auto& s : sd) {
        s = std::sqrt(s / count);
        if (s <= 0.0) s = 1.0;
    }

    dimension_ = kNumeric + scene_index.size() + 1;
    for (const auto& [id, seq] : pool.sequences()) {
        FeatureVector f(dimension_, 0.0);
        for (std::size_t j = 0; j < kNumeric; ++j) f[j] = (raw[id][j] - mean[j]) / sd[j];
        f[kNumeric + scene_index[seq.meta.scene_id]] = 1.0;
        f[dimension_ - 1] = static_cast<double>(static_cast<int>(seq.meta.season));
        features_.emplace(id, std::move(f));
    }

    std::vector<double> dists;
    for (auto a = features_.begin(); a != features_.end(); ++a)
        for (auto b = std::next(a); b != features_.end(); ++b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < dimension_; ++j) d2 += (a->second[j] - b->second[j]) * (a->second[j] - b->second[j]);
            dists.push_back(std::sqrt(d2));
        }
    if (!dists.empty()) {
        const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
        std::nth_element(dists.begin(), mid, dists.end());
        double median = *mid;
        if (dists.size() % 2 == 0) median = (median + *std::max_element(dists.begin(), mid)) / 2.0;
        if (median > 0.0) sigma_ = median;
    }
}

const FeatureVector& FeatureSpace::features(const std::string& id) const {
    auto it = features_.find(id);
    if (it == features_.end()) throw FeatureError("no features for sequence " + id);
    return it->second;
}

FeatureVector FeatureSpace::embedding(const std::string& id) const {
    const auto& f = features(id);
    return FeatureVector(f.begin(), f.begin() + kNumeric);
}

SurrogateState make_state(const FeatureSpace& space, std::span<const std::string> labeled, int round,
                          const SurrogateParams& params) {
    SurrogateState s;
    s.round_index = round;
    s.kappa = params.kappa;
    s.noise_seed = params.noise_seed;
    s.sigma = space.sigma();
    for (const auto& id : labeled) s.labeled_features.push_back(space.features(id));
    return s;
}

double similarity(const SurrogateState& state, std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw FeatureError("empty feature vector");
    if (a.size() != b.size()) throw FeatureError("feature dimensions differ");
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-d2 / (2.0 * state.sigma * state.sigma));
}

double quality(const SurrogateState& state, std::span<const double> target) {
    if (target.empty()) throw FeatureError("empty feature vector");
    if (!(state.kappa > 0.0)) throw FeatureError("kappa must be positive");
    if (!state.labeled_weights.empty() && state.labeled_weights.size() != state.labeled_features.size())
        throw FeatureError("labeled weights do not match labeled features");
    double coverage = 0.0;
    for (std::size_t i = 0; i < state.labeled_features.size(); ++i) {
        const double w = state.labeled_weights.empty() ? 1.0 : state.labeled_weights[i];
        coverage += w * similarity(state, state.labeled_features[i], target);
    }
    return 1.0 - std::exp(-state.kappa * coverage);
}

std::vector<FrameScore> frame_scores(const SurrogateState& state, const Sequence& seq,
                                     std::span<const double> target_features) {
    const double q = quality(state, target_features);
    std::vector<FrameScore> out;
    out.reserve(seq.frames.size());
    for (const auto& f : seq.frames) {
        rng::SplitMix64 eng(rng::combine(state.noise_seed, static_cast<std::uint64_t>(state.round_index), "score",
                                         seq.id(), static_cast<std::uint64_t>(f.frame_id)));
        const double eps = rng::uniform(eng, -0.05, 0.05);
        const auto jitter = rng::uniform_int(eng, -1, 1);
        FrameScore s;
        s.objectness = quantize6(std::clamp(q + eps, 0.0, 1.0));
        s.pred_count = std::max(0, static_cast<int>(std::lround(double(f.boxes.size()) * q + double(jitter))));
        out.push_back(s);
    }
    return out;
}

std::vector<std::vector<ScoredBox>> predict_test(const SurrogateState& state, const Sequence& seq,
                                                 std::span<const double> target_features) {
    const double q = quality(state, target_features);
    const double miss = 1.0 - q;
    std::vector<std::vector<ScoredBox>> out(seq.frames.size());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const auto& f = seq.frames[i];
        rng::SplitMix64 eng(rng::combine(state.noise_seed, static_cast<std::uint64_t>(state.round_index), "test",
                                         seq.id(), static_cast<std::uint64_t>(f.frame_id)));
        auto& preds = out[i];
        for (const auto& truth : f.boxes) {
            if (rng::bernoulli(eng, miss * 0.5)) continue;
            const double sd = 0.08 * miss;
            const double cx = truth.cx + rng::normal(eng, 0.0, sd);
            const double cy = truth.cy + rng::normal(eng, 0.0, sd);
            const double w = std::max(truth.w + rng::normal(eng, 0.0, sd), 0.005);
            const double h = std::max(truth.h + rng::normal(eng, 0.0, sd), 0.005);
            const double conf = std::clamp(q + rng::uniform(eng, -0.05, 0.05), 0.05, 0.99);
            preds.push_back({sd > 0.0 ? clip_box(cx, cy, w, h, truth.class_id) : BoundingBox{truth.class_id, truth.cx, truth.cy, truth.w, truth.h}, conf});
        }
        if (rng::bernoulli(eng, 0.3 * miss)) {
            const double w = rng::uniform(eng, 0.05, 0.25);
            const double h = rng::uniform(eng, 0.05, 0.25);
            const double cx = rng::uniform(eng, 0.0, 1.0);
            const double cy = rng::uniform(eng, 0.0, 1.0);
            const int cls = static_cast<int>(rng::uniform_int(eng, 0, kNumClasses - 1));
            const double conf = rng::uniform(eng, 0.0, 0.4);
            preds.push_back({clip_box(cx, cy, w, h, cls), conf});
        }
    }
    return out;
}

const std::map<std::string, std::vector<FrameScore>>& replay_scores(const ScoreTrace& trace, int round) {
    auto it = trace.rounds.find(round);
    if (it == trace.rounds.end()) throw TraceError("trace has no scores for round " + std::to_string(round));
    return it->second;
}

std::optional<TestMetrics> replay_metrics(const ScoreTrace& trace, int round) {
    auto it = trace.metrics.find(round);
    if (it == trace.metrics.end()) return std::nullopt;
    return it->second;
}

std::filesystem::path metrics_path_for(const std::filesystem::path& scores_csv) {
    auto p = scores_csv;
    p.replace_extension();
    p += ".metrics.csv";
    return p;
}

void write_trace(const ScoreTrace& trace, const std::filesystem::path& scores_csv,
                 const std::filesystem::path& metrics_csv) {
    std::ofstream out(scores_csv);
    if (!out) throw IoError("cannot write " + scores_csv.string());
    out << "round,sequence_id,frame_id,uncertainty,pred_count\n";
    for (const auto& [round, seqs] : trace.rounds)
        for (const auto& [id, frames] : seqs)
            for (std::size_t i = 0; i < frames.size(); ++i)
                out << fmt::format("{},{},{},{:.6f},{}\n", round, id, i, frames[i].objectness, frames[i].pred_count);
    if (!out) throw IoError("failed writing " + scores_csv.string());

    std::ofstream mout(metrics_csv);
    if (!mout) throw IoError("cannot write " + metrics_csv.string());
    mout << "round,map50,map5095\n";
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); };
    for (const auto& [round, m] : trace.metrics) mout << round << ',' << cell(m.map50) << ',' << cell(m.map5095) << '\n';
    if (!mout) throw IoError("failed writing " + metrics_csv.string());
}

ScoreTrace read_trace(const std::filesystem::path& scores_csv, const std::filesystem::path& metrics_csv) {
    ScoreTrace trace;
    std::ifstream in(scores_csv);
    if (!in) throw TraceError("cannot open " + scores_csv.string());
    std::string line;
    std::getline(in, line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c = split_csv(line);
        int round = 0, pred = 0;
        std::size_t frame = 0;
        FrameScore s;
        if (c.size() != 5 || !parse_number(c[0], round) || !parse_number(c[2], frame) ||
            !parse_number(c[3], s.objectness) || !parse_number(c[4], pred))
            throw TraceError(fmt::format("{}:{}: malformed row", scores_csv.string(), line_no));
        if (s.objectness < 0.0 || s.objectness > 1.0 || pred < 0)
            throw TraceError(fmt::format("{}:{}: value out of range", scores_csv.string(), line_no));
        s.pred_count = pred;
        auto& frames = trace.rounds[round][c[1]];
        if (frame != frames.size())
            throw TraceError(fmt::format("{}:{}: frames of {} are not consecutive", scores_csv.string(), line_no, c[1]));
        frames.push_back(s);
    }

    if (!metrics_csv.empty() && std::filesystem::exists(metrics_csv)) {
        std::ifstream min(metrics_csv);
        std::getline(min, line);
        line_no = 1;
        while (std::getline(min, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto c = split_csv(line);
            int round = 0;
            if (c.size() != 3 || !parse_number(c[0], round))
                throw TraceError(fmt::format("{}:{}: malformed row", metrics_csv.string(), line_no));
            TestMetrics m;
            double v = 0.0;
            if (!c[1].empty()) {
                if (!parse_number(c[1], v)) throw TraceError(fmt::format("{}:{}: bad map50", metrics_csv.string(), line_no));
                m.map50 = v;
            }
            if (!c[2].empty()) {
                if (!parse_number(c[2], v)) throw TraceError(fmt::format("{}:{}: bad map5095", metrics_csv.string(), line_no));
                m.map5095 = v;
            }
            trace.metrics[round] = m;
        }
    }
    return trace;
}

}  // namespace seqal::surrogate
