#include "seqal/runner.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "seqal/error.hpp"
#include "seqal/focal_io.hpp"
#include "seqal/metrics.hpp"
#include "seqal/parallel.hpp"
#include "seqal/rng.hpp"

namespace seqal::run {

namespace {

using ScoreMap = std::map<std::string, std::vector<surrogate::FrameScore>>;

std::size_t unlabeled_frames(const PoolState& pool) {
    std::size_t n = 0;
    for (const auto& id : pool.unlabeled()) n += pool.at(id).length();
    return n;
}

std::size_t train_frames(const PoolState& pool) {
    std::size_t n = 0;
    for (const auto& id : pool.ids_in(Split::train)) n += pool.at(id).length();
    return n;
}

metrics::MapResult evaluate_test(const surrogate::SurrogateState& st, const surrogate::FeatureSpace& space,
                                 const PoolState& pool, const RunConfig& cfg) {
    std::vector<metrics::FrameEval> frames;
    for (const auto& id : pool.ids_in(Split::test)) {
        const Sequence& seq = pool.at(id);
        auto preds = surrogate::predict_test(st, seq, space.features(id));
        for (std::size_t f = 0; f < seq.frames.size(); ++f) {
            metrics::FrameEval e;
            for (const auto& b : seq.frames[f].boxes)
                if (!is_small_box(b, cfg.min_box_pixels, cfg.reference_resolution)) e.truths.push_back(b);
            for (auto& p : preds[f])
                if (!is_small_box(p.box, cfg.min_box_pixels, cfg.reference_resolution)) e.predictions.push_back(p);
            frames.push_back(std::move(e));
        }
    }
    return metrics::mean_ap(frames, cfg.iou_thresholds);
}

std::optional<surrogate::ScoreTrace> load_replay(const RunConfig& cfg, std::uint64_t seed) {
    if (!cfg.trace_dir) return std::nullopt;
    const auto path = *cfg.trace_dir / trace_file_name(cfg.strategy.kind, seed);
    return surrogate::read_trace(path, surrogate::metrics_path_for(path));
}

// Shared per-round bookkeeping of both acquisition units.
struct RoundContext {
    const RunConfig& cfg;
    const surrogate::FeatureSpace& space;
    const PoolState& pool;
    std::optional<surrogate::ScoreTrace> replay;
    SeedRun& out;

    std::pair<std::optional<double>, std::optional<double>> evaluate(const surrogate::SurrogateState& st, int r) {
        std::pair<std::optional<double>, std::optional<double>> m;
        if (replay) {
            if (auto logged = surrogate::replay_metrics(*replay, r); logged && (logged->map50 || logged->map5095))
                m = {logged->map50, logged->map5095};
        }
        if (!m.first && !m.second && cfg.evaluate) {
            const auto res = evaluate_test(st, space, pool, cfg);
            m = {surrogate::quantize6(res.map50), surrogate::quantize6(res.map5095)};
        }
        out.trace.metrics[r] = {m.first, m.second};
        return m;
    }

    // Model scores for `targets` at the end of round r; test sequences are
    // scored for the trace only.
    ScoreMap infer(const surrogate::SurrogateState& st, int r, const std::vector<std::string>& targets) {
        ScoreMap scores;
        auto& logged = out.trace.rounds[r];
        if (replay) {
            const auto& rec = surrogate::replay_scores(*replay, r);
            for (const auto& id : targets) {
                auto it = rec.find(id);
                if (it == rec.end()) throw TraceError(fmt::format("trace round {} has no scores for {}", r, id));
                scores.emplace(id, it->second);
                ++out.counters.scorer_calls;
            }
            logged = rec;
            return scores;
        }
        for (const auto& id : targets) {
            scores.emplace(id, surrogate::frame_scores(st, pool.at(id), space.features(id)));
            ++out.counters.scorer_calls;
        }
        logged = scores;
        for (const auto& id : pool.ids_in(Split::test))
            logged.emplace(id, surrogate::frame_scores(st, pool.at(id), space.features(id)));
        return scores;
    }

    void record(int r, std::vector<std::string> selected, double cost, double overhead,
                std::pair<std::optional<double>, std::optional<double>> m) {
        const auto& e = out.ledger.add_round(r, selected, cost, overhead);
        RoundRecord rec;
        rec.round = r;
        rec.seed = out.seed;
        rec.strategy = cfg.strategy.kind;
        rec.selected = std::move(selected);
        rec.round_cost_hours = cost;
        rec.cum_cost_hours = e.cumulative_cost_hours;
        rec.cum_overhead_gflops = e.cumulative_overhead_gflops;
        rec.map50 = m.first;
        rec.map5095 = m.second;
        out.records.push_back(std::move(rec));
    }
};

SeedRun run_seed_sequential(const RunConfig& cfg, const PoolState& base, const surrogate::FeatureSpace& space,
                            std::uint64_t seed) {
    SeedRun out;
    out.seed = seed;
    out.strategy = cfg.strategy.kind;
    PoolState pool = base;
    pool.reset_labels();
    RoundContext ctx{cfg, space, pool, load_replay(cfg, seed), out};

    const auto kind = cfg.strategy.kind;
    const bool inferential = acq::needs_model_scores(kind);
    const std::size_t total_train_frames = train_frames(pool);

    auto overhead_after = [&](int r) {
        if (acq::uses_flow_stats(kind)) return r == 0 ? cost::overhead_conformal(cfg.overhead, total_train_frames) : 0.0;
        if (inferential) return cfg.overhead.detector_gflops_per_frame * double(unlabeled_frames(pool));
        return 0.0;
    };
    auto charge = [&](const std::vector<std::string>& ids) {
        double c = 0.0;
        for (const auto& id : ids) {
            const Sequence& s = pool.at(id);
            c += cost::sequence_cost(s.meta, s.length(), cost::Mode::sequential, cfg.interpolation_rate, s.length());
        }
        return c;
    };
    auto unlabeled_ids = [&] { return std::vector<std::string>(pool.unlabeled().begin(), pool.unlabeled().end()); };

    std::map<std::string, std::vector<double>> embeddings;
    if (kind == acq::StrategyKind::coreset)
        for (const auto& id : pool.ids_in(Split::train)) embeddings.emplace(id, space.embedding(id));

    const auto seeds = draw_seed_sequences(pool, cfg.seed_sequences, seed);
    pool.acquire(seeds);
    pool.check_partition();
    auto state = surrogate::make_state(space, pool.labeled(), 0, cfg.surrogate);
    auto maps = ctx.evaluate(state, 0);
    std::optional<ScoreMap> current, previous;
    if (inferential) current = ctx.infer(state, 0, unlabeled_ids());
    ctx.record(0, seeds, charge(seeds), overhead_after(0), maps);

    for (int r = 1; r <= cfg.rounds; ++r) {
        acq::ModelScores ms;
        const acq::ModelScores* msp = nullptr;
        if (inferential) {
            ms.current = *current;
            ms.previous = previous;
            ms.embeddings = embeddings;
            msp = &ms;
        }
        auto selected = acq::select(cfg.strategy, pool, msp, r, seed);
        pool.acquire(selected);
        pool.check_partition();

        state = surrogate::make_state(space, pool.labeled(), r, cfg.surrogate);
        maps = ctx.evaluate(state, r);
        if (inferential) {
            previous = std::move(current);
            current = ctx.infer(state, r, unlabeled_ids());
        }
        const double cost = charge(selected);
        ctx.record(r, std::move(selected), cost, overhead_after(r), maps);
    }
    return out;
}

SeedRun run_seed_singular(const RunConfig& cfg, const PoolState& base, const surrogate::FeatureSpace& space,
                          std::uint64_t seed) {
    SeedRun out;
    out.seed = seed;
    out.strategy = cfg.strategy.kind;
    PoolState pool = base;
    pool.reset_labels();
    RoundContext ctx{cfg, space, pool, load_replay(cfg, seed), out};
    const auto kind = cfg.strategy.kind;
    const bool inferential = acq::needs_model_scores(kind);

    const auto seeds = draw_seed_sequences(pool, cfg.seed_sequences, seed);
    pool.acquire(seeds);
    std::map<std::string, std::size_t> labeled_count;
    for (const auto& id : seeds) labeled_count[id] = pool.at(id).length();
    std::set<acq::FrameKey> unlabeled;
    for (const auto& id : pool.unlabeled())
        for (const auto& f : pool.at(id).frames) unlabeled.insert({id, f.frame_id});

    auto make_state = [&](int r) {
        auto st = surrogate::make_state(space, {}, r, cfg.surrogate);
        for (const auto& [id, n] : labeled_count) {
            st.labeled_features.push_back(space.features(id));
            st.labeled_weights.push_back(double(n) / double(pool.at(id).length()));
        }
        return st;
    };
    auto partial_ids = [&] {
        std::vector<std::string> ids;
        for (const auto& k : unlabeled)
            if (ids.empty() || ids.back() != k.sequence_id) ids.push_back(k.sequence_id);
        return ids;
    };
    auto overhead_after = [&] {
        return inferential ? cfg.overhead.detector_gflops_per_frame * double(unlabeled.size()) : 0.0;
    };

    double seed_cost = 0.0;
    for (const auto& id : seeds) seed_cost += pool.at(id).meta.cost_hours;
    auto state = make_state(0);
    auto maps = ctx.evaluate(state, 0);
    std::optional<ScoreMap> current, previous;
    if (inferential) current = ctx.infer(state, 0, partial_ids());
    ctx.record(0, seeds, seed_cost, overhead_after(), maps);

    const auto b = static_cast<std::size_t>(cfg.frames_per_round);
    for (int r = 1; r <= cfg.rounds; ++r) {
        acq::ModelScores ms;
        const acq::ModelScores* msp = nullptr;
        if (inferential) {
            ms.current = *current;
            ms.previous = previous;
            msp = &ms;
        }
        const std::vector<acq::FrameKey> keys(unlabeled.begin(), unlabeled.end());
        const auto picked = acq::select_frames(cfg.strategy, keys, msp, b, r, seed);
        double cost = 0.0;
        std::vector<std::string> selected;
        for (const auto& k : picked) {
            const Sequence& s = pool.at(k.sequence_id);
            cost += cost::frame_cost(s.meta, s.length(), k.frame_id, cfg.interpolation_rate);
            unlabeled.erase(k);
            ++labeled_count[k.sequence_id];
            selected.push_back(fmt::format("{}:{}", k.sequence_id, k.frame_id));
        }
        state = make_state(r);
        maps = ctx.evaluate(state, r);
        if (inferential) {
            previous = std::move(current);
            current = ctx.infer(state, r, partial_ids());
        }
        ctx.record(r, std::move(selected), cost, overhead_after(), maps);
    }
    return out;
}

RunResult run_seeds(const RunConfig& cfg, const PoolState& pool, bool singular) {
    cfg.validate();
    const auto train = pool.ids_in(Split::train);
    const std::size_t needed = std::size_t(cfg.seed_sequences) +
                               (singular ? 0 : std::size_t(cfg.rounds) * std::size_t(cfg.strategy.batch_size));
    if (needed > train.size())
        throw ConfigError(fmt::format("{} seed sequences and {} rounds need {} train sequences, pool has {}",
                                      cfg.seed_sequences, cfg.rounds, needed, train.size()));
    if (acq::uses_flow_stats(cfg.strategy.kind))
        for (const auto& id : train)
            if (!pool.at(id).has_flow_stats())
                throw MissingRasterError("sequence " + id + " has no flow statistics");

    const surrogate::FeatureSpace space(pool);
    RunResult result;
    result.runs.resize(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
        result.runs[i] = singular ? run_seed_singular(cfg, pool, space, cfg.seeds[i])
                                  : run_seed_sequential(cfg, pool, space, cfg.seeds[i]);
    });
    return result;
}

std::string opt6(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

std::pair<double, std::optional<double>> mean_se(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / double(v.size());
    if (v.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / double(v.size() - 1)) / std::sqrt(double(v.size()))};
}

}  // namespace

void RunConfig::validate() const {
    if (seed_sequences < 0) throw ConfigError("seed_sequences must be non-negative");
    if (rounds < 0) throw ConfigError("rounds must be non-negative");
    if (strategy.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (interpolation_rate < 1) throw ConfigError("interpolation_rate must be at least 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (frames_per_round < 1) throw ConfigError("frames_per_round must be at least 1");
    if (!(surrogate.kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (min_box_pixels < 0.0 || !(reference_resolution > 0.0)) throw ConfigError("invalid box filter");
    if (iou_thresholds.empty()) throw ConfigError("no IoU thresholds");
    overhead.validate();
    if (mode == cost::Mode::singular &&
        (acq::is_conformal(strategy.kind) || strategy.kind == acq::StrategyKind::coreset))
        throw ModeError(std::string(acq::to_string(strategy.kind)) + " cannot run in singular mode");
}

std::vector<RoundRecord> RunResult::records() const {
    std::vector<RoundRecord> out;
    for (const auto& r : runs) out.insert(out.end(), r.records.begin(), r.records.end());
    return out;
}

Counters RunResult::totals() const {
    Counters c;
    c.flow_computations = flow_computations;
    for (const auto& r : runs) {
        c.scorer_calls += r.counters.scorer_calls;
        c.flow_computations += r.counters.flow_computations;
    }
    return c;
}

PoolState prepare_pool(const RunConfig& cfg, std::size_t* flow_computations) {
    const bool needs_flow = acq::uses_flow_stats(cfg.strategy.kind);
    std::size_t computed = 0;
    PoolState pool;
    if (const auto* gen = std::get_if<synth::GenConfig>(&cfg.pool_source)) {
        synth::GenOptions opts;
        opts.keep_rasters = false;
        opts.threads = cfg.threads;
        if (needs_flow) opts.stream_flow = cfg.flow;
        pool = synth::generate_pool(*gen, opts);
        if (needs_flow) computed = pool.sequences().size();
    } else {
        io::LoadOptions lo;
        lo.load_rasters = needs_flow;
        pool = io::load_pool(std::get<std::filesystem::path>(cfg.pool_source), lo);
        if (needs_flow) {
            std::vector<Sequence*> todo;
            for (const auto& id : pool.ids_in(Split::train))
                if (!pool.at(id).has_flow_stats()) todo.push_back(&pool.at(id));
            parallel_for(todo.size(), cfg.threads, [&](std::size_t i) { flow::compute_flow_stats(*todo[i], cfg.flow); });
            computed = todo.size();
        }
    }
    if (flow_computations) *flow_computations = computed;
    return pool;
}

RunResult run_experiment(const RunConfig& cfg) {
    cfg.validate();
    std::size_t computed = 0;
    const PoolState pool = prepare_pool(cfg, &computed);
    auto result = run_experiment(cfg, pool);
    result.flow_computations = computed;
    return result;
}

RunResult run_experiment(const RunConfig& cfg, const PoolState& pool) {
    if (cfg.mode == cost::Mode::singular) return run_singular(cfg, pool);
    return run_seeds(cfg, pool, false);
}

RunResult run_singular(const RunConfig& cfg, const PoolState& pool) {
    if (cfg.mode != cost::Mode::singular) throw ModeError("run_singular needs mode = singular");
    return run_seeds(cfg, pool, true);
}

std::vector<std::string> draw_seed_sequences(const PoolState& pool, int k, std::uint64_t seed) {
    auto ids = pool.ids_in(Split::train);
    if (k < 0 || std::size_t(k) > ids.size())
        throw PoolExhaustedError(fmt::format("cannot draw {} seed sequences from {}", k, ids.size()));
    rng::SplitMix64 eng(rng::combine(seed, "seed-draw"));
    for (std::size_t i = 0; i < std::size_t(k); ++i) {
        const auto j = static_cast<std::size_t>(
            rng::uniform_int(eng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(ids.size() - 1)));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(std::size_t(k));
    return ids;
}

bool is_small_box(const BoundingBox& b, double min_pixels, double reference_resolution) {
    return std::min(b.w, b.h) * reference_resolution < min_pixels;
}

std::vector<AggregateRow> aggregate(std::span<const RoundRecord> records) {
    std::map<std::pair<acq::StrategyKind, int>, std::vector<const RoundRecord*>> groups;
    for (const auto& r : records) groups[{r.strategy, r.round}].push_back(&r);
    std::vector<AggregateRow> rows;
    for (const auto& [key, recs] : groups) {
        AggregateRow row;
        row.strategy = key.first;
        row.round = key.second;
        row.n = recs.size();
        std::vector<double> cost, overhead, m50, m5095;
        for (const auto* r : recs) {
            cost.push_back(r->cum_cost_hours);
            overhead.push_back(r->cum_overhead_gflops);
            if (r->map50) m50.push_back(*r->map50);
            if (r->map5095) m5095.push_back(*r->map5095);
        }
        std::tie(row.mean_cum_cost, row.se_cum_cost) = mean_se(cost);
        row.mean_cum_overhead = mean_se(overhead).first;
        if (m50.size() == recs.size()) std::tie(row.mean_map50, row.se_map50) = mean_se(m50);
        if (m5095.size() == recs.size()) std::tie(row.mean_map5095, row.se_map5095) = mean_se(m5095);
        rows.push_back(row);
    }
    return rows;
}

std::string records_csv(std::span<const RoundRecord> records) {
    std::string out = "strategy,seed,round,selected_ids,round_cost_h,cum_cost_h,cum_overhead_gflops,map50,map5095\n";
    for (const auto& r : records)
        out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{},{}\n", acq::to_string(r.strategy), r.seed, r.round,
                           fmt::join(r.selected, ";"), r.round_cost_hours, r.cum_cost_hours, r.cum_overhead_gflops,
                           opt6(r.map50), opt6(r.map5095));
    return out;
}

std::string ledger_csv(std::span<const SeedRun> runs) {
    std::string out = "strategy,seed,round,selected_ids,round_cost_h,cum_cost_h,round_gflops,cum_gflops\n";
    for (const auto& run : runs) {
        std::istringstream body(run.ledger.to_csv(false));
        std::string line;
        while (std::getline(body, line))
            out += fmt::format("{},{},{}\n", acq::to_string(run.strategy), run.seed, line);
    }
    return out;
}

std::string curves_csv(std::span<const RoundRecord> records) {
    std::string out = "strategy,seed,round,cum_cost_h,cum_overhead_gflops,map50,map5095\n";
    for (const auto& r : records)
        out += fmt::format("{},{},{},{:.6f},{:.6f},{},{}\n", acq::to_string(r.strategy), r.seed, r.round,
                           r.cum_cost_hours, r.cum_overhead_gflops, opt6(r.map50), opt6(r.map5095));
    return out;
}

std::string aggregate_csv(std::span<const AggregateRow> rows) {
    std::string out =
        "strategy,round,n_seeds,mean_cum_cost_h,se_cum_cost_h,mean_cum_gflops,mean_map50,se_map50,mean_map5095,"
        "se_map5095\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{:.6f},{},{:.6f},{},{},{},{}\n", acq::to_string(r.strategy), r.round, r.n,
                           r.mean_cum_cost, opt6(r.se_cum_cost), r.mean_cum_overhead, opt6(r.mean_map50),
                           opt6(r.se_map50), opt6(r.mean_map5095), opt6(r.se_map5095));
    return out;
}

std::vector<AggregateRow> parse_aggregate_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (split_csv(line).size() != 10) throw RunFileError("aggregate file has an unexpected header");
    auto num = [](const std::string& s, std::size_t line_no) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw RunFileError(fmt::format("aggregate line {}: bad number '{}'", line_no, s));
        }
    };
    auto opt = [&](const std::string& s, std::size_t line_no) {
        return s.empty() ? std::nullopt : std::optional<double>(num(s, line_no));
    };
    std::vector<AggregateRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 10) throw RunFileError(fmt::format("aggregate line {}: expected 10 fields", line_no));
        AggregateRow r;
        r.strategy = acq::parse_strategy(f[0]);
        r.round = static_cast<int>(num(f[1], line_no));
        r.n = static_cast<std::size_t>(num(f[2], line_no));
        r.mean_cum_cost = num(f[3], line_no);
        r.se_cum_cost = opt(f[4], line_no);
        r.mean_cum_overhead = num(f[5], line_no);
        r.mean_map50 = opt(f[6], line_no);
        r.se_map50 = opt(f[7], line_no);
        r.mean_map5095 = opt(f[8], line_no);
        r.se_map5095 = opt(f[9], line_no);
        rows.push_back(r);
    }
    return rows;
}

std::string trace_file_name(acq::StrategyKind kind, std::uint64_t seed) {
    return fmt::format("{}_seed{}.csv", acq::to_string(kind), seed);
}

void write_outputs(const std::filesystem::path& dir, std::span<const RunResult> results, bool write_traces) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<RoundRecord> records;
    std::vector<SeedRun> runs;
    for (const auto& res : results) {
        for (const auto& r : res.runs) {
            records.insert(records.end(), r.records.begin(), r.records.end());
            runs.push_back(r);
        }
    }
    write_text(dir / "records.csv", records_csv(records));
    write_text(dir / "ledger.csv", ledger_csv(runs));
    write_text(dir / "curves.csv", curves_csv(records));
    const auto agg = aggregate(records);
    write_text(dir / "aggregate.csv", aggregate_csv(agg));
    if (write_traces) {
        const auto tdir = dir / "traces";
        std::filesystem::create_directories(tdir, ec);
        if (ec) throw IoError("cannot create " + tdir.string() + ": " + ec.message());
        for (const auto& r : runs) {
            const auto p = tdir / trace_file_name(r.strategy, r.seed);
            surrogate::write_trace(r.trace, p, surrogate::metrics_path_for(p));
        }
    }
}

}  // namespace seqal::run
