#include "seqal/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "seqal/config.hpp"
#include "seqal/error.hpp"
#include "seqal/flowproxy.hpp"
#include "seqal/focal_io.hpp"
#include "seqal/metrics.hpp"
#include "seqal/parallel.hpp"
#include "seqal/runner.hpp"
#include "seqal/synth.hpp"

namespace seqal::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string opt6(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::vector<double> parse_budgets(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : config::split_list(s)) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) throw ConfigError("bad budget '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void emit(std::ostream& out, const std::string& text, const std::string& out_path) {
    if (out_path.empty()) out << text;
    else write_text(out_path, text);
}

int cmd_gen(const std::string& config_path, const fs::path& out_dir, bool rasters, unsigned threads, std::ostream& out) {
    const auto gen = config::load_gen_config(config_path);
    synth::GenOptions opts;
    opts.keep_rasters = rasters;
    opts.stream_flow = flow::FlowParams{};
    opts.threads = threads;
    const auto pool = synth::generate_pool(gen, opts);
    io::write_pool(pool, out_dir);
    out << fmt::format("wrote {} sequences to {}\n", pool.sequences().size(), out_dir.string());
    return 0;
}

int cmd_run(const std::string& config_path, const fs::path& out_dir, const std::vector<std::uint64_t>& seeds,
            const std::string& strategies, int threads, std::ostream& out) {
    auto ex = config::load_experiment(config_path);
    if (!seeds.empty()) ex.run.seeds = seeds;
    if (!strategies.empty()) {
        ex.strategies.clear();
        for (const auto& k : config::split_list(strategies)) ex.strategies.push_back(acq::parse_strategy(k));
    }
    if (threads > 0) ex.run.threads = static_cast<unsigned>(threads);

    auto prep = ex.run;
    prep.strategy.kind = ex.strategies.front();
    for (auto k : ex.strategies)
        if (acq::uses_flow_stats(k)) prep.strategy.kind = k;
    prep.validate();
    const auto pool = run::prepare_pool(prep);

    std::vector<run::RunResult> results;
    try {
        for (auto k : ex.strategies) {
            auto cfg = ex.run;
            cfg.strategy.kind = k;
            results.push_back(run::run_experiment(cfg, pool));
            for (const auto& r : results.back().runs) {
                const auto& last = r.records.back();
                out << fmt::format("{} seed {}: {} rounds, {:.6f} h, {:.6f} GFLOPS, map50 {}\n", acq::to_string(k),
                                   r.seed, last.round, last.cum_cost_hours, last.cum_overhead_gflops,
                                   last.map50 ? fmt::format("{:.6f}", *last.map50) : std::string("n/a"));
            }
        }
    } catch (...) {
        // Keep whatever finished.
        if (!results.empty()) run::write_outputs(out_dir, results, ex.write_trace);
        throw;
    }
    run::write_outputs(out_dir, results, ex.write_trace);
    out << "outputs in " << out_dir.string() << "\n";
    return 0;
}

int cmd_metrics(const fs::path& run_dir, const std::string& car_budgets, const std::string& par_budgets,
                const std::string& out_dir_arg, std::ostream& out) {
    const auto rows = run::parse_aggregate_csv(read_text(run_dir / "aggregate.csv"));
    std::map<acq::StrategyKind, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& r : rows) {
        if (!r.mean_map50) throw RunFileError(fmt::format("{} round {} has no mAP", acq::to_string(r.strategy), r.round));
        series[r.strategy].first.push_back(r.mean_cum_cost);
        series[r.strategy].second.push_back(*r.mean_map50);
    }
    std::map<acq::StrategyKind, metrics::PerfCostCurve> curves;
    for (const auto& [k, s] : series) curves.emplace(k, metrics::PerfCostCurve::from_rounds(s.first, s.second));

    const fs::path out_dir = out_dir_arg.empty() ? run_dir : fs::path(out_dir_arg);
    if (!car_budgets.empty()) {
        std::string csv = "strategy,budget_h,car\n";
        for (double b : parse_budgets(car_budgets))
            for (const auto& [k, c] : curves)
                csv += fmt::format("{},{:.6f},{:.6f}\n", acq::to_string(k), b, metrics::car(c, b));
        write_text(out_dir / "car.csv", csv);
        out << "wrote " << (out_dir / "car.csv").string() << "\n";
    }
    if (!par_budgets.empty()) {
        std::string csv = "strategy,budget_map,par,truncated\n";
        for (double b : parse_budgets(par_budgets))
            for (const auto& [k, c] : curves) {
                const auto p = metrics::par(c, b);
                csv += fmt::format("{},{:.6f},{:.6f},{}\n", acq::to_string(k), b, p.value, p.truncated ? 1 : 0);
            }
        write_text(out_dir / "par.csv", csv);
        out << "wrote " << (out_dir / "par.csv").string() << "\n";
    }
    return 0;
}

void attach_flow(PoolState& pool, const std::string& flow_dir) {
    if (flow_dir.empty()) return;
    for (auto& [id, seq] : pool.mutable_sequences()) io::read_flow_cache(seq, fs::path(flow_dir) / (id + ".flow.csv"));
}

int cmd_stats(const fs::path& pool_dir, const fs::path& out_dir, int threshold, int min_area, unsigned threads,
              std::ostream& out) {
    io::LoadOptions lo;
    lo.load_rasters = true;
    lo.load_flow_cache = false;
    auto pool = io::load_pool(pool_dir, lo);
    std::vector<Sequence*> seqs;
    for (auto& [id, seq] : pool.mutable_sequences()) seqs.push_back(&seq);
    const flow::FlowParams params{threshold, min_area};
    parallel_for(seqs.size(), threads, [&](std::size_t i) { flow::compute_flow_stats(*seqs[i], params); });
    fs::create_directories(out_dir);
    for (const auto* s : seqs) io::write_flow_cache(*s, out_dir / (s->id() + ".flow.csv"));
    out << fmt::format("wrote flow statistics for {} sequences to {}\n", seqs.size(), out_dir.string());
    return 0;
}

int exit_code(const Error& e) {
    switch (e.category()) {
        case Error::Category::config: return 2;
        case Error::Category::data: return 3;
        default: return 1;
    }
}

}  // namespace

std::string bounds_csv(const PoolState& pool, std::size_t rounds, const cost::OverheadModel& model) {
    std::vector<double> costs;
    std::vector<std::size_t> lengths;
    for (const auto& id : pool.ids_in(Split::train)) {
        costs.push_back(pool.at(id).meta.cost_hours);
        lengths.push_back(pool.at(id).length());
    }
    const auto c = cost::theoretical_cost_bounds(costs, rounds);
    const auto o = cost::overhead_bounds(model, lengths, rounds);
    std::string csv = "round,cost_lower_h,cost_upper_h,overhead_lower_gflops,overhead_upper_gflops\n";
    for (std::size_t i = 0; i < rounds; ++i)
        csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", i + 1, c.lower[i], c.upper[i], o.lower[i], o.upper[i]);
    return csv;
}

std::string analyze_csv(const PoolState& pool) {
    std::vector<double> cost, length, boxes, occluded, season, tod;
    std::vector<double> motion, box_est;
    bool flow = true;
    for (const auto& [id, s] : pool.sequences()) {
        cost.push_back(s.meta.cost_hours);
        length.push_back(double(s.length()));
        boxes.push_back(double(s.total_boxes()));
        occluded.push_back(double(s.occluded_boxes()));
        season.push_back(double(static_cast<int>(s.meta.season)));
        tod.push_back(double(static_cast<int>(s.meta.time_of_day)));
        if (s.has_flow_stats()) {
            motion.push_back(double(s.total_motion()) / double(s.length()));
            box_est.push_back(double(s.total_box_estimate()) / double(s.length()));
        } else {
            flow = false;
        }
    }
    std::string csv = "variable,n,pearson,spearman,kendall_tau_b\n";
    auto row = [&](const char* name, const std::vector<double>* x) {
        if (!x) {
            csv += fmt::format("{},{},,,\n", name, cost.size());
            return;
        }
        const auto c = metrics::correlations(*x, cost);
        csv += fmt::format("{},{},{},{},{}\n", name, cost.size(), opt6(c.pearson), opt6(c.spearman),
                           opt6(c.kendall_tau_b));
    };
    row("length", &length);
    row("total_boxes", &boxes);
    row("occluded_boxes", &occluded);
    row("mean_motion", flow ? &motion : nullptr);
    row("mean_box_estimate", flow ? &box_est : nullptr);
    row("season", &season);
    row("time_of_day", &tod);
    return csv;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cost-aware sequential active learning simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, pool_path, run_path, flow_path, strategies, car_b, par_b;
    std::vector<std::uint64_t> seeds;
    bool rasters = false;
    int threads = 0, threshold = 10, min_area = 25;
    std::size_t rounds = 0;

    auto* gen = app.add_subcommand("gen", "generate a synthetic pool in FOCAL layout");
    gen->add_option("--config", config_path, "experiment file with a [pool] section")->required();
    gen->add_option("--out", out_path, "output pool directory")->required();
    gen->add_flag("--rasters", rasters, "also write frame rasters");
    gen->add_option("--threads", threads, "worker threads");

    auto* runc = app.add_subcommand("run", "run an acquisition experiment");
    runc->add_option("--config", config_path, "experiment file")->required();
    runc->add_option("--out", out_path, "run output directory")->required();
    runc->add_option("--seed", seeds, "seed override (repeatable)");
    runc->add_option("--strategy", strategies, "strategy override, comma separated");
    runc->add_option("--threads", threads, "worker threads");

    auto* met = app.add_subcommand("metrics", "CAR/PAR sweeps over a finished run");
    met->add_option("--run", run_path, "run output directory")->required();
    met->add_option("--car-budgets", car_b, "cost budgets in hours, comma separated");
    met->add_option("--par-budgets", par_b, "mAP budgets, comma separated");
    met->add_option("--out", out_path, "directory for car.csv/par.csv (default: the run directory)");

    auto* bnd = app.add_subcommand("bounds", "theoretical cost and overhead bounds");
    bnd->add_option("--pool", pool_path, "pool directory")->required();
    bnd->add_option("--rounds", rounds, "number of acquisitions")->required();
    bnd->add_option("--out", out_path, "output CSV (default: stdout)");

    auto* ana = app.add_subcommand("analyze", "correlate cost with sequence statistics");
    ana->add_option("--pool", pool_path, "pool directory")->required();
    ana->add_option("--flow", flow_path, "flow cache directory");
    ana->add_option("--out", out_path, "output CSV (default: stdout)");

    auto* sta = app.add_subcommand("stats", "compute flow statistics from frame rasters");
    sta->add_option("--pool", pool_path, "pool directory")->required();
    sta->add_option("--out", out_path, "flow cache directory")->required();
    sta->add_option("--threshold", threshold, "difference threshold");
    sta->add_option("--min-area", min_area, "minimum component area");
    sta->add_option("--threads", threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    const unsigned nthreads = threads > 0 ? static_cast<unsigned>(threads) : 1u;
    try {
        if (*gen) return cmd_gen(config_path, out_path, rasters, nthreads, out);
        if (*runc) return cmd_run(config_path, out_path, seeds, strategies, threads, out);
        if (*met) return cmd_metrics(run_path, car_b, par_b, out_path, out);
        if (*bnd) {
            io::LoadOptions lo;
            lo.load_rasters = false;
            lo.load_flow_cache = false;
            emit(out, bounds_csv(io::load_pool(pool_path, lo), rounds), out_path);
            return 0;
        }
        if (*ana) {
            io::LoadOptions lo;
            lo.load_rasters = false;
            auto pool = io::load_pool(pool_path, lo);
            attach_flow(pool, flow_path);
            emit(out, analyze_csv(pool), out_path);
            return 0;
        }
        if (*sta) return cmd_stats(pool_path, out_path, threshold, min_area, nthreads, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace seqal::cli
