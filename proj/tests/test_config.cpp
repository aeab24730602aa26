#include "doctest.h"

#include "seqal/config.hpp"
#include "seqal/error.hpp"

using namespace seqal;

TEST_CASE("full experiment file") {
    const auto ex = config::parse_experiment(R"([pool]
source = synthetic
rng_seed = 5
n_sequences = 40
frame_len_min = 20
frame_len_max = 30
alpha_boxes = 0.02
[strategy]
kind = entropy, min_motion
batch_size = 2
parity_phase = min_first
[surrogate]
kappa = 3.5
noise_seed = 9
[costing]
mode = sequential
detector_gflops = 5.0
[eval]
enabled = false
iou_thresholds = 0.5,0.75
[run]
name = trial
seeds = 4,5,6
rounds = 3
threads = 2
write_trace = false
)");
    CHECK(ex.name == "trial");
    CHECK(ex.strategies == std::vector<acq::StrategyKind>{acq::StrategyKind::entropy, acq::StrategyKind::min_motion});
    CHECK_FALSE(ex.write_trace);
    const auto& rc = ex.run;
    const auto& g = std::get<synth::GenConfig>(rc.pool_source);
    CHECK(g.rng_seed == 5);
    CHECK(g.n_sequences == 40);
    CHECK(g.frame_len_range.min == 20);
    CHECK(g.cost_coeffs.alpha_boxes == 0.02);
    CHECK(rc.strategy.batch_size == 2);
    CHECK(rc.strategy.parity_phase == acq::ParityPhase::min_first);
    CHECK(rc.surrogate.kappa == 3.5);
    CHECK(rc.overhead.detector_gflops_per_frame == 5.0);
    CHECK_FALSE(rc.evaluate);
    CHECK(rc.iou_thresholds == std::vector<double>{0.5, 0.75});
    CHECK(rc.seeds == std::vector<std::uint64_t>{4, 5, 6});
    CHECK(rc.rounds == 3);
    CHECK(rc.threads == 2);
}

TEST_CASE("defaults and relative paths") {
    const auto ex = config::parse_experiment("[pool]\nsource = focal\npath = data/pool\n[strategy]\nkind = random\n"
                                             "[surrogate]\ntrace_dir = logs\n",
                                             "/base/dir");
    CHECK(std::get<std::filesystem::path>(ex.run.pool_source) == std::filesystem::path("/base/dir/data/pool"));
    CHECK(*ex.run.trace_dir == std::filesystem::path("/base/dir/logs"));
    CHECK(ex.run.rounds == 11);
    CHECK(ex.run.seed_sequences == 2);
    CHECK(ex.write_trace);

    const auto abs = config::parse_experiment("[pool]\nsource = focal\npath = /x/y\n[strategy]\nkind = random\n", "/b");
    CHECK(std::get<std::filesystem::path>(abs.run.pool_source) == std::filesystem::path("/x/y"));
}

TEST_CASE("rejected files") {
    const std::string ok_strategy = "[strategy]\nkind = random\n";
    auto rejects = [](const std::string& text, const std::string& fragment) {
        try {
            config::parse_experiment(text);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
            return true;
        } catch (const Error&) {
            return true;
        }
        return false;
    };
    CHECK(rejects(ok_strategy, "[pool]"));
    CHECK(rejects("[pool]\n", "[strategy]"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[colours]\nred = 1\n", "colours"));
    CHECK(rejects("[pool]\nn_sequence = 3\n" + ok_strategy, "n_sequence"));
    CHECK(rejects("[pool]\nn_sequences = many\n" + ok_strategy, "n_sequences"));
    CHECK(rejects("[pool]\nsource = focal\n" + ok_strategy, "path"));
    CHECK(rejects("[pool]\nsource = ftp\n" + ok_strategy, "source"));
    CHECK(rejects("[pool]\nwidth = 5\n" + ok_strategy, "[pool]"));
    CHECK(rejects("[pool]\n[strategy]\nkind = random,,entropy\n", "empty item"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[eval]\niou_thresholds = 0.5,1.5\n", "iou_thresholds"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[run]\nseeds = one\n", "seeds"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[run]\nwrite_trace = maybe\n", "write_trace"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[run]\nthreads = 0\n", "threads"));
    CHECK(rejects("[pool]\n" + ok_strategy + "[run]\nrounds = -1\n", "rounds"));

    // Singular mode refuses strategies that cannot choose frames.
    CHECK_THROWS_AS(config::parse_experiment("[pool]\n[strategy]\nkind = entropy,min_boxes\n[costing]\nmode = singular\n"),
                    ModeError);
    CHECK_THROWS(config::parse_experiment("[pool]\n[strategy]\nkind = best\n"));
}

TEST_CASE("generator section on its own") {
    const auto g = config::parse_gen_config("[pool]\nn_sequences = 7\nnoise_sd = 0\n[strategy]\nkind = random\n");
    CHECK(g.n_sequences == 7);
    CHECK(g.cost_coeffs.noise_sd == 0.0);
    CHECK_THROWS_AS(config::parse_gen_config("[pool]\nsource = focal\npath = x\n"), ConfigError);
    CHECK_THROWS_AS(config::parse_gen_config("[strategy]\nkind = random\n"), ConfigError);
    CHECK_THROWS_AS(config::load_gen_config("/nonexistent/seqal.cfg"), ConfigError);
}

TEST_CASE("list splitting") {
    CHECK(config::split_list(" a , b,c ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(config::split_list("x") == std::vector<std::string>{"x"});
    CHECK_THROWS_AS(config::split_list(""), ConfigError);
    CHECK_THROWS_AS(config::split_list("a,,b"), ConfigError);
}
