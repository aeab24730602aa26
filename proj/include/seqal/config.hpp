#pragma once

// INI experiment files with sections [pool], [strategy], [surrogate],
// [costing], [eval] and [run]. Unknown sections or keys are rejected so that
// typos do not silently fall back to defaults. Relative paths resolve against
// the directory of the file.

#include <filesystem>
#include <string>
#include <vector>

#include "seqal/acquisition.hpp"
#include "seqal/runner.hpp"
#include "seqal/synth.hpp"

namespace seqal::config {

struct Experiment {
    std::string name = "run";
    run::RunConfig run;  // run.strategy.kind is set per entry of `strategies`
    std::vector<acq::StrategyKind> strategies;
    bool write_trace = true;
};

Experiment parse_experiment(const std::string& text, const std::filesystem::path& base_dir = ".");
Experiment load_experiment(const std::filesystem::path& file);

// Generator settings from the [pool] section, which must describe a synthetic source.
synth::GenConfig parse_gen_config(const std::string& text);
synth::GenConfig load_gen_config(const std::filesystem::path& file);

// "a,b,c" -> {"a","b","c"} with surrounding blanks trimmed; empty items rejected.
std::vector<std::string> split_list(const std::string& s);

}  // namespace seqal::config
