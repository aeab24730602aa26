#include "seqal/config.hpp"

#include <fmt/format.h>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "seqal/error.hpp"

namespace seqal::config {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"pool",
         {"source", "path", "rng_seed", "n_sequences", "frame_len_min", "frame_len_max", "width", "height",
          "objects_min", "objects_max", "speed_min", "speed_max", "size_min", "size_max", "occlusion_rate",
          "alpha_boxes", "beta_motion", "gamma_occlusion", "delta_length", "noise_sd"}},
        {"strategy", {"kind", "batch_size", "parity_phase"}},
        {"surrogate", {"kappa", "noise_seed", "trace_dir"}},
        {"costing", {"mode", "interpolation_rate", "detector_gflops", "flow_gflops", "frames_per_round"}},
        {"eval", {"enabled", "min_box_pixels", "reference_resolution", "iou_thresholds"}},
        {"run", {"name", "seeds", "seed_sequences", "rounds", "threads", "write_trace", "flow_threshold",
                 "flow_min_area"}},
    };
    return keys;
}

pt::ptree parse_ini(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
    }
    // read_ini drops sections without keys; an empty [pool] still means "all defaults".
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto b = line.find_first_not_of(" \t");
        const auto e = line.find_last_not_of(" \t\r");
        if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
        const auto name = line.substr(b + 1, e - b - 1);
        if (tree.find(name) == tree.not_found()) tree.push_back({name, pt::ptree()});
    }
    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
    return tree;
}

const pt::ptree& require(const pt::ptree& tree, const std::string& section) {
    auto it = tree.find(section);
    if (it == tree.not_found()) throw ConfigError("missing section [" + section + "]");
    return it->second;
}

const pt::ptree* optional_section(const pt::ptree& tree, const std::string& section) {
    auto it = tree.find(section);
    return it == tree.not_found() ? nullptr : &it->second;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Reads sec.key as T, leaving `value` untouched when the key is absent.
template <typename T>
void read(const pt::ptree* sec, const char* section, const char* key, T& value) {
    if (!sec) return;
    auto raw = sec->get_optional<std::string>(key);
    if (!raw) return;
    const std::string s = trim(*raw);
    if constexpr (std::is_same_v<T, bool>) {
        if (s == "true" || s == "1" || s == "yes" || s == "on") value = true;
        else if (s == "false" || s == "0" || s == "no" || s == "off") value = false;
        else throw ConfigError(fmt::format("[{}] {}: expected a boolean, got '{}'", section, key, s));
    } else if constexpr (std::is_same_v<T, std::string>) {
        value = s;
    } else {
        try {
            value = boost::lexical_cast<T>(s);
        } catch (const boost::bad_lexical_cast&) {
            throw ConfigError(fmt::format("[{}] {}: cannot parse '{}'", section, key, s));
        }
    }
}

synth::GenConfig gen_from(const pt::ptree& pool) {
    synth::GenConfig g;
    const auto* p = &pool;
    read(p, "pool", "rng_seed", g.rng_seed);
    read(p, "pool", "n_sequences", g.n_sequences);
    read(p, "pool", "frame_len_min", g.frame_len_range.min);
    read(p, "pool", "frame_len_max", g.frame_len_range.max);
    read(p, "pool", "width", g.width);
    read(p, "pool", "height", g.height);
    read(p, "pool", "objects_min", g.objects_per_seq_range.min);
    read(p, "pool", "objects_max", g.objects_per_seq_range.max);
    read(p, "pool", "speed_min", g.speed_range.min);
    read(p, "pool", "speed_max", g.speed_range.max);
    read(p, "pool", "size_min", g.object_size_range.min);
    read(p, "pool", "size_max", g.object_size_range.max);
    read(p, "pool", "occlusion_rate", g.occlusion_rate);
    read(p, "pool", "alpha_boxes", g.cost_coeffs.alpha_boxes);
    read(p, "pool", "beta_motion", g.cost_coeffs.beta_motion);
    read(p, "pool", "gamma_occlusion", g.cost_coeffs.gamma_occlusion);
    read(p, "pool", "delta_length", g.cost_coeffs.delta_length);
    read(p, "pool", "noise_sd", g.cost_coeffs.noise_sd);
    try {
        g.validate();
    } catch (const GenError& e) {
        throw ConfigError(std::string("[pool] ") + e.what());
    }
    return g;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty item in list '" + s + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

synth::GenConfig parse_gen_config(const std::string& text) {
    const auto tree = parse_ini(text);
    const auto& pool = require(tree, "pool");
    std::string source = "synthetic";
    read(&pool, "pool", "source", source);
    if (source != "synthetic") throw ConfigError("[pool] source must be 'synthetic' to generate a pool");
    return gen_from(pool);
}

synth::GenConfig load_gen_config(const std::filesystem::path& file) { return parse_gen_config(read_file(file)); }

Experiment parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
    const auto tree = parse_ini(text);
    const auto& pool = require(tree, "pool");
    const auto& strategy = require(tree, "strategy");
    const auto* surrogate = optional_section(tree, "surrogate");
    const auto* costing = optional_section(tree, "costing");
    const auto* eval = optional_section(tree, "eval");
    const auto* runs = optional_section(tree, "run");

    Experiment ex;
    auto& rc = ex.run;

    std::string source = "synthetic";
    read(&pool, "pool", "source", source);
    if (source == "synthetic") {
        rc.pool_source = gen_from(pool);
    } else if (source == "focal") {
        std::string path;
        read(&pool, "pool", "path", path);
        if (path.empty()) throw ConfigError("[pool] path is required for a focal source");
        rc.pool_source = resolve(base_dir, path);
    } else {
        throw ConfigError("[pool] source must be 'synthetic' or 'focal', got '" + source + "'");
    }

    std::string kinds;
    read(&strategy, "strategy", "kind", kinds);
    if (kinds.empty()) throw ConfigError("[strategy] kind is required");
    for (const auto& k : split_list(kinds)) ex.strategies.push_back(acq::parse_strategy(k));
    rc.strategy.kind = ex.strategies.front();
    read(&strategy, "strategy", "batch_size", rc.strategy.batch_size);
    std::string phase;
    read(&strategy, "strategy", "parity_phase", phase);
    if (!phase.empty()) rc.strategy.parity_phase = acq::parse_parity(phase);

    read(surrogate, "surrogate", "kappa", rc.surrogate.kappa);
    read(surrogate, "surrogate", "noise_seed", rc.surrogate.noise_seed);
    std::string trace_dir;
    read(surrogate, "surrogate", "trace_dir", trace_dir);
    if (!trace_dir.empty()) rc.trace_dir = resolve(base_dir, trace_dir);

    std::string mode;
    read(costing, "costing", "mode", mode);
    if (!mode.empty()) rc.mode = cost::parse_mode(mode);
    read(costing, "costing", "interpolation_rate", rc.interpolation_rate);
    read(costing, "costing", "detector_gflops", rc.overhead.detector_gflops_per_frame);
    read(costing, "costing", "flow_gflops", rc.overhead.flow_gflops_per_pair);
    read(costing, "costing", "frames_per_round", rc.frames_per_round);

    read(eval, "eval", "enabled", rc.evaluate);
    read(eval, "eval", "min_box_pixels", rc.min_box_pixels);
    read(eval, "eval", "reference_resolution", rc.reference_resolution);
    std::string thresholds;
    read(eval, "eval", "iou_thresholds", thresholds);
    if (!thresholds.empty()) {
        rc.iou_thresholds.clear();
        for (const auto& t : split_list(thresholds)) {
            double v = 0.0;
            try {
                v = boost::lexical_cast<double>(t);
            } catch (const boost::bad_lexical_cast&) {
                throw ConfigError("[eval] iou_thresholds: cannot parse '" + t + "'");
            }
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("[eval] iou_thresholds must lie in (0,1]");
            rc.iou_thresholds.push_back(v);
        }
    }

    read(runs, "run", "name", ex.name);
    std::string seeds;
    read(runs, "run", "seeds", seeds);
    if (!seeds.empty()) {
        rc.seeds.clear();
        for (const auto& s : split_list(seeds)) {
            try {
                rc.seeds.push_back(boost::lexical_cast<std::uint64_t>(s));
            } catch (const boost::bad_lexical_cast&) {
                throw ConfigError("[run] seeds: cannot parse '" + s + "'");
            }
        }
    }
    read(runs, "run", "seed_sequences", rc.seed_sequences);
    read(runs, "run", "rounds", rc.rounds);
    read(runs, "run", "threads", rc.threads);
    read(runs, "run", "write_trace", ex.write_trace);
    read(runs, "run", "flow_threshold", rc.flow.threshold);
    read(runs, "run", "flow_min_area", rc.flow.min_area);
    if (rc.threads < 1) throw ConfigError("[run] threads must be at least 1");

    for (auto k : ex.strategies) {
        auto copy = rc;
        copy.strategy.kind = k;
        copy.validate();
    }
    return ex;
}

Experiment load_experiment(const std::filesystem::path& file) {
    return parse_experiment(read_file(file), file.parent_path().empty() ? "." : file.parent_path());
}

}  // namespace seqal::config
