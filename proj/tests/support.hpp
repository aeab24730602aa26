#pragma once

// Small helpers shared by the unit tests.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "seqal/types.hpp"

namespace testing {

// Temporary directory removed when the object goes out of scope.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "seqal_test_XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Train sequence with `n` empty frames.
inline seqal::Sequence blank_sequence(const std::string& id, std::size_t n, double cost,
                                      seqal::Split split = seqal::Split::train) {
    seqal::Sequence s;
    s.meta.sequence_id = id;
    s.meta.cost_hours = cost;
    s.meta.split = split;
    for (std::size_t f = 0; f < n; ++f) s.frames.push_back(seqal::Frame{int(f), {}, std::nullopt});
    return s;
}

// Concatenated text of every file under `root`, keyed by relative path.
inline std::string tree_digest(const std::filesystem::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
    std::string out;
    for (const auto& [k, v] : files) out += k + "\n" + v + "\n";
    return out;
}

}  // namespace testing
