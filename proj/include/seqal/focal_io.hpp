#pragma once

// FOCAL-format dataset tree:
//
//   <root>/manifest.csv
//   <root>/labels/{training,validation,test}/<sequence ID>_<frame ID>.txt
//   <root>/frames/{training,validation,test}/<sequence ID>_<frame ID>.pgm   (optional)
//   <root>/flow/<sequence ID>.flow.csv                                     (optional)
//
// Label lines are "class cx cy w h" in normalized center format, optionally
// followed by an occlusion level 0/1/2.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqal/types.hpp"

namespace seqal::io {

struct ParseOptions {
    // Reject class ids outside [0, kNumClasses).
    bool strict_classes = false;
};

struct ParseReport {
    // 1-based line numbers whose coordinates were clamped into [0,1].
    std::vector<std::size_t> clamped_lines;
};

struct LabelFile {
    std::string sequence_id;
    int frame_id = 0;
    std::vector<BoundingBox> boxes;
    ParseReport report;
};

// Splits "<sequence ID>_<frame ID>.txt" at the last underscore.
std::pair<std::string, int> parse_label_name(std::string_view file_name, std::string_view extension = ".txt");

LabelFile parse_label_file(std::string_view path_name, std::string_view contents,
                           const ParseOptions& opts = {});

// One label line for a box, "%d %.6f %.6f %.6f %.6f" plus " %d" for occluded boxes.
std::string format_box(const BoundingBox& box);

std::string label_file_name(const std::string& sequence_id, int frame_id);

struct LoadOptions {
    ParseOptions parse;
    bool load_rasters = true;
    bool load_flow_cache = true;
};

// Reads a pool from a FOCAL tree. `manifest` defaults to <root>/manifest.csv.
PoolState load_pool(const std::filesystem::path& root, const std::filesystem::path& manifest,
                    const LoadOptions& opts = {});
PoolState load_pool(const std::filesystem::path& root, const LoadOptions& opts = {});

// Writes labels, manifest, rasters and flow caches (when present).
void write_pool(const PoolState& pool, const std::filesystem::path& root);

std::vector<SequenceMeta> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::vector<SequenceMeta>& rows, const std::filesystem::path& manifest);

// Binary (P5) portable graymap.
Raster read_pgm(const std::filesystem::path& path);
void write_pgm(const Raster& raster, const std::filesystem::path& path);

// Per-sequence flow cache, columns frame_id,motion,box_est.
void write_flow_cache(const Sequence& seq, const std::filesystem::path& path);
// Loads a flow cache onto the sequence; the cache must cover every frame.
void read_flow_cache(Sequence& seq, const std::filesystem::path& path);

// Structural equality with coordinates and costs compared at `tol`.
bool pools_equal(const PoolState& a, const PoolState& b, double tol = 1e-6, std::string* why = nullptr);

}  // namespace seqal::io
