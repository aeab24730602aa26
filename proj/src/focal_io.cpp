#include "seqal/focal_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "seqal/error.hpp"

namespace fs = std::filesystem;

namespace seqal::io {
namespace {

constexpr Split kSplits[] = {Split::train, Split::validation, Split::test};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(p, mode);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void make_dirs(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

}  // namespace

std::pair<std::string, int> parse_label_name(std::string_view file_name, std::string_view extension) {
    const auto slash = file_name.find_last_of("/\\");
    if (slash != std::string_view::npos) file_name.remove_prefix(slash + 1);
    if (file_name.size() <= extension.size() || !file_name.ends_with(extension))
        throw NameFormatError("'" + std::string(file_name) + "' does not end in " + std::string(extension));
    const std::string_view stem = file_name.substr(0, file_name.size() - extension.size());
    const auto us = stem.rfind('_');
    if (us == std::string_view::npos || us == 0 || us + 1 == stem.size())
        throw NameFormatError("'" + std::string(file_name) + "' is not <sequence ID>_<frame ID>");
    const std::string_view frame = stem.substr(us + 1);
    int frame_id = 0;
    if (!std::all_of(frame.begin(), frame.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        !parse_number(frame, frame_id))
        throw NameFormatError("'" + std::string(file_name) + "' has a non-numeric frame ID");
    return {std::string(stem.substr(0, us)), frame_id};
}

LabelFile parse_label_file(std::string_view path_name, std::string_view contents, const ParseOptions& opts) {
    LabelFile out;
    std::tie(out.sequence_id, out.frame_id) = parse_label_name(path_name);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        const std::string_view line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;

        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 5 && fields.size() != 6)
            throw LineFormatError("expected 5 fields, got " + std::to_string(fields.size()), line_no);

        BoundingBox box;
        if (!parse_number(fields[0], box.class_id)) throw LineFormatError("class is not an integer", line_no);
        if (box.class_id < 0) throw LineFormatError("negative class id", line_no);
        if (opts.strict_classes && box.class_id >= kNumClasses)
            throw LineFormatError("class " + std::to_string(box.class_id) + " is not a known superclass", line_no);
        double v[4];
        for (int k = 0; k < 4; ++k) {
            if (!parse_number(fields[k + 1], v[k]) || !std::isfinite(v[k]))
                throw LineFormatError("coordinate '" + std::string(fields[k + 1]) + "' is not a number", line_no);
        }
        if (fields.size() == 6) {
            int occ = 0;
            if (!parse_number(fields[5], occ) || occ < 0 || occ > 2)
                throw LineFormatError("occlusion must be 0, 1 or 2", line_no);
            box.occluded = static_cast<Occlusion>(occ);
        }
        if (v[2] <= 0.0 || v[3] <= 0.0) throw LineFormatError("non-positive box size", line_no);

        const double x0 = v[0] - v[2] / 2.0, x1 = v[0] + v[2] / 2.0;
        const double y0 = v[1] - v[3] / 2.0, y1 = v[1] + v[3] / 2.0;
        const double cx0 = std::clamp(x0, 0.0, 1.0), cx1 = std::clamp(x1, 0.0, 1.0);
        const double cy0 = std::clamp(y0, 0.0, 1.0), cy1 = std::clamp(y1, 0.0, 1.0);
        if (cx0 != x0 || cx1 != x1 || cy0 != y0 || cy1 != y1) {
            out.report.clamped_lines.push_back(line_no);
            if (cx1 <= cx0 || cy1 <= cy0) throw LineFormatError("box lies outside the image", line_no);
            box.cx = (cx0 + cx1) / 2.0;
            box.cy = (cy0 + cy1) / 2.0;
            box.w = cx1 - cx0;
            box.h = cy1 - cy0;
        } else {
            box.cx = v[0];
            box.cy = v[1];
            box.w = v[2];
            box.h = v[3];
        }
        out.boxes.push_back(box);
    }
    return out;
}

std::string format_box(const BoundingBox& box) {
    std::string s = fmt::format("{:d} {:.6f} {:.6f} {:.6f} {:.6f}", box.class_id, box.cx, box.cy, box.w, box.h);
    if (box.occluded != Occlusion::visible) s += fmt::format(" {:d}", static_cast<int>(box.occluded));
    return s;
}

std::string label_file_name(const std::string& sequence_id, int frame_id) {
    return fmt::format("{}_{:06d}.txt", sequence_id, frame_id);
}

std::vector<SequenceMeta> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw ManifestError("cannot open manifest " + manifest.string());
    std::string line;
    if (!std::getline(in, line)) throw ManifestError("empty manifest");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    const std::vector<std::string> expected = {"sequence_id", "cost_hours", "scene_id",
                                               "season", "time_of_day", "split"};
    if (header != expected) throw ManifestError("manifest header must be " + fmt::format("{}", fmt::join(expected, ",")));

    std::vector<SequenceMeta> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != expected.size())
            throw ManifestError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " columns");
        SequenceMeta m;
        m.sequence_id = cells[0];
        if (m.sequence_id.empty()) throw ManifestError("row " + std::to_string(line_no) + " has an empty sequence_id");
        if (!parse_number(std::string_view(cells[1]), m.cost_hours) || !std::isfinite(m.cost_hours))
            throw ManifestError("row " + std::to_string(line_no) + ": bad cost_hours");
        if (m.cost_hours <= 0.0)
            throw ManifestError("row " + std::to_string(line_no) + ": cost_hours must be positive");
        if (!parse_number(std::string_view(cells[2]), m.scene_id))
            throw ManifestError("row " + std::to_string(line_no) + ": bad scene_id");
        m.season = parse_season(cells[3]);
        m.time_of_day = parse_time_of_day(cells[4]);
        m.split = parse_split(cells[5]);
        rows.push_back(std::move(m));
    }
    return rows;
}

void write_manifest(const std::vector<SequenceMeta>& rows, const fs::path& manifest) {
    auto out = open_out(manifest);
    out << "sequence_id,cost_hours,scene_id,season,time_of_day,split\n";
    for (const auto& m : rows)
        out << fmt::format("{},{:.6f},{},{},{},{}\n", m.sequence_id, m.cost_hours, m.scene_id,
                           to_string(m.season), to_string(m.time_of_day), to_string(m.split));
    if (!out) throw IoError("failed writing " + manifest.string());
}

Raster read_pgm(const fs::path& path) {
    const std::string data = read_file(path);
    std::istringstream is(data);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic;
    auto skip_comments = [&] {
        is >> std::ws;
        while (is.peek() == '#') {
            std::string c;
            std::getline(is, c);
            is >> std::ws;
        }
    };
    skip_comments();
    is >> w;
    skip_comments();
    is >> h;
    skip_comments();
    is >> maxval;
    if (magic != "P5" || !is || w <= 0 || h <= 0 || maxval != 255)
        throw ShapeError(path.string() + " is not an 8-bit binary PGM");
    is.get();  // single whitespace before the raster
    const auto offset = static_cast<std::size_t>(is.tellg());
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (data.size() < offset + n) throw ShapeError(path.string() + " is truncated");
    Raster r(w, h);
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(offset), n, r.pixels.begin());
    return r;
}

void write_pgm(const Raster& raster, const fs::path& path) {
    if (raster.pixels.size() != static_cast<std::size_t>(raster.width) * raster.height)
        throw ShapeError("raster size does not match its dimensions");
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.pixels.data()), static_cast<std::streamsize>(raster.pixels.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

void write_flow_cache(const Sequence& seq, const fs::path& path) {
    if (!seq.has_flow_stats()) throw MissingRasterError("sequence " + seq.id() + " has no flow statistics");
    auto out = open_out(path);
    out << "frame_id,motion,box_est\n";
    for (std::size_t i = 0; i < seq.frames.size(); ++i)
        out << seq.frames[i].frame_id << ',' << (*seq.motion_scores)[i] << ',' << (*seq.box_estimates)[i] << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void read_flow_cache(Sequence& seq, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<std::uint64_t> motion(seq.frames.size()), boxes(seq.frames.size());
    std::vector<bool> seen(seq.frames.size(), false);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        std::size_t fid = 0;
        std::uint64_t m = 0, b = 0;
        if (cells.size() != 3 || !parse_number(std::string_view(cells[0]), fid) ||
            !parse_number(std::string_view(cells[1]), m) || !parse_number(std::string_view(cells[2]), b))
            throw LineFormatError("bad flow cache row in " + path.string(), line_no);
        if (fid >= seq.frames.size()) throw ContinuityError("flow cache frame " + std::to_string(fid) + " out of range");
        motion[fid] = m;
        boxes[fid] = b;
        seen[fid] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ContinuityError("flow cache " + path.string() + " does not cover every frame");
    seq.motion_scores = std::move(motion);
    seq.box_estimates = std::move(boxes);
}

PoolState load_pool(const fs::path& root, const LoadOptions& opts) {
    return load_pool(root, root / "manifest.csv", opts);
}

PoolState load_pool(const fs::path& root, const fs::path& manifest, const LoadOptions& opts) {
    const auto rows = read_manifest(manifest);
    std::map<std::string, SequenceMeta> metas;
    for (const auto& m : rows)
        if (!metas.emplace(m.sequence_id, m).second) throw ManifestError("duplicate sequence id " + m.sequence_id);

    std::map<std::string, std::map<int, Frame>> frames;
    for (Split split : kSplits) {
        const fs::path dir = root / "labels" / split_dir(split);
        if (!fs::exists(dir)) continue;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            LabelFile lf;
            try {
                lf = parse_label_file(file.filename().string(), read_file(file), opts.parse);
            } catch (const LineFormatError& e) {
                throw LineFormatError(file.string() + ": " + e.what(), e.line());
            }
            auto it = metas.find(lf.sequence_id);
            if (it == metas.end())
                throw ManifestError("sequence " + lf.sequence_id + " (" + file.string() + ") has no manifest row");
            if (it->second.split != split)
                throw ManifestError("sequence " + lf.sequence_id + " is listed as " +
                                    std::string(to_string(it->second.split)) + " but stored under " +
                                    std::string(split_dir(split)));
            Frame f;
            f.frame_id = lf.frame_id;
            f.boxes = std::move(lf.boxes);
            if (opts.load_rasters) {
                const fs::path pgm = root / "frames" / split_dir(split) /
                                     fmt::format("{}_{:06d}.pgm", lf.sequence_id, lf.frame_id);
                if (fs::exists(pgm)) f.raster = read_pgm(pgm);
            }
            if (!frames[lf.sequence_id].emplace(f.frame_id, std::move(f)).second)
                throw ContinuityError("duplicate frame " + std::to_string(lf.frame_id) + " in " + lf.sequence_id);
        }
    }

    PoolState pool;
    for (const auto& m : rows) {
        Sequence seq;
        seq.meta = m;
        auto it = frames.find(m.sequence_id);
        if (it == frames.end() || it->second.empty())
            throw ContinuityError("sequence " + m.sequence_id + " has no label files");
        int expect = 0;
        for (auto& [fid, f] : it->second) {
            if (fid != expect)
                throw ContinuityError("sequence " + m.sequence_id + " is missing frame " + std::to_string(expect));
            ++expect;
            seq.frames.push_back(std::move(f));
        }
        if (opts.load_flow_cache) {
            const fs::path cache = root / "flow" / (m.sequence_id + ".flow.csv");
            if (fs::exists(cache)) read_flow_cache(seq, cache);
        }
        pool.add(std::move(seq));
    }
    return pool;
}

void write_pool(const PoolState& pool, const fs::path& root) {
    for (Split split : kSplits) make_dirs(root / "labels" / split_dir(split));

    std::vector<SequenceMeta> rows;
    for (const auto& [id, seq] : pool.sequences()) {
        rows.push_back(seq.meta);
        const fs::path label_dir = root / "labels" / split_dir(seq.meta.split);
        for (const auto& f : seq.frames) {
            auto out = open_out(label_dir / label_file_name(id, f.frame_id));
            for (const auto& b : f.boxes) out << format_box(b) << '\n';
            if (!out) throw IoError("failed writing labels for " + id);
            if (f.raster) {
                const fs::path frame_dir = root / "frames" / split_dir(seq.meta.split);
                make_dirs(frame_dir);
                write_pgm(*f.raster, frame_dir / fmt::format("{}_{:06d}.pgm", id, f.frame_id));
            }
        }
        if (seq.has_flow_stats()) {
            make_dirs(root / "flow");
            write_flow_cache(seq, root / "flow" / (id + ".flow.csv"));
        }
    }
    write_manifest(rows, root / "manifest.csv");
}

bool pools_equal(const PoolState& a, const PoolState& b, double tol, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.sequences().size() != b.sequences().size()) return fail("sequence count differs");
    if (a.labeled() != b.labeled() || a.unlabeled() != b.unlabeled()) return fail("partition differs");
    for (const auto& [id, sa] : a.sequences()) {
        if (!b.contains(id)) return fail("missing sequence " + id);
        const auto& sb = b.at(id);
        const auto& ma = sa.meta;
        const auto& mb = sb.meta;
        if (ma.scene_id != mb.scene_id || ma.season != mb.season || ma.time_of_day != mb.time_of_day ||
            ma.split != mb.split || std::abs(ma.cost_hours - mb.cost_hours) > tol)
            return fail("metadata differs for " + id);
        if (sa.frames.size() != sb.frames.size()) return fail("frame count differs for " + id);
        for (std::size_t i = 0; i < sa.frames.size(); ++i) {
            const auto& fa = sa.frames[i];
            const auto& fb = sb.frames[i];
            if (fa.frame_id != fb.frame_id || fa.boxes.size() != fb.boxes.size())
                return fail(fmt::format("frame {} of {} differs", i, id));
            for (std::size_t k = 0; k < fa.boxes.size(); ++k) {
                const auto& x = fa.boxes[k];
                const auto& y = fb.boxes[k];
                if (x.class_id != y.class_id || x.occluded != y.occluded || std::abs(x.cx - y.cx) > tol ||
                    std::abs(x.cy - y.cy) > tol || std::abs(x.w - y.w) > tol || std::abs(x.h - y.h) > tol)
                    return fail(fmt::format("box {} of frame {} of {} differs", k, i, id));
            }
            if (fa.raster != fb.raster) return fail(fmt::format("raster of frame {} of {} differs", i, id));
        }
        if (sa.motion_scores != sb.motion_scores || sa.box_estimates != sb.box_estimates)
            return fail("flow statistics differ for " + id);
    }
    return true;
}

}  // namespace seqal::io
