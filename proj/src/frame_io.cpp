#include "crowdtex/frame_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crowdtex/errors.hpp"
#include "crowdtex/rng.hpp"

namespace crowdtex {

namespace {

using nlohmann::json;

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

// Skips whitespace and '#' comment lines between PGM header tokens.
void skip_pgm_separators(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_pgm_int(std::istream& in) {
    skip_pgm_separators(in);
    int value = -1;
    in >> value;
    return in ? value : -1;
}

PgmImage read_pgm(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw DataError("cannot open PGM file: " + file.string());
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw DataError("not a binary PGM (P5) file: " + file.string());
    }
    const int width = read_pgm_int(in);
    const int height = read_pgm_int(in);
    const int maxval = read_pgm_int(in);
    if (width <= 0 || height <= 0) {
        throw DataError("malformed PGM header in " + file.string());
    }
    if (maxval != 255) {
        throw DataError("unsupported PGM maxval (want 255) in " + file.string());
    }
    in.get(); // single whitespace byte after maxval
    PgmImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw DataError("truncated PGM pixel data in " + file.string());
    }
    return img;
}

// Frame ordering key: the last run of digits in the stem.
long long numeric_key(const std::filesystem::path& file) {
    const std::string stem = file.stem().string();
    auto end = stem.end();
    while (end != stem.begin() && !std::isdigit(static_cast<unsigned char>(*(end - 1)))) {
        --end;
    }
    auto begin = end;
    while (begin != stem.begin() && std::isdigit(static_cast<unsigned char>(*(begin - 1)))) {
        --begin;
    }
    if (begin == end) {
        throw DataError("PGM filename has no frame number: " + file.string());
    }
    return std::stoll(std::string(begin, end));
}

FrameLabel parse_label(const std::string& text, const std::string& context) {
    if (text == "normal") {
        return FrameLabel::Normal;
    }
    if (text == "abnormal") {
        return FrameLabel::Abnormal;
    }
    throw DataError("unknown label \"" + text + "\" in " + context);
}

const char* label_name(FrameLabel label) {
    return label == FrameLabel::Normal ? "normal" : "abnormal";
}

void validate_intervals(const std::vector<LabelInterval>& intervals, const std::string& context) {
    std::vector<LabelInterval> sorted = intervals;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabelInterval& a, const LabelInterval& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].start < 0) {
            throw DataError("negative interval start in " + context);
        }
        if (sorted[i].end <= sorted[i].start) {
            throw DataError("empty or inverted interval [" + std::to_string(sorted[i].start) +
                            "," + std::to_string(sorted[i].end) + ") in " + context);
        }
        if (i > 0 && sorted[i].start < sorted[i - 1].end) {
            throw DataError("overlapping intervals [" + std::to_string(sorted[i - 1].start) + "," +
                            std::to_string(sorted[i - 1].end) + ") and [" +
                            std::to_string(sorted[i].start) + "," +
                            std::to_string(sorted[i].end) + ") in " + context);
        }
    }
}

} // namespace

FrameSequence load_frame_sequence(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("frame directory does not exist: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_directory()) {
            continue;
        }
        if (entry.path().extension() != ".pgm") {
            throw DataError("non-PGM file in frame directory: " + entry.path().string());
        }
        files.push_back(entry.path());
    }
    if (files.empty()) {
        throw DataError("no PGM frames in directory: " + dir.string());
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
        const long long ka = numeric_key(a);
        const long long kb = numeric_key(b);
        return ka != kb ? ka < kb : a.filename().string() < b.filename().string();
    });

    FrameSequence seq;
    for (const auto& file : files) {
        const PgmImage img = read_pgm(file);
        if (seq.frames.empty()) {
            seq.width = img.width;
            seq.height = img.height;
        } else if (img.width != seq.width || img.height != seq.height) {
            throw DataError("frame dimensions " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " do not match " +
                            std::to_string(seq.width) + "x" + std::to_string(seq.height) +
                            " in " + file.string());
        }
        std::vector<double> frame(img.pixels.size());
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            frame[i] = img.pixels[i] / 255.0;
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

void write_pgm(const std::vector<double>& pixels, int width, int height,
               const std::filesystem::path& file) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("write_pgm: pixel buffer does not match dimensions");
    }
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write PGM file: " + tmp.string());
        }
        out << "P5\n" << width << " " << height << "\n255\n";
        std::vector<std::uint8_t> bytes(pixels.size());
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            const double v = std::clamp(pixels[i], 0.0, 1.0);
            bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw DataError("short write on PGM file: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, file);
}

void write_frame_sequence(const FrameSequence& seq, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (int t = 0; t < seq.frame_count(); ++t) {
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", t);
        write_pgm(seq.frames[static_cast<std::size_t>(t)], seq.width, seq.height, dir / name);
    }
}

DatasetManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw DataError("cannot open manifest: " + file.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("malformed manifest JSON in " + file.string() + ": " + e.what());
    }
    DatasetManifest manifest;
    try {
        if (!doc.is_object() || !doc.contains("entries")) {
            throw DataError("manifest missing \"entries\" array: " + file.string());
        }
        for (const auto& je : doc.at("entries")) {
            ManifestEntry entry;
            entry.path = je.at("path").get<std::string>();
            entry.scene = je.value("scene", std::string{});
            for (const auto& ji : je.at("intervals")) {
                LabelInterval interval;
                interval.start = ji.at("start").get<int>();
                interval.end = ji.at("end").get<int>();
                interval.label = parse_label(ji.at("label").get<std::string>(),
                                             "manifest entry \"" + entry.path + "\"");
                entry.intervals.push_back(interval);
            }
            validate_intervals(entry.intervals, "manifest entry \"" + entry.path + "\"");
            manifest.entries.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + file.string() + ": " + e.what());
    }
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& file) {
    json doc;
    doc["entries"] = json::array();
    for (const auto& entry : manifest.entries) {
        json je;
        je["path"] = entry.path;
        je["scene"] = entry.scene;
        je["intervals"] = json::array();
        for (const auto& interval : entry.intervals) {
            je["intervals"].push_back({{"start", interval.start},
                                       {"end", interval.end},
                                       {"label", label_name(interval.label)}});
        }
        doc["entries"].push_back(std::move(je));
    }
    std::ofstream out(file, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write manifest: " + file.string());
    }
    out << doc.dump(2) << "\n";
}

LabelTrack labels_from_intervals(const std::vector<LabelInterval>& intervals, int frame_count) {
    if (frame_count <= 0) {
        throw std::invalid_argument("labels_from_intervals: frame_count must be positive");
    }
    validate_intervals(intervals, "label track");
    std::vector<LabelInterval> sorted = intervals;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabelInterval& a, const LabelInterval& b) { return a.start < b.start; });
    LabelTrack track;
    track.reserve(static_cast<std::size_t>(frame_count));
    int next = 0;
    for (const auto& interval : sorted) {
        if (interval.start != next) {
            throw DataError("label intervals leave frames [" + std::to_string(next) + "," +
                            std::to_string(interval.start) + ") uncovered");
        }
        if (interval.end > frame_count) {
            throw DataError("label interval end " + std::to_string(interval.end) +
                            " exceeds frame count " + std::to_string(frame_count));
        }
        track.insert(track.end(), static_cast<std::size_t>(interval.end - interval.start),
                     interval.label);
        next = interval.end;
    }
    if (next != frame_count) {
        throw DataError("label intervals leave frames [" + std::to_string(next) + "," +
                        std::to_string(frame_count) + ") uncovered");
    }
    return track;
}

std::pair<FrameSequence, LabelTrack> generate_synthetic_sequence(const SynthConfig& config,
                                                                 std::uint64_t seed) {
    if (config.width <= 0 || config.height <= 0 || config.n_frames <= 0 ||
        config.n_particles < 0) {
        throw std::invalid_argument("generate_synthetic_sequence: dimensions must be positive");
    }
    if (config.dispersal_frame >= config.n_frames || config.dispersal_frame < 0) {
        throw std::invalid_argument(
            "generate_synthetic_sequence: dispersal_frame must lie in [0, n_frames)");
    }

    Rng rng(seed);
    const int np = config.n_particles;
    std::vector<double> px(np), py(np);
    for (int i = 0; i < np; ++i) {
        // start inside the centered half-size box, crowd-like
        px[i] = config.width * (0.25 + 0.5 * rng.uniform());
        py[i] = config.height * (0.25 + 0.5 * rng.uniform());
    }
    std::vector<double> dir_x(np, 0.0), dir_y(np, 0.0);
    bool fleeing = false;

    const double max_x = config.width - 1.0;
    const double max_y = config.height - 1.0;
    auto reflect = [](double& pos, double& dir, double hi) {
        while (pos < 0.0 || pos > hi) {
            if (pos < 0.0) {
                pos = -pos;
                dir = -dir;
            }
            if (pos > hi) {
                pos = 2.0 * hi - pos;
                dir = -dir;
            }
        }
    };

    FrameSequence seq;
    seq.width = config.width;
    seq.height = config.height;
    seq.frames.reserve(static_cast<std::size_t>(config.n_frames));

    for (int t = 0; t < config.n_frames; ++t) {
        std::vector<double> frame(static_cast<std::size_t>(config.width) * config.height, 0.0);
        for (int i = 0; i < np; ++i) {
            const int cx = static_cast<int>(std::lround(px[i]));
            const int cy = static_cast<int>(std::lround(py[i]));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = cx + dx;
                    const int y = cy + dy;
                    if (x >= 0 && x < config.width && y >= 0 && y < config.height) {
                        double& cell = frame[static_cast<std::size_t>(y) * config.width + x];
                        cell = std::min(1.0, cell + 1.0);
                    }
                }
            }
        }
        seq.frames.push_back(std::move(frame));

        // advance particle positions toward frame t+1
        if (t + 1 >= config.n_frames) {
            break;
        }
        if (t + 1 < config.dispersal_frame) {
            for (int i = 0; i < np; ++i) {
                const double angle = 2.0 * M_PI * rng.uniform();
                px[i] += config.speed_normal * std::cos(angle);
                py[i] += config.speed_normal * std::sin(angle);
                double dummy = 0.0;
                reflect(px[i], dummy, max_x);
                reflect(py[i], dummy, max_y);
            }
        } else {
            if (!fleeing) {
                fleeing = true;
                double cx = 0.0, cy = 0.0;
                if (np > 0) {
                    for (int i = 0; i < np; ++i) {
                        cx += px[i];
                        cy += py[i];
                    }
                    cx /= np;
                    cy /= np;
                }
                for (int i = 0; i < np; ++i) {
                    const double dx = px[i] - cx;
                    const double dy = py[i] - cy;
                    const double norm = std::hypot(dx, dy);
                    if (norm < 1e-9) {
                        const double angle = 2.0 * M_PI * rng.uniform();
                        dir_x[i] = std::cos(angle);
                        dir_y[i] = std::sin(angle);
                    } else {
                        dir_x[i] = dx / norm;
                        dir_y[i] = dy / norm;
                    }
                }
            }
            for (int i = 0; i < np; ++i) {
                px[i] += config.speed_abnormal * dir_x[i];
                py[i] += config.speed_abnormal * dir_y[i];
                reflect(px[i], dir_x[i], max_x);
                reflect(py[i], dir_y[i], max_y);
            }
        }
    }

    LabelTrack labels(static_cast<std::size_t>(config.n_frames), FrameLabel::Abnormal);
    std::fill(labels.begin(), labels.begin() + config.dispersal_frame, FrameLabel::Normal);
    return {std::move(seq), std::move(labels)};
}

} // namespace crowdtex
