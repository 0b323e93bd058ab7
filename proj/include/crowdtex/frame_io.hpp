#ifndef CROWDTEX_FRAME_IO_HPP
#define CROWDTEX_FRAME_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace crowdtex {

enum class FrameLabel : std::uint8_t { Normal = 0, Abnormal = 1 };

// Per-frame ground-truth labels; pairs 1:1 with a FrameSequence.
using LabelTrack = std::vector<FrameLabel>;

// Ordered grayscale frames. Every frame is height*width doubles in [0,1],
// row-major (index y*width + x).
struct FrameSequence {
    int width = 0;
    int height = 0;
    std::vector<std::vector<double>> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }

    double at(int t, int x, int y) const {
        return frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(y) * width + x];
    }
    double& at(int t, int x, int y) {
        return frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(y) * width + x];
    }
};

// Half-open frame range [start, end) carrying one label.
struct LabelInterval {
    int start = 0;
    int end = 0;
    FrameLabel label = FrameLabel::Normal;
};

struct ManifestEntry {
    std::string path;   // frame directory, relative to the manifest file
    std::string scene;
    std::vector<LabelInterval> intervals;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

// Loads a directory of 8-bit binary PGM (P5, maxval 255) frames in numeric
// filename order. Intensities are scaled by 1/255. Throws DataError naming
// the offending file on a missing directory, a non-PGM file, or mixed
// dimensions.
FrameSequence load_frame_sequence(const std::filesystem::path& dir);

// Writes frames as binary PGMs named frame_%06d.pgm, maxval 255. Creates
// the directory if needed. Inverse of load_frame_sequence up to the 8-bit
// quantization (exact round trip for already-quantized intensities).
void write_frame_sequence(const FrameSequence& seq, const std::filesystem::path& dir);

// Writes one frame (row-major intensities in [0,1]) as a binary PGM,
// maxval 255, via a temp file and rename.
void write_pgm(const std::vector<double>& pixels, int width, int height,
               const std::filesystem::path& file);

// Parses the JSON manifest format:
//   {"entries":[{"path":..., "scene":...,
//                "intervals":[{"start":int,"end":int,"label":"normal"|"abnormal"}]}]}
// Throws DataError on malformed syntax, overlapping intervals, or negative /
// inverted frame ranges. Range checks against a concrete sequence length
// happen in labels_from_intervals.
DatasetManifest load_manifest(const std::filesystem::path& file);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);

// Expands intervals into a per-frame LabelTrack of length frame_count.
// The intervals must tile [0, frame_count) exactly: any gap, overlap, or
// out-of-range index is a DataError.
LabelTrack labels_from_intervals(const std::vector<LabelInterval>& intervals, int frame_count);

// Synthetic crowd stand-in: point particles doing bounded random walks until
// dispersal_frame, then fleeing radially from their centroid.
struct SynthConfig {
    int width = 64;
    int height = 64;
    int n_particles = 80;
    int n_frames = 48;
    int dispersal_frame = 24;
    double speed_normal = 0.5;
    double speed_abnormal = 6.0;
};

// Pure function of (config, seed): identical arguments give bit-identical
// output. Particles render as 3x3 intensity-1 squares with additive clamping
// at 1.0 and reflect at frame edges. Frames before dispersal_frame are
// labeled Normal, the rest Abnormal.
std::pair<FrameSequence, LabelTrack> generate_synthetic_sequence(const SynthConfig& config,
                                                                 std::uint64_t seed);

} // namespace crowdtex

#endif
