#ifndef CROWDTEX_EVALHARNESS_HPP
#define CROWDTEX_EVALHARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crowdtex/frame_io.hpp"
#include "crowdtex/pipeline.hpp"

namespace crowdtex {

struct Confusion {
    std::int64_t tp = 0; // predicted Abnormal, truth Abnormal
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

struct RunResult {
    int run_id = 0;
    double accuracy = 0.0; // percent
    std::int64_t n_frames_evaluated = 0;
    Confusion confusion;
};

struct EvalReport {
    std::vector<RunResult> runs;
    double average_accuracy = 0.0;
};

// Frame-level agreement percentage plus confusion counts (Abnormal is the
// positive class). Throws std::invalid_argument on length mismatch or empty
// tracks.
std::pair<double, Confusion> compute_accuracy(const LabelTrack& predicted,
                                              const LabelTrack& truth);

// The averaging path used for EvalReport::average_accuracy.
double mean_accuracy(std::span<const double> run_accuracies);

// Assembles a report; average_accuracy is the arithmetic mean of the run
// accuracies.
EvalReport make_report(std::vector<RunResult> runs);

// Synthetic protocol: run r generates a sequence with seed base_seed + r,
// trains a Gaussian model on the Normal prefix, calibrates the threshold at
// config.percentile, scores every frame, and records frame-level accuracy.
EvalReport evaluate_runs(const SynthConfig& synth, const PipelineConfig& config, int n_runs,
                         std::uint64_t base_seed);

// Manifest protocol: each entry is one run (no randomness involved).
// Sequence paths resolve relative to base_dir.
EvalReport evaluate_runs(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                         const PipelineConfig& config);

// CSV with header run,accuracy,tp,fp,tn,fn and a final average,<value> row.
std::string report_to_csv(const EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);

} // namespace crowdtex

#endif
