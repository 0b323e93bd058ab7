#ifndef CROWDTEX_PIPELINE_HPP
#define CROWDTEX_PIPELINE_HPP

#include <Eigen/Dense>
#include <vector>

#include "crowdtex/cubes.hpp"
#include "crowdtex/gaussmodel.hpp"

namespace crowdtex {

// Shared knobs for the cube -> LDS -> Gaussian pipeline. The cube depth
// default is raised to 8 here (the bare CubeSpec default is 5) so that the
// default state dimension 5 satisfies state_dim <= q - 1.
struct PipelineConfig {
    CubeSpec cube{8, 8, 8, 8};
    int state_dim = 5;
    double percentile = 100.0;

    int feature_dim() const { return state_dim + 4; }
};

// Throws std::invalid_argument on an inconsistent config (state_dim > q-1,
// non-positive sizes). Cheap; commands run it before any heavy work.
void validate_pipeline_config(const PipelineConfig& config);

// Feature rows for every cube of the sequence, with the originating cube
// geometry kept per row for frame attribution and overlays.
struct CubeRef {
    int x = 0;
    int y = 0;
    int t = 0;
};

struct SequenceFeatures {
    Eigen::MatrixXd rows; // L x feature_dim
    std::vector<CubeRef> origins;
};

SequenceFeatures compute_features(const FrameSequence& seq, const PipelineConfig& config);

// Features from Normal-labeled frames only. Cubes are extracted per maximal
// contiguous Normal interval so no training cube straddles a label change.
// Throws DataError when no interval is at least q frames long.
Eigen::MatrixXd normal_training_features(const FrameSequence& seq, const LabelTrack& labels,
                                         const PipelineConfig& config);

struct TrainedModel {
    GaussianModel model;
    double threshold = 0.0;
};

// fit_gaussian + calibrate_threshold over the Normal-frame features.
TrainedModel train_normal_model(const FrameSequence& seq, const LabelTrack& labels,
                                const PipelineConfig& config);

struct CubeDecision {
    CubeRef origin;
    double score = 0.0;
    bool anomalous = false;
};

// Per-frame verdicts: a cube spanning frames [t, t+q) attributes its decision
// to all q frames, and a frame is Abnormal iff any cube covering it is
// anomalous. score_max is the largest cube score covering the frame (0 for
// uncovered frames).
struct FrameScores {
    std::vector<double> score_max;
    std::vector<bool> is_anomalous;
    std::vector<CubeDecision> cubes;

    LabelTrack predicted_labels() const;
};

FrameScores score_sequence(const FrameSequence& seq, const GaussianModel& model,
                           double threshold, const PipelineConfig& config);

} // namespace crowdtex

#endif
