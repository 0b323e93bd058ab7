#include "crowdtex/pipeline.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "crowdtex/dyntex.hpp"
#include "crowdtex/errors.hpp"

namespace crowdtex {

void validate_pipeline_config(const PipelineConfig& config) {
    if (config.cube.p < 2 || config.cube.q < 2) {
        throw std::invalid_argument("pipeline config: cube p and q must be >= 2");
    }
    if (config.cube.spatial_stride < 1 || config.cube.temporal_stride < 1) {
        throw std::invalid_argument("pipeline config: strides must be >= 1");
    }
    if (config.state_dim < 1) {
        throw std::invalid_argument("pipeline config: state dimension must be >= 1");
    }
    if (config.state_dim > config.cube.q - 1) {
        throw std::invalid_argument("pipeline config: state dimension " +
                                    std::to_string(config.state_dim) +
                                    " must be <= cube q - 1 = " +
                                    std::to_string(config.cube.q - 1));
    }
    if (!(config.percentile > 0.0) || config.percentile > 100.0) {
        throw std::invalid_argument("pipeline config: percentile must lie in (0, 100]");
    }
}

SequenceFeatures compute_features(const FrameSequence& seq, const PipelineConfig& config) {
    const CubeGrid grid = extract_cubes(seq, config.cube);
    SequenceFeatures out;
    out.rows.resize(static_cast<Eigen::Index>(grid.cubes.size()), config.feature_dim());
    out.origins.reserve(grid.cubes.size());
    for (std::size_t i = 0; i < grid.cubes.size(); ++i) {
        const Cube& cube = grid.cubes[i];
        out.rows.row(static_cast<Eigen::Index>(i)) =
            lds_features(fit_lds(cube, config.state_dim)).transpose();
        out.origins.push_back({cube.x, cube.y, cube.t});
    }
    return out;
}

Eigen::MatrixXd normal_training_features(const FrameSequence& seq, const LabelTrack& labels,
                                         const PipelineConfig& config) {
    if (static_cast<int>(labels.size()) != seq.frame_count()) {
        throw std::invalid_argument("label track length does not match frame count");
    }

    std::vector<Eigen::MatrixXd> batches;
    Eigen::Index total = 0;
    int t = 0;
    const int count = seq.frame_count();
    while (t < count) {
        if (labels[static_cast<std::size_t>(t)] != FrameLabel::Normal) {
            ++t;
            continue;
        }
        int end = t;
        while (end < count && labels[static_cast<std::size_t>(end)] == FrameLabel::Normal) {
            ++end;
        }
        if (end - t >= config.cube.q) {
            FrameSequence segment;
            segment.width = seq.width;
            segment.height = seq.height;
            segment.frames.assign(seq.frames.begin() + t, seq.frames.begin() + end);
            const SequenceFeatures features = compute_features(segment, config);
            total += features.rows.rows();
            batches.push_back(features.rows);
        }
        t = end;
    }
    if (batches.empty() || total < 2) {
        throw DataError("no Normal-labeled span of at least " + std::to_string(config.cube.q) +
                        " frames to train on");
    }

    Eigen::MatrixXd rows(total, config.feature_dim());
    Eigen::Index offset = 0;
    for (const auto& batch : batches) {
        rows.middleRows(offset, batch.rows()) = batch;
        offset += batch.rows();
    }
    return rows;
}

TrainedModel train_normal_model(const FrameSequence& seq, const LabelTrack& labels,
                                const PipelineConfig& config) {
    const Eigen::MatrixXd features = normal_training_features(seq, labels, config);
    TrainedModel trained;
    trained.model = fit_gaussian(features);
    trained.threshold = calibrate_threshold(trained.model, features, config.percentile);
    return trained;
}

LabelTrack FrameScores::predicted_labels() const {
    LabelTrack track(is_anomalous.size(), FrameLabel::Normal);
    for (std::size_t t = 0; t < is_anomalous.size(); ++t) {
        if (is_anomalous[t]) {
            track[t] = FrameLabel::Abnormal;
        }
    }
    return track;
}

FrameScores score_sequence(const FrameSequence& seq, const GaussianModel& model,
                           double threshold, const PipelineConfig& config) {
    if (model.dim != config.feature_dim()) {
        throw DataError("model dimension " + std::to_string(model.dim) +
                        " does not match feature dimension " +
                        std::to_string(config.feature_dim()) + " implied by the config");
    }
    const SequenceFeatures features = compute_features(seq, config);

    FrameScores scores;
    scores.score_max.assign(static_cast<std::size_t>(seq.frame_count()), 0.0);
    scores.is_anomalous.assign(static_cast<std::size_t>(seq.frame_count()), false);
    scores.cubes.reserve(features.origins.size());

    for (std::size_t i = 0; i < features.origins.size(); ++i) {
        const AnomalyDecision decision =
            decide(model, features.rows.row(static_cast<Eigen::Index>(i)).transpose(), threshold);
        scores.cubes.push_back({features.origins[i], decision.score, decision.is_anomalous});
        const int t0 = features.origins[i].t;
        for (int dt = 0; dt < config.cube.q; ++dt) {
            const auto frame = static_cast<std::size_t>(t0 + dt);
            scores.score_max[frame] = std::max(scores.score_max[frame], decision.score);
            if (decision.is_anomalous) {
                scores.is_anomalous[frame] = true;
            }
        }
    }
    return scores;
}

} // namespace crowdtex
