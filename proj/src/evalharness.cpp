#include "crowdtex/evalharness.hpp"

#include <charconv>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "crowdtex/errors.hpp"

namespace crowdtex {

namespace {

using nlohmann::json;

constexpr int kReportSchemaVersion = 1;

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

RunResult run_from_tracks(int run_id, const LabelTrack& predicted, const LabelTrack& truth) {
    RunResult run;
    run.run_id = run_id;
    const auto [accuracy, confusion] = compute_accuracy(predicted, truth);
    run.accuracy = accuracy;
    run.confusion = confusion;
    run.n_frames_evaluated = confusion.total();
    return run;
}

} // namespace

std::pair<double, Confusion> compute_accuracy(const LabelTrack& predicted,
                                              const LabelTrack& truth) {
    if (predicted.empty() || truth.empty()) {
        throw std::invalid_argument("compute_accuracy: empty label track");
    }
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("compute_accuracy: track lengths differ (" +
                                    std::to_string(predicted.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    }
    Confusion confusion;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pred_abnormal = predicted[i] == FrameLabel::Abnormal;
        const bool true_abnormal = truth[i] == FrameLabel::Abnormal;
        if (pred_abnormal && true_abnormal) {
            ++confusion.tp;
        } else if (pred_abnormal && !true_abnormal) {
            ++confusion.fp;
        } else if (!pred_abnormal && !true_abnormal) {
            ++confusion.tn;
        } else {
            ++confusion.fn;
        }
    }
    const double accuracy =
        100.0 * static_cast<double>(confusion.tp + confusion.tn) /
        static_cast<double>(confusion.total());
    return {accuracy, confusion};
}

double mean_accuracy(std::span<const double> run_accuracies) {
    if (run_accuracies.empty()) {
        throw std::invalid_argument("mean_accuracy: no runs");
    }
    double sum = 0.0;
    for (const double a : run_accuracies) {
        sum += a;
    }
    return sum / static_cast<double>(run_accuracies.size());
}

EvalReport make_report(std::vector<RunResult> runs) {
    EvalReport report;
    report.runs = std::move(runs);
    std::vector<double> accuracies;
    accuracies.reserve(report.runs.size());
    for (const auto& run : report.runs) {
        accuracies.push_back(run.accuracy);
    }
    report.average_accuracy = mean_accuracy(accuracies);
    return report;
}

EvalReport evaluate_runs(const SynthConfig& synth, const PipelineConfig& config, int n_runs,
                         std::uint64_t base_seed) {
    if (n_runs < 1) {
        throw std::invalid_argument("evaluate_runs: n_runs must be >= 1");
    }
    validate_pipeline_config(config);

    std::vector<RunResult> runs;
    runs.reserve(static_cast<std::size_t>(n_runs));
    for (int r = 0; r < n_runs; ++r) {
        const auto [seq, truth] = generate_synthetic_sequence(synth, base_seed + r);
        const TrainedModel trained = train_normal_model(seq, truth, config);
        const FrameScores scores = score_sequence(seq, trained.model, trained.threshold, config);
        runs.push_back(run_from_tracks(r, scores.predicted_labels(), truth));
    }
    return make_report(std::move(runs));
}

EvalReport evaluate_runs(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                         const PipelineConfig& config) {
    if (manifest.entries.empty()) {
        throw DataError("evaluate_runs: manifest has no entries");
    }
    validate_pipeline_config(config);

    std::vector<RunResult> runs;
    runs.reserve(manifest.entries.size());
    int run_id = 0;
    for (const auto& entry : manifest.entries) {
        const FrameSequence seq = load_frame_sequence(base_dir / entry.path);
        const LabelTrack truth = labels_from_intervals(entry.intervals, seq.frame_count());
        const TrainedModel trained = train_normal_model(seq, truth, config);
        const FrameScores scores = score_sequence(seq, trained.model, trained.threshold, config);
        runs.push_back(run_from_tracks(run_id++, scores.predicted_labels(), truth));
    }
    return make_report(std::move(runs));
}

std::string report_to_csv(const EvalReport& report) {
    std::string csv = "run,accuracy,tp,fp,tn,fn\n";
    for (const auto& run : report.runs) {
        csv += std::to_string(run.run_id);
        csv += ',';
        csv += format_double(run.accuracy);
        csv += ',';
        csv += std::to_string(run.confusion.tp);
        csv += ',';
        csv += std::to_string(run.confusion.fp);
        csv += ',';
        csv += std::to_string(run.confusion.tn);
        csv += ',';
        csv += std::to_string(run.confusion.fn);
        csv += '\n';
    }
    csv += "average,";
    csv += format_double(report.average_accuracy);
    csv += '\n';
    return csv;
}

json report_to_json(const EvalReport& report) {
    json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["runs"] = json::array();
    for (const auto& run : report.runs) {
        doc["runs"].push_back({{"run_id", run.run_id},
                               {"accuracy", run.accuracy},
                               {"n_frames_evaluated", run.n_frames_evaluated},
                               {"confusion",
                                {{"tp", run.confusion.tp},
                                 {"fp", run.confusion.fp},
                                 {"tn", run.confusion.tn},
                                 {"fn", run.confusion.fn}}}});
    }
    doc["average_accuracy"] = report.average_accuracy;
    return doc;
}

} // namespace crowdtex
