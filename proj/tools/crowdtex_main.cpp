// crowdtex: crowd-anomaly pipeline over spatio-temporal dynamic textures.
// Subcommands: synth | train | score | merge | train-clf | eval.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crowdtex/errors.hpp"
#include "crowdtex/evalharness.hpp"
#include "crowdtex/eventclf.hpp"
#include "crowdtex/frame_io.hpp"
#include "crowdtex/gaussmodel.hpp"
#include "crowdtex/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// JSON config file support for CLI11: flat object, keys matching long option
// names, e.g. {"cube-p": 8, "percentile": 100}. Command-line flags win.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json doc;
        try {
            input >> doc;
        } catch (const json::exception& e) {
            throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) {
            throw CLI::ConfigError("config file must hold a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc.items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (value.is_array()) {
                for (const auto& element : value) {
                    item.inputs.push_back(element.is_string()
                                              ? element.get<std::string>()
                                              : element.dump());
                }
            } else if (value.is_string()) {
                item.inputs.push_back(value.get<std::string>());
            } else {
                item.inputs.push_back(value.dump());
            }
            items.push_back(std::move(item));
        }
        return items;
    }
};

void atomic_write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw crowdtex::DataError("cannot write file: " + tmp.string());
        }
        out << content;
        if (!out) {
            throw crowdtex::DataError("short write on file: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

json load_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) {
        throw crowdtex::DataError(std::string("cannot open ") + what + ": " + path.string());
    }
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw crowdtex::DataError(std::string("malformed JSON in ") + what + " " +
                                  path.string() + ": " + e.what());
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Pipeline knobs shared by train / score / merge / train-clf / eval.
struct PipelineFlags {
    crowdtex::PipelineConfig config;
    CLI::Option* opt_p = nullptr;
    CLI::Option* opt_q = nullptr;
    CLI::Option* opt_ss = nullptr;
    CLI::Option* opt_ts = nullptr;
    CLI::Option* opt_n = nullptr;
    CLI::Option* opt_pct = nullptr;

    void attach(CLI::App* cmd) {
        opt_p = cmd->add_option("--cube-p", config.cube.p, "Cube spatial side (pixels)");
        opt_q = cmd->add_option("--cube-q", config.cube.q, "Cube temporal depth (frames)");
        opt_ss = cmd->add_option("--spatial-stride", config.cube.spatial_stride,
                                 "Spatial stride between cube origins");
        opt_ts = cmd->add_option("--temporal-stride", config.cube.temporal_stride,
                                 "Temporal stride between cube origins");
        opt_n = cmd->add_option("--state-dim", config.state_dim,
                                "Dynamic-texture state dimension (must be <= cube-q - 1)");
        opt_pct = cmd->add_option("--percentile", config.percentile,
                                  "Calibration percentile of training scores, in (0,100]");
        cmd->set_config("--config", "", "JSON config file (flags take precedence)");
        cmd->config_formatter(std::make_shared<JsonConfig>());
    }

    // Model files remember their pipeline settings; explicit flags override.
    void apply_model_defaults(const json& doc) {
        if (!doc.contains("pipeline")) {
            return;
        }
        const json& p = doc.at("pipeline");
        if (opt_p->count() == 0 && p.contains("cube-p")) {
            config.cube.p = p.at("cube-p").get<int>();
        }
        if (opt_q->count() == 0 && p.contains("cube-q")) {
            config.cube.q = p.at("cube-q").get<int>();
        }
        if (opt_ss->count() == 0 && p.contains("spatial-stride")) {
            config.cube.spatial_stride = p.at("spatial-stride").get<int>();
        }
        if (opt_ts->count() == 0 && p.contains("temporal-stride")) {
            config.cube.temporal_stride = p.at("temporal-stride").get<int>();
        }
        if (opt_n->count() == 0 && p.contains("state-dim")) {
            config.state_dim = p.at("state-dim").get<int>();
        }
        if (opt_pct->count() == 0 && p.contains("percentile")) {
            config.percentile = p.at("percentile").get<double>();
        }
    }

    json to_json() const {
        return {{"cube-p", config.cube.p},
                {"cube-q", config.cube.q},
                {"spatial-stride", config.cube.spatial_stride},
                {"temporal-stride", config.cube.temporal_stride},
                {"state-dim", config.state_dim},
                {"percentile", config.percentile}};
    }
};

struct SynthFlags {
    crowdtex::SynthConfig config;

    void attach(CLI::App* cmd) {
        cmd->add_option("--width", config.width, "Frame width (pixels)");
        cmd->add_option("--height", config.height, "Frame height (pixels)");
        cmd->add_option("--particles", config.n_particles, "Number of particles");
        cmd->add_option("--frames", config.n_frames, "Number of frames");
        cmd->add_option("--dispersal-frame", config.dispersal_frame,
                        "First Abnormal frame; particles flee from here on");
        cmd->add_option("--speed-normal", config.speed_normal,
                        "Random-walk speed before dispersal (pixels/frame)");
        cmd->add_option("--speed-abnormal", config.speed_abnormal,
                        "Radial flight speed after dispersal (pixels/frame)");
    }

    void validate() const {
        if (config.width <= 0 || config.height <= 0 || config.n_frames <= 0 ||
            config.n_particles < 0) {
            throw CLI::ValidationError("--width/--height/--frames must be positive and "
                                       "--particles non-negative");
        }
        if (config.dispersal_frame < 0 || config.dispersal_frame >= config.n_frames) {
            throw CLI::ValidationError("--dispersal-frame must be >= 0 and < --frames");
        }
    }
};

struct SequenceWithLabels {
    crowdtex::FrameSequence seq;
    crowdtex::LabelTrack labels;
};

std::vector<SequenceWithLabels> load_labeled_sequences(const fs::path& manifest_path) {
    const crowdtex::DatasetManifest manifest = crowdtex::load_manifest(manifest_path);
    if (manifest.entries.empty()) {
        throw crowdtex::DataError("manifest has no entries: " + manifest_path.string());
    }
    const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                          : fs::path(".");
    std::vector<SequenceWithLabels> out;
    for (const auto& entry : manifest.entries) {
        SequenceWithLabels item;
        item.seq = crowdtex::load_frame_sequence(base / entry.path);
        item.labels = crowdtex::labels_from_intervals(entry.intervals, item.seq.frame_count());
        out.push_back(std::move(item));
    }
    return out;
}

void write_model_file(const fs::path& path, const crowdtex::GaussianModel& model,
                      double threshold, const PipelineFlags& pipeline) {
    json doc = crowdtex::gaussian_model_to_json(model);
    doc["threshold"] = threshold;
    doc["pipeline"] = pipeline.to_json();
    atomic_write_file(path, doc.dump(2) + "\n");
}

// ---- synth ----------------------------------------------------------------

void run_synth(const SynthFlags& synth, std::uint64_t seed, const fs::path& out_dir) {
    synth.validate();
    const auto [seq, labels] = crowdtex::generate_synthetic_sequence(synth.config, seed);
    crowdtex::write_frame_sequence(seq, out_dir / "frames");

    crowdtex::ManifestEntry entry;
    entry.path = "frames";
    entry.scene = "synthetic-seed-" + std::to_string(seed);
    if (synth.config.dispersal_frame > 0) {
        entry.intervals.push_back({0, synth.config.dispersal_frame, crowdtex::FrameLabel::Normal});
    }
    entry.intervals.push_back({synth.config.dispersal_frame, synth.config.n_frames,
                               crowdtex::FrameLabel::Abnormal});
    crowdtex::DatasetManifest manifest;
    manifest.entries.push_back(std::move(entry));
    crowdtex::write_manifest(manifest, out_dir / "manifest.json");

    std::cout << "wrote " << seq.frame_count() << " frames and manifest.json under "
              << out_dir.string() << "\n";
}

// ---- train ----------------------------------------------------------------

void run_train(const fs::path& manifest_path, PipelineFlags& pipeline, const fs::path& out) {
    crowdtex::validate_pipeline_config(pipeline.config);
    const auto sequences = load_labeled_sequences(manifest_path);

    std::vector<Eigen::MatrixXd> batches;
    Eigen::Index total = 0;
    for (const auto& item : sequences) {
        batches.push_back(
            crowdtex::normal_training_features(item.seq, item.labels, pipeline.config));
        total += batches.back().rows();
    }
    Eigen::MatrixXd features(total, pipeline.config.feature_dim());
    Eigen::Index offset = 0;
    for (const auto& batch : batches) {
        features.middleRows(offset, batch.rows()) = batch;
        offset += batch.rows();
    }

    const crowdtex::GaussianModel model = crowdtex::fit_gaussian(features);
    const double threshold =
        crowdtex::calibrate_threshold(model, features, pipeline.config.percentile);
    write_model_file(out, model, threshold, pipeline);
    std::cout << "trained on " << model.m << " cubes (dim " << model.dim << "), threshold "
              << format_double(threshold) << ", model written to " << out.string() << "\n";
}

// ---- score ----------------------------------------------------------------

void run_score(const fs::path& manifest_path, const fs::path& model_path, PipelineFlags& pipeline,
               const fs::path& out, const std::optional<fs::path>& overlay_dir) {
    const json doc = load_json_file(model_path, "model file");
    const crowdtex::GaussianModel model = crowdtex::gaussian_model_from_json(doc);
    if (!doc.contains("threshold")) {
        throw crowdtex::DataError("model file has no threshold: " + model_path.string());
    }
    const double threshold = doc.at("threshold").get<double>();
    pipeline.apply_model_defaults(doc);
    crowdtex::validate_pipeline_config(pipeline.config);
    if (model.dim != pipeline.config.feature_dim()) {
        throw crowdtex::DataError(
            "model dimension " + std::to_string(model.dim) + " does not match state-dim " +
            std::to_string(pipeline.config.state_dim) + " (expected dim state-dim + 4)");
    }

    const auto sequences = load_labeled_sequences(manifest_path);
    std::string csv = "frame,score_max,is_anomalous\n";
    int frame_base = 0;
    for (const auto& item : sequences) {
        const crowdtex::FrameScores scores =
            crowdtex::score_sequence(item.seq, model, threshold, pipeline.config);
        for (std::size_t t = 0; t < scores.score_max.size(); ++t) {
            csv += std::to_string(frame_base + static_cast<int>(t));
            csv += ',';
            csv += format_double(scores.score_max[t]);
            csv += ',';
            csv += scores.is_anomalous[t] ? '1' : '0';
            csv += '\n';
        }
        if (overlay_dir) {
            crowdtex::FrameSequence overlay = item.seq;
            for (const auto& cube : scores.cubes) {
                if (!cube.anomalous) {
                    continue;
                }
                for (int dt = 0; dt < pipeline.config.cube.q; ++dt) {
                    for (int dy = 0; dy < pipeline.config.cube.p; ++dy) {
                        for (int dx = 0; dx < pipeline.config.cube.p; ++dx) {
                            overlay.at(cube.origin.t + dt, cube.origin.x + dx,
                                       cube.origin.y + dy) = 1.0;
                        }
                    }
                }
            }
            fs::create_directories(*overlay_dir);
            char name[32];
            for (int t = 0; t < overlay.frame_count(); ++t) {
                // frame numbering matches the CSV across manifest entries
                std::snprintf(name, sizeof(name), "frame_%06d.pgm", frame_base + t);
                crowdtex::write_pgm(overlay.frames[static_cast<std::size_t>(t)], overlay.width,
                                    overlay.height, *overlay_dir / name);
            }
        }
        frame_base += item.seq.frame_count();
    }
    atomic_write_file(out, csv);
    std::cout << "scored " << frame_base << " frames, decisions written to " << out.string()
              << "\n";
}

// ---- merge ----------------------------------------------------------------

void run_merge(const fs::path& model_path, const fs::path& manifest_path,
               PipelineFlags& pipeline, const fs::path& out) {
    const json doc = load_json_file(model_path, "model file");
    const crowdtex::GaussianModel model_a = crowdtex::gaussian_model_from_json(doc);
    pipeline.apply_model_defaults(doc);
    crowdtex::validate_pipeline_config(pipeline.config);
    if (model_a.dim != pipeline.config.feature_dim()) {
        throw crowdtex::DataError("model dimension " + std::to_string(model_a.dim) +
                                  " does not match state-dim " +
                                  std::to_string(pipeline.config.state_dim));
    }

    const auto sequences = load_labeled_sequences(manifest_path);
    std::vector<Eigen::MatrixXd> batches;
    Eigen::Index total = 0;
    for (const auto& item : sequences) {
        batches.push_back(
            crowdtex::normal_training_features(item.seq, item.labels, pipeline.config));
        total += batches.back().rows();
    }
    Eigen::MatrixXd b_features(total, pipeline.config.feature_dim());
    Eigen::Index offset = 0;
    for (const auto& batch : batches) {
        b_features.middleRows(offset, batch.rows()) = batch;
        offset += batch.rows();
    }

    const crowdtex::GaussianModel merged = crowdtex::merge_models(model_a, b_features);
    // the threshold is carried over; recalibrate via `train` if needed
    const double threshold = doc.contains("threshold") ? doc.at("threshold").get<double>() : 0.0;
    write_model_file(out, merged, threshold, pipeline);
    std::cout << "merged " << model_a.m << " + " << total << " samples -> m = " << merged.m
              << ", model written to " << out.string() << "\n";
}

// ---- train-clf ------------------------------------------------------------

void run_train_clf(const fs::path& manifest_path, PipelineFlags& pipeline,
                   const crowdtex::TrainConfig& train_config, const fs::path& out) {
    crowdtex::validate_pipeline_config(pipeline.config);
    const auto sequences = load_labeled_sequences(manifest_path);

    // A cube inherits Abnormal if any frame it spans is Abnormal, mirroring
    // the frame-attribution rule used for scoring.
    std::vector<crowdtex::TrainingExample> data;
    for (const auto& item : sequences) {
        const crowdtex::SequenceFeatures features =
            crowdtex::compute_features(item.seq, pipeline.config);
        for (std::size_t i = 0; i < features.origins.size(); ++i) {
            bool abnormal = false;
            for (int dt = 0; dt < pipeline.config.cube.q; ++dt) {
                if (item.labels[static_cast<std::size_t>(features.origins[i].t + dt)] ==
                    crowdtex::FrameLabel::Abnormal) {
                    abnormal = true;
                    break;
                }
            }
            data.emplace_back(features.rows.row(static_cast<Eigen::Index>(i)).transpose(),
                              abnormal ? "abnormal" : "normal");
        }
    }
    if (data.empty()) {
        throw crowdtex::DataError("no cubes to train the classifier on");
    }

    const crowdtex::MaxEntModel model =
        crowdtex::train_maxent(data, {"normal", "abnormal"}, train_config);
    std::size_t correct = 0;
    for (const auto& [x, y] : data) {
        if (crowdtex::predict(model, x) == y) {
            ++correct;
        }
    }
    atomic_write_file(out, crowdtex::maxent_model_to_json(model).dump(2) + "\n");
    std::cout << "classifier trained on " << data.size() << " cubes, training accuracy "
              << format_double(100.0 * static_cast<double>(correct) /
                               static_cast<double>(data.size()))
              << "%, written to " << out.string() << "\n";
}

// ---- eval -----------------------------------------------------------------

void run_eval(const std::optional<fs::path>& manifest_path, const SynthFlags& synth,
              PipelineFlags& pipeline, int n_runs, std::uint64_t base_seed,
              const fs::path& out_prefix) {
    crowdtex::validate_pipeline_config(pipeline.config);

    crowdtex::EvalReport report;
    if (manifest_path) {
        const crowdtex::DatasetManifest manifest = crowdtex::load_manifest(*manifest_path);
        const fs::path base = manifest_path->has_parent_path() ? manifest_path->parent_path()
                                                               : fs::path(".");
        report = crowdtex::evaluate_runs(manifest, base, pipeline.config);
    } else {
        synth.validate();
        if (n_runs < 1) {
            throw CLI::ValidationError("--runs must be >= 1");
        }
        report = crowdtex::evaluate_runs(synth.config, pipeline.config, n_runs, base_seed);
    }

    const fs::path csv_path = out_prefix.string() + ".csv";
    const fs::path json_path = out_prefix.string() + ".json";
    atomic_write_file(csv_path, crowdtex::report_to_csv(report));
    atomic_write_file(json_path, crowdtex::report_to_json(report).dump(2) + "\n");

    for (const auto& run : report.runs) {
        std::cout << "run " << run.run_id << ": accuracy " << format_double(run.accuracy)
                  << "% (tp=" << run.confusion.tp << " fp=" << run.confusion.fp
                  << " tn=" << run.confusion.tn << " fn=" << run.confusion.fn << ")\n";
    }
    std::cout << "average accuracy: " << format_double(report.average_accuracy) << "%\n";
    std::cout << "report written to " << csv_path.string() << " and " << json_path.string()
              << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crowd-anomaly detection over spatio-temporal dynamic textures"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled sequence");
    SynthFlags synth_flags;
    synth_flags.attach(synth_cmd);
    std::uint64_t synth_seed = 7;
    fs::path synth_out;
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->callback([&] { run_synth(synth_flags, synth_seed, synth_out); });

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit the Gaussian normalcy model");
    PipelineFlags train_pipeline;
    train_pipeline.attach(train_cmd);
    fs::path train_manifest, train_out;
    train_cmd->add_option("--manifest", train_manifest, "Dataset manifest JSON")->required();
    train_cmd->add_option("--out", train_out, "Model output path")->required();
    train_cmd->callback([&] { run_train(train_manifest, train_pipeline, train_out); });

    // score
    auto* score_cmd = app.add_subcommand("score", "Score sequences against a trained model");
    PipelineFlags score_pipeline;
    score_pipeline.attach(score_cmd);
    fs::path score_manifest, score_model, score_out;
    std::optional<fs::path> overlay_dir;
    fs::path overlay_opt;
    score_cmd->add_option("--manifest", score_manifest, "Dataset manifest JSON")->required();
    score_cmd->add_option("--model", score_model, "Trained model JSON")->required();
    score_cmd->add_option("--out", score_out, "Per-frame decision CSV output")->required();
    auto* overlay_flag = score_cmd->add_option("--overlay-dir", overlay_opt,
                                               "Write PGM overlays highlighting anomalous cubes");
    score_cmd->callback([&] {
        if (overlay_flag->count() > 0) {
            overlay_dir = overlay_opt;
        }
        run_score(score_manifest, score_model, score_pipeline, score_out, overlay_dir);
    });

    // merge
    auto* merge_cmd = app.add_subcommand("merge", "Merge a model with a new feature batch");
    PipelineFlags merge_pipeline;
    merge_pipeline.attach(merge_cmd);
    fs::path merge_model, merge_manifest, merge_out;
    merge_cmd->add_option("--model", merge_model, "Existing model JSON")->required();
    merge_cmd->add_option("--manifest", merge_manifest, "Manifest for the new batch")->required();
    merge_cmd->add_option("--out", merge_out, "Merged model output path")->required();
    merge_cmd->callback(
        [&] { run_merge(merge_model, merge_manifest, merge_pipeline, merge_out); });

    // train-clf
    auto* clf_cmd = app.add_subcommand("train-clf", "Train the log-linear event classifier");
    PipelineFlags clf_pipeline;
    clf_pipeline.attach(clf_cmd);
    crowdtex::TrainConfig clf_config;
    fs::path clf_manifest, clf_out;
    clf_cmd->add_option("--manifest", clf_manifest, "Dataset manifest JSON")->required();
    clf_cmd->add_option("--out", clf_out, "Classifier output path")->required();
    clf_cmd->add_option("--lr", clf_config.learning_rate, "Learning rate");
    clf_cmd->add_option("--epochs", clf_config.epochs, "Gradient-ascent epochs");
    clf_cmd->add_option("--l2", clf_config.l2, "L2 regularization coefficient");
    clf_cmd->callback([&] { run_train_clf(clf_manifest, clf_pipeline, clf_config, clf_out); });

    // eval
    auto* eval_cmd = app.add_subcommand(
        "eval", "Run the end-to-end accuracy protocol (synthetic runs or manifest entries)");
    PipelineFlags eval_pipeline;
    eval_pipeline.attach(eval_cmd);
    SynthFlags eval_synth;
    eval_synth.attach(eval_cmd);
    int eval_runs = 10;
    std::uint64_t eval_seed = 1;
    fs::path eval_out;
    fs::path eval_manifest_opt;
    auto* eval_manifest_flag = eval_cmd->add_option(
        "--manifest", eval_manifest_opt, "Evaluate manifest entries (one run per entry) "
                                         "instead of synthetic sequences");
    eval_cmd->add_option("--runs", eval_runs, "Number of synthetic runs (synthetic mode only)");
    eval_cmd->add_option("--seed", eval_seed, "Base seed; run r uses seed + r");
    eval_cmd->add_option("--out", eval_out, "Report path prefix (writes .csv and .json)")
        ->required();
    eval_cmd->callback([&] {
        std::optional<fs::path> manifest;
        if (eval_manifest_flag->count() > 0) {
            manifest = eval_manifest_opt;
        }
        run_eval(manifest, eval_synth, eval_pipeline, eval_runs, eval_seed, eval_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const crowdtex::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const crowdtex::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
