#include "crowdtex/eventclf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "crowdtex/errors.hpp"

namespace crowdtex {

namespace {

using nlohmann::json;

constexpr int kClfSchemaVersion = 1;

std::size_t label_index(const MaxEntModel& model, const std::string& y) {
    const auto it = std::find(model.labels.begin(), model.labels.end(), y);
    if (it == model.labels.end()) {
        throw std::invalid_argument("unknown label \"" + y + "\"");
    }
    return static_cast<std::size_t>(it - model.labels.begin());
}

void check_input(const MaxEntModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim) {
        throw std::invalid_argument("feature vector dimension " + std::to_string(x.size()) +
                                    " does not match classifier input_dim " +
                                    std::to_string(model.input_dim));
    }
    if (!x.allFinite()) {
        throw NumericError("classifier input has non-finite values");
    }
}

// Per-label linear scores w . F(x, y); with the conjunction embedding this is
// the y-th weight block dotted with [x; 1].
Eigen::VectorXd label_scores(const MaxEntModel& model, const Eigen::VectorXd& x) {
    const int bs = model.block_size();
    Eigen::VectorXd scores(static_cast<Eigen::Index>(model.labels.size()));
    for (std::size_t k = 0; k < model.labels.size(); ++k) {
        const auto offset = static_cast<Eigen::Index>(k) * bs;
        double s = model.w(offset + model.input_dim); // bias
        if (model.input_dim > 0) {
            s += model.w.segment(offset, model.input_dim).dot(x);
        }
        scores(static_cast<Eigen::Index>(k)) = s;
    }
    return scores;
}

} // namespace

MaxEntModel make_maxent_model(std::vector<std::string> labels, int input_dim) {
    if (labels.size() < 2) {
        throw std::invalid_argument("classifier needs at least 2 labels");
    }
    if (input_dim < 0) {
        throw std::invalid_argument("classifier input_dim must be >= 0");
    }
    MaxEntModel model;
    model.labels = std::move(labels);
    model.input_dim = input_dim;
    model.w = Eigen::VectorXd::Zero(model.weight_count());
    return model;
}

Eigen::VectorXd maxent_features(const MaxEntModel& model, const Eigen::VectorXd& x,
                                std::size_t label_idx) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(model.weight_count());
    const auto offset = static_cast<Eigen::Index>(label_idx) * model.block_size();
    if (model.input_dim > 0) {
        f.segment(offset, model.input_dim) = x;
    }
    f(offset + model.input_dim) = 1.0;
    return f;
}

Eigen::VectorXd label_probs(const MaxEntModel& model, const Eigen::VectorXd& x) {
    check_input(model, x);
    Eigen::VectorXd scores = label_scores(model, x);
    const double top = scores.maxCoeff();
    Eigen::VectorXd probs = (scores.array() - top).exp();
    probs /= probs.sum();
    return probs;
}

Eigen::VectorXd gradient(const MaxEntModel& model, const Eigen::VectorXd& x,
                         const std::string& y) {
    const std::size_t yi = label_index(model, y);
    const Eigen::VectorXd probs = label_probs(model, x);

    // F(x,y) minus the probability-weighted feature expectation.
    Eigen::VectorXd g = maxent_features(model, x, yi);
    const int bs = model.block_size();
    for (std::size_t k = 0; k < model.labels.size(); ++k) {
        const auto offset = static_cast<Eigen::Index>(k) * bs;
        const double pk = probs(static_cast<Eigen::Index>(k));
        if (model.input_dim > 0) {
            g.segment(offset, model.input_dim) -= pk * x;
        }
        g(offset + model.input_dim) -= pk;
    }
    return g;
}

MaxEntModel train_maxent(const std::vector<TrainingExample>& data,
                         std::vector<std::string> labels, const TrainConfig& config) {
    if (data.empty()) {
        throw std::invalid_argument("train_maxent: empty training data");
    }
    if (config.learning_rate <= 0.0) {
        throw std::invalid_argument("train_maxent: learning_rate must be positive");
    }
    if (config.epochs <= 0) {
        throw std::invalid_argument("train_maxent: epochs must be positive");
    }
    if (config.l2 < 0.0) {
        throw std::invalid_argument("train_maxent: l2 must be >= 0");
    }

    MaxEntModel model = make_maxent_model(std::move(labels),
                                          static_cast<int>(data.front().first.size()));
    for (const auto& [x, y] : data) {
        check_input(model, x);
        label_index(model, y); // rejects labels outside Y up front
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.weight_count());
        for (const auto& [x, y] : data) {
            sum += gradient(model, x, y);
        }
        model.w += config.learning_rate * (sum - config.l2 * model.w);
    }
    return model;
}

std::string predict(const MaxEntModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd probs = label_probs(model, x);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probs.size(); ++k) {
        if (probs(k) > probs(best)) {
            best = k;
        }
    }
    return model.labels[static_cast<std::size_t>(best)];
}

json maxent_model_to_json(const MaxEntModel& model) {
    json doc;
    doc["schema_version"] = kClfSchemaVersion;
    doc["labels"] = model.labels;
    doc["w"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
    doc["feature_map"] = {{"input_dim", model.input_dim},
                          {"label_count", model.labels.size()}};
    return doc;
}

MaxEntModel maxent_model_from_json(const json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kClfSchemaVersion) {
            throw DataError("classifier schema_version " + std::to_string(version) +
                            " is not supported (want " + std::to_string(kClfSchemaVersion) + ")");
        }
        MaxEntModel model;
        model.labels = doc.at("labels").get<std::vector<std::string>>();
        model.input_dim = doc.at("feature_map").at("input_dim").get<int>();
        const auto w = doc.at("w").get<std::vector<double>>();
        const auto label_count = doc.at("feature_map").at("label_count").get<std::size_t>();
        if (model.labels.size() < 2 || model.labels.size() != label_count ||
            model.input_dim < 0 ||
            w.size() != static_cast<std::size_t>(model.weight_count())) {
            throw DataError("classifier document has inconsistent dimensions");
        }
        model.w = Eigen::Map<const Eigen::VectorXd>(w.data(),
                                                    static_cast<Eigen::Index>(w.size()));
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed classifier document: ") + e.what());
    }
}

} // namespace crowdtex
