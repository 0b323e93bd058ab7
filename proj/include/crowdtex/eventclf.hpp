#ifndef CROWDTEX_EVENTCLF_HPP
#define CROWDTEX_EVENTCLF_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace crowdtex {

// Log-linear event classifier p(y|x;w) proportional to exp(w . F(x,y)).
// F(x,y) is the conjunction embedding: one (input_dim + 1)-sized block per
// label holding [x; 1] in the block of y and zeros elsewhere, so
// J = |labels| * (input_dim + 1). input_dim = 0 gives a bias-only model.
struct MaxEntModel {
    std::vector<std::string> labels; // ordered label set Y
    int input_dim = 0;               // D
    Eigen::VectorXd w;               // length J

    int block_size() const { return input_dim + 1; }
    int weight_count() const { return static_cast<int>(labels.size()) * block_size(); }
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 100;
    double l2 = 0.0;
    std::uint64_t seed = 0; // reserved; full-batch training is deterministic
};

using TrainingExample = std::pair<Eigen::VectorXd, std::string>;

// Zero-weight model over the given label set.
MaxEntModel make_maxent_model(std::vector<std::string> labels, int input_dim);

// Explicit conjunction-embedding feature vector F(x, y), length J.
Eigen::VectorXd maxent_features(const MaxEntModel& model, const Eigen::VectorXd& x,
                                std::size_t label_index);

// Softmax over per-label scores, computed with max subtraction. Sums to 1
// within 1e-12.
Eigen::VectorXd label_probs(const MaxEntModel& model, const Eigen::VectorXd& x);

// d/dw log p(y|x;w) = F(x,y) - sum_y' p(y'|x;w) F(x,y').
Eigen::VectorXd gradient(const MaxEntModel& model, const Eigen::VectorXd& x,
                         const std::string& y);

// Full-batch gradient ascent from w = 0:
//   w <- w + lr * (sum_i gradient(x_i, y_i) - l2 * w)
// for config.epochs iterations, in data order; no shuffling.
MaxEntModel train_maxent(const std::vector<TrainingExample>& data,
                         std::vector<std::string> labels, const TrainConfig& config);

// argmax_y p(y|x), ties broken by label order.
std::string predict(const MaxEntModel& model, const Eigen::VectorXd& x);

nlohmann::json maxent_model_to_json(const MaxEntModel& model);
MaxEntModel maxent_model_from_json(const nlohmann::json& doc);

} // namespace crowdtex

#endif
