#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thoughttree/featurizer.hpp"

namespace thoughttree {

struct ClassifierConfig {
  int hidden_size = 64;
  int num_layers = 2;   // attention layers
  int mlp_layers = 2;   // dense layers in the head, the last one has width 1
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int batch_size = 32;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  double negative_slope = 0.2;  // leaky-ReLU slope inside the attention score
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

void to_json(nlohmann::json& j, const ClassifierConfig& c);
void from_json(const nlohmann::json& j, ClassifierConfig& c);

// Named slice of the flat parameter vector.
struct ParameterBlock {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * cols; }
};

// Graph classifier: `num_layers` rounds of dynamic graph attention over the
// directed edge list plus a self-loop per node, mean pooling, and a dense
// head ending in a single logit.
//
// For each attention layer, with s_j = W_src x_j + b_src and
// d_i = W_dst x_i + b_dst, an edge j->i of category c scores
//     e_ij = a . leaky_relu(s_j + d_i + W_edge[:, c])
// (self-loops contribute no edge term), alpha is a softmax of e over the
// edges entering i, and the node update is relu(sum_j alpha_ij m_ij s_j + b)
// where m_ij is an optional per-edge mask used by the explainer (1 otherwise).
class TreeClassifier {
 public:
  TreeClassifier(ClassifierConfig config, int input_dim = kNodeFeatureCount);

  // Glorot-uniform weights, zero biases, drawn from `seed`.
  void initialize(std::uint64_t seed);

  const ClassifierConfig& config() const noexcept { return config_; }
  int input_dim() const noexcept { return input_dim_; }
  const std::vector<ParameterBlock>& layout() const noexcept { return layout_; }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }

  const NormalizationStats& stats() const noexcept { return stats_; }
  void set_stats(const NormalizationStats& s) { stats_ = s; }
  bool trained() const noexcept { return trained_; }
  void mark_trained(bool value = true) { trained_ = value; }

  // Logit for an already normalized sample. `tree_edge_mask`, when given,
  // has one weight per tree edge applied to both directions of that edge.
  double logit(const GraphSample& normalized, std::span<const double> tree_edge_mask = {}) const;
  // Probability of the positive class for an already normalized sample.
  double forward(const GraphSample& normalized) const;

  // Back-propagates d(loss)/d(logit) and accumulates parameter gradients into
  // `param_grad` (must be sized parameter_count()) and, when requested, the
  // per-tree-edge mask gradient into `mask_grad`. Returns the logit.
  double backward(const GraphSample& normalized, double dloss_dlogit, Eigen::VectorXd* param_grad,
                  std::span<const double> tree_edge_mask = {},
                  std::vector<double>* mask_grad = nullptr) const;

  // Binary cross-entropy for a label in {0, 1}, with its gradient accumulated
  // into `param_grad`. Returns the loss.
  double loss_and_gradient(const GraphSample& normalized, int label,
                           Eigen::VectorXd& param_grad) const;

  nlohmann::json to_json() const;
  static TreeClassifier from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TreeClassifier load(const std::filesystem::path& path);

  // Summary of the run that produced this model, stored in checkpoints.
  nlohmann::json training_summary = nlohmann::json::object();

 private:
  struct Cache;
  double run(const GraphSample& g, std::span<const double> mask, Cache* cache) const;
  void backprop(const GraphSample& g, const Cache& c, double dlogit, Eigen::VectorXd* param_grad,
                std::vector<double>* mask_grad) const;

  ClassifierConfig config_;
  int input_dim_;
  std::vector<ParameterBlock> layout_;
  Eigen::VectorXd params_;
  NormalizationStats stats_;
  bool trained_ = false;
};

// Stable sigmoid clamped to the open interval (0, 1).
double sigmoid(double x);

// Positive-class probability for a raw (unnormalized) sample.
double predict_score(const TreeClassifier& model, const GraphSample& raw);

enum class Verdict { Negative = 0, Positive = 1 };
// Positive iff score > threshold.
Verdict classify(double score, double threshold = 0.5);
Verdict classify(const TreeClassifier& model, const GraphSample& raw, double threshold = 0.5);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  double validation_loss = 0;
  double validation_accuracy = 0;
};

struct TrainingResult {
  TreeClassifier model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_validation_accuracy = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

// Trains on raw labeled samples: seeded 90/10 train/validation shuffle,
// normalization fitted on the train part, mini-batch Adam on mean binary
// cross-entropy, keeping the epoch with the best validation accuracy
// (earliest on ties).
TrainingResult train(std::span<const GraphSample> dataset, const ClassifierConfig& config);

// Fraction of samples whose verdict matches their label.
double accuracy(const TreeClassifier& model, std::span<const GraphSample> raw_samples,
                double threshold = 0.5);

// Univariate logistic regression on standardized response length.
struct LengthBaseline {
  double weight = 0;
  double bias = 0;
  double mean = 0;
  double stddev = 1;

  bool operator==(const LengthBaseline&) const = default;
};

struct LengthExample {
  double token_length = 0;
  int label = 0;
};

LengthBaseline train_length_baseline(std::span<const LengthExample> examples,
                                     int iterations = 2000, double learning_rate = 0.5);
double baseline_score(const LengthBaseline& model, double token_length);

void to_json(nlohmann::json& j, const LengthBaseline& b);
void from_json(const nlohmann::json& j, LengthBaseline& b);

}  // namespace thoughttree
