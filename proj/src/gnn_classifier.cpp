#include "thoughttree/gnn_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "thoughttree/error.hpp"
#include "thoughttree/rng.hpp"

namespace thoughttree {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "thoughttree-classifier";

// Blocks of one attention layer, in layout order.
enum LayerBlock { kWSrc, kBSrc, kWDst, kBDst, kWEdge, kAtt, kBias, kLayerBlocks };

}  // namespace

void ClassifierConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (hidden_size <= 0) fail("hidden_size must be positive");
  if (num_layers <= 0) fail("num_layers must be positive");
  if (mlp_layers <= 0) fail("mlp_layers must be positive");
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (max_epochs <= 0) fail("max_epochs must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(validation_fraction > 0 && validation_fraction < 1)) {
    fail("validation_fraction must lie in (0, 1)");
  }
}

void to_json(nlohmann::json& j, const ClassifierConfig& c) {
  j = {{"hidden_size", c.hidden_size},
       {"num_layers", c.num_layers},
       {"mlp_layers", c.mlp_layers},
       {"learning_rate", c.learning_rate},
       {"max_epochs", c.max_epochs},
       {"batch_size", c.batch_size},
       {"validation_fraction", c.validation_fraction},
       {"seed", c.seed},
       {"negative_slope", c.negative_slope},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_epsilon", c.adam_epsilon}};
}

void from_json(const nlohmann::json& j, ClassifierConfig& c) {
  const ClassifierConfig d;
  c.hidden_size = j.value("hidden_size", d.hidden_size);
  c.num_layers = j.value("num_layers", d.num_layers);
  c.mlp_layers = j.value("mlp_layers", d.mlp_layers);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.validation_fraction = j.value("validation_fraction", d.validation_fraction);
  c.seed = j.value("seed", d.seed);
  c.negative_slope = j.value("negative_slope", d.negative_slope);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", d.adam_epsilon);
}

double sigmoid(double x) {
  const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  constexpr double kLo = std::numeric_limits<double>::min();
  constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return std::clamp(p, kLo, kHi);
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

TreeClassifier::TreeClassifier(ClassifierConfig config, int input_dim)
    : config_(std::move(config)), input_dim_(input_dim) {
  config_.validate();
  if (input_dim_ <= 0) throw Error(ErrorCode::ConfigError, "input_dim must be positive");

  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    layout_.push_back({std::move(name), offset, rows, cols});
    offset += static_cast<std::size_t>(rows) * cols;
  };
  const int h = config_.hidden_size;
  for (int l = 0; l < config_.num_layers; ++l) {
    const int in = l == 0 ? input_dim_ : h;
    const std::string p = "gat" + std::to_string(l) + ".";
    add(p + "w_src", h, in);
    add(p + "b_src", h, 1);
    add(p + "w_dst", h, in);
    add(p + "b_dst", h, 1);
    add(p + "w_edge", h, kEdgeCategoryCount);
    add(p + "att", h, 1);
    add(p + "bias", h, 1);
  }
  for (int k = 0; k < config_.mlp_layers; ++k) {
    const int out = k + 1 == config_.mlp_layers ? 1 : h;
    add("mlp" + std::to_string(k) + ".w", out, h);
    add("mlp" + std::to_string(k) + ".b", out, 1);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
  stats_.stddev.fill(1.0);
}

void TreeClassifier::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& b : layout_) {
    const bool is_bias = b.cols == 1 && b.name.find("att") == std::string::npos;
    double* data = params_.data() + b.offset;
    if (is_bias) {
      std::fill(data, data + b.size(), 0.0);
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    for (std::size_t k = 0; k < b.size(); ++k) data[k] = rng.uniform(-limit, limit);
  }
}

struct TreeClassifier::Cache {
  struct Layer {
    RowMat input;  // n x d_in
    RowMat src;    // n x H
    RowMat dst;    // n x H
    RowMat z;      // messages x H, pre-activation attention features
    Eigen::VectorXd alpha;
    RowMat pre;    // n x H, before the ReLU
  };
  // Messages sorted by destination; self-loops have category -1 and mask -1.
  std::vector<std::size_t> msg_src, msg_dst;
  std::vector<int> msg_cat, msg_mask;
  std::vector<std::size_t> group_begin;  // n + 1 offsets into the messages
  std::vector<double> mask_value;
  std::vector<Layer> layers;
  Eigen::VectorXd pooled;
  std::vector<Eigen::VectorXd> mlp_in;
  std::vector<Eigen::VectorXd> mlp_pre;
};

double TreeClassifier::run(const GraphSample& g, std::span<const double> mask, Cache* cache) const {
  const auto n = static_cast<std::size_t>(g.node_features.rows());
  if (g.node_features.cols() != input_dim_) {
    throw Error(ErrorCode::ShapeError, "sample has " + std::to_string(g.node_features.cols()) +
                                           " feature columns, model expects " +
                                           std::to_string(input_dim_));
  }
  if (n == 0) throw Error(ErrorCode::ShapeError, "sample has no nodes");
  if (!mask.empty() && mask.size() != g.num_tree_edges()) {
    throw Error(ErrorCode::ShapeError, "edge mask has " + std::to_string(mask.size()) +
                                           " entries for " + std::to_string(g.num_tree_edges()) +
                                           " tree edges");
  }

  Cache local;
  Cache& c = cache ? *cache : local;

  // Counting sort of messages by destination: self-loop first, then the
  // directed edges in input order.
  const std::size_t m = n + g.edges.size();
  c.group_begin.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) c.group_begin[i + 1] = 1;
  for (const auto& e : g.edges) {
    if (e.src >= n || e.dst >= n) throw Error(ErrorCode::ShapeError, "edge endpoint out of range");
    ++c.group_begin[e.dst + 1];
  }
  std::partial_sum(c.group_begin.begin(), c.group_begin.end(), c.group_begin.begin());
  c.msg_src.assign(m, 0);
  c.msg_dst.assign(m, 0);
  c.msg_cat.assign(m, -1);
  c.msg_mask.assign(m, -1);
  std::vector<std::size_t> fill(c.group_begin.begin(), c.group_begin.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = fill[i]++;
    c.msg_src[k] = i;
    c.msg_dst[k] = i;
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& de = g.edges[e];
    const std::size_t k = fill[de.dst]++;
    c.msg_src[k] = de.src;
    c.msg_dst[k] = de.dst;
    c.msg_cat[k] = edge_category(de.code);
    c.msg_mask[k] = static_cast<int>(e / 2);
  }
  c.mask_value.assign(m, 1.0);
  if (!mask.empty()) {
    for (std::size_t k = 0; k < m; ++k) {
      if (c.msg_mask[k] >= 0) c.mask_value[k] = mask[static_cast<std::size_t>(c.msg_mask[k])];
    }
  }

  const int h = config_.hidden_size;
  const double slope = config_.negative_slope;
  c.layers.assign(static_cast<std::size_t>(config_.num_layers), {});
  RowMat x = g.node_features;
  for (int l = 0; l < config_.num_layers; ++l) {
    const auto* blocks = &layout_[static_cast<std::size_t>(l) * kLayerBlocks];
    auto block = [&](int b) {
      const auto& pb = blocks[b];
      return ConstMap(params_.data() + pb.offset, pb.rows, pb.cols);
    };
    auto& L = c.layers[static_cast<std::size_t>(l)];
    L.input = std::move(x);
    L.src = L.input * block(kWSrc).transpose();
    L.src.rowwise() += block(kBSrc).col(0).transpose();
    L.dst = L.input * block(kWDst).transpose();
    L.dst.rowwise() += block(kBDst).col(0).transpose();

    const auto w_edge = block(kWEdge);
    const Eigen::VectorXd att = block(kAtt).col(0);
    L.z.resize(static_cast<Eigen::Index>(m), h);
    Eigen::VectorXd score(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
      auto zk = L.z.row(static_cast<Eigen::Index>(k));
      zk = L.src.row(static_cast<Eigen::Index>(c.msg_src[k])) +
           L.dst.row(static_cast<Eigen::Index>(c.msg_dst[k]));
      if (c.msg_cat[k] >= 0) zk += w_edge.col(c.msg_cat[k]).transpose();
      double s = 0;
      for (int d = 0; d < h; ++d) {
        const double v = zk(d);
        s += att(d) * (v > 0 ? v : slope * v);
      }
      score(static_cast<Eigen::Index>(k)) = s;
    }

    L.alpha.resize(static_cast<Eigen::Index>(m));
    L.pre.resize(static_cast<Eigen::Index>(n), h);
    const auto bias = block(kBias).col(0).transpose();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t b = c.group_begin[i], e = c.group_begin[i + 1];
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = b; k < e; ++k) top = std::max(top, score(static_cast<Eigen::Index>(k)));
      double total = 0;
      for (std::size_t k = b; k < e; ++k) {
        const double w = std::exp(score(static_cast<Eigen::Index>(k)) - top);
        L.alpha(static_cast<Eigen::Index>(k)) = w;
        total += w;
      }
      auto out = L.pre.row(static_cast<Eigen::Index>(i));
      out = bias;
      for (std::size_t k = b; k < e; ++k) {
        const double a = L.alpha(static_cast<Eigen::Index>(k)) / total;
        L.alpha(static_cast<Eigen::Index>(k)) = a;
        out += (a * c.mask_value[k]) * L.src.row(static_cast<Eigen::Index>(c.msg_src[k]));
      }
    }
    x = L.pre.cwiseMax(0.0);
  }

  c.pooled = x.colwise().mean().transpose();
  c.mlp_in.clear();
  c.mlp_pre.clear();
  Eigen::VectorXd act = c.pooled;
  const std::size_t head = static_cast<std::size_t>(config_.num_layers) * kLayerBlocks;
  for (int k = 0; k < config_.mlp_layers; ++k) {
    const auto& wb = layout_[head + 2 * static_cast<std::size_t>(k)];
    const auto& bb = layout_[head + 2 * static_cast<std::size_t>(k) + 1];
    const ConstMap w(params_.data() + wb.offset, wb.rows, wb.cols);
    const ConstMap bias(params_.data() + bb.offset, bb.rows, bb.cols);
    c.mlp_in.push_back(act);
    Eigen::VectorXd pre = w * act + bias.col(0);
    c.mlp_pre.push_back(pre);
    act = k + 1 == config_.mlp_layers ? pre : Eigen::VectorXd(pre.cwiseMax(0.0));
  }
  return act(0);
}

double TreeClassifier::logit(const GraphSample& normalized, std::span<const double> mask) const {
  return run(normalized, mask, nullptr);
}

double TreeClassifier::forward(const GraphSample& normalized) const {
  return sigmoid(logit(normalized));
}

double TreeClassifier::backward(const GraphSample& g, double dlogit, Eigen::VectorXd* param_grad,
                                std::span<const double> mask, std::vector<double>* mask_grad) const {
  Cache c;
  const double out = run(g, mask, &c);
  backprop(g, c, dlogit, param_grad, mask_grad);
  return out;
}

void TreeClassifier::backprop(const GraphSample& g, const Cache& c, double dlogit,
                              Eigen::VectorXd* param_grad, std::vector<double>* mask_grad) const {
  if (param_grad && param_grad->size() != params_.size()) {
    throw Error(ErrorCode::ShapeError, "gradient buffer has the wrong size");
  }
  if (mask_grad) mask_grad->assign(g.num_tree_edges(), 0.0);

  Eigen::VectorXd scratch;
  if (!param_grad) {
    scratch = Eigen::VectorXd::Zero(params_.size());
    param_grad = &scratch;
  }
  auto grad_block = [&](const ParameterBlock& pb) {
    return MutMap(param_grad->data() + pb.offset, pb.rows, pb.cols);
  };
  auto param_block = [&](const ParameterBlock& pb) {
    return ConstMap(params_.data() + pb.offset, pb.rows, pb.cols);
  };

  // Dense head, last layer first.
  const std::size_t head = static_cast<std::size_t>(config_.num_layers) * kLayerBlocks;
  Eigen::VectorXd dpre = Eigen::VectorXd::Constant(1, dlogit);
  Eigen::VectorXd dact;
  for (int k = config_.mlp_layers - 1; k >= 0; --k) {
    const auto& wb = layout_[head + 2 * static_cast<std::size_t>(k)];
    const auto& bb = layout_[head + 2 * static_cast<std::size_t>(k) + 1];
    grad_block(wb) += dpre * c.mlp_in[static_cast<std::size_t>(k)].transpose();
    grad_block(bb).col(0) += dpre;
    dact = param_block(wb).transpose() * dpre;
    if (k > 0) {
      const auto& prev_pre = c.mlp_pre[static_cast<std::size_t>(k) - 1];
      dpre = dact.array() * (prev_pre.array() > 0).cast<double>();
    }
  }

  const auto n = static_cast<Eigen::Index>(g.node_features.rows());
  const int h = config_.hidden_size;
  const double slope = config_.negative_slope;
  // Mean pooling spreads the pooled gradient evenly over the nodes.
  RowMat dx = (dact / static_cast<double>(n)).transpose().replicate(n, 1);

  for (int l = config_.num_layers - 1; l >= 0; --l) {
    const auto* blocks = &layout_[static_cast<std::size_t>(l) * kLayerBlocks];
    const auto& L = c.layers[static_cast<std::size_t>(l)];
    const Eigen::VectorXd att = param_block(blocks[kAtt]).col(0);

    const RowMat dpre_nodes = dx.array() * (L.pre.array() > 0).cast<double>();
    grad_block(blocks[kBias]).col(0) += dpre_nodes.colwise().sum().transpose();

    RowMat dsrc = RowMat::Zero(n, h);
    RowMat ddst = RowMat::Zero(n, h);
    auto gw_edge = grad_block(blocks[kWEdge]);
    auto gatt = grad_block(blocks[kAtt]).col(0);
    const std::size_t m = c.msg_src.size();
    std::vector<double> dalpha(m);

    for (std::size_t k = 0; k < m; ++k) {
      const auto i = static_cast<Eigen::Index>(c.msg_dst[k]);
      const auto j = static_cast<Eigen::Index>(c.msg_src[k]);
      const double a = L.alpha(static_cast<Eigen::Index>(k));
      const double dot = dpre_nodes.row(i).dot(L.src.row(j));
      dalpha[k] = c.mask_value[k] * dot;
      dsrc.row(j) += (a * c.mask_value[k]) * dpre_nodes.row(i);
      if (mask_grad && c.msg_mask[k] >= 0) {
        (*mask_grad)[static_cast<std::size_t>(c.msg_mask[k])] += a * dot;
      }
    }

    Eigen::RowVectorXd dz(h);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t b = c.group_begin[static_cast<std::size_t>(i)];
      const std::size_t e = c.group_begin[static_cast<std::size_t>(i) + 1];
      double weighted = 0;
      for (std::size_t k = b; k < e; ++k) weighted += L.alpha(static_cast<Eigen::Index>(k)) * dalpha[k];
      for (std::size_t k = b; k < e; ++k) {
        const double dscore = L.alpha(static_cast<Eigen::Index>(k)) * (dalpha[k] - weighted);
        const auto zk = L.z.row(static_cast<Eigen::Index>(k));
        for (int d = 0; d < h; ++d) {
          const double v = zk(d);
          gatt(d) += dscore * (v > 0 ? v : slope * v);
          dz(d) = dscore * att(d) * (v > 0 ? 1.0 : slope);
        }
        dsrc.row(static_cast<Eigen::Index>(c.msg_src[k])) += dz;
        ddst.row(i) += dz;
        if (c.msg_cat[k] >= 0) gw_edge.col(c.msg_cat[k]) += dz.transpose();
      }
    }

    grad_block(blocks[kWSrc]) += dsrc.transpose() * L.input;
    grad_block(blocks[kBSrc]).col(0) += dsrc.colwise().sum().transpose();
    grad_block(blocks[kWDst]) += ddst.transpose() * L.input;
    grad_block(blocks[kBDst]).col(0) += ddst.colwise().sum().transpose();
    if (l > 0) {
      dx = dsrc * param_block(blocks[kWSrc]) + ddst * param_block(blocks[kWDst]);
    }
  }
}

double TreeClassifier::loss_and_gradient(const GraphSample& normalized, int label,
                                         Eigen::VectorXd& param_grad) const {
  Cache c;
  const double z = run(normalized, {}, &c);
  const double y = label ? 1.0 : 0.0;
  // d/dz of softplus(z) - y z
  backprop(normalized, c, sigmoid(z) - y, &param_grad, nullptr);
  return softplus(z) - y * z;
}

nlohmann::json TreeClassifier::to_json() const {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& b : layout_) {
    layout.push_back({{"name", b.name}, {"offset", b.offset}, {"rows", b.rows}, {"cols", b.cols}});
  }
  std::vector<double> flat(params_.data(), params_.data() + params_.size());
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", config_},
          {"input_dim", input_dim_},
          {"layout", std::move(layout)},
          {"parameters", std::move(flat)},
          {"normalization", stats_},
          {"trained", trained_},
          {"training", training_summary}};
}

TreeClassifier TreeClassifier::from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != kCheckpointFormat) {
      throw Error(ErrorCode::ParseError, "not a classifier checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::ParseError,
                  "unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    TreeClassifier model(j.at("config").get<ClassifierConfig>(), j.at("input_dim").get<int>());
    const auto flat = j.at("parameters").get<std::vector<double>>();
    if (flat.size() != model.parameter_count()) {
      throw Error(ErrorCode::ShapeError, "checkpoint has " + std::to_string(flat.size()) +
                                             " parameters, config implies " +
                                             std::to_string(model.parameter_count()));
    }
    model.params_ = Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
    model.stats_ = j.at("normalization").get<NormalizationStats>();
    model.trained_ = j.value("trained", false);
    model.training_summary = j.value("training", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid checkpoint: ") + e.what());
  }
}

void TreeClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
  out << to_json().dump() << '\n';
}

TreeClassifier TreeClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return from_json(j);
}

double predict_score(const TreeClassifier& model, const GraphSample& raw) {
  if (!model.trained()) throw Error(ErrorCode::NotTrained, "the classifier has not been trained");
  GraphSample g = raw;
  g.node_features = model.stats().apply(raw.node_features);
  return model.forward(g);
}

Verdict classify(double score, double threshold) {
  return score > threshold ? Verdict::Positive : Verdict::Negative;
}

Verdict classify(const TreeClassifier& model, const GraphSample& raw, double threshold) {
  return classify(predict_score(model, raw), threshold);
}

double accuracy(const TreeClassifier& model, std::span<const GraphSample> raw_samples,
                double threshold) {
  if (raw_samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& g : raw_samples) {
    if (!g.label) throw Error(ErrorCode::IntegrityError, "sample " + g.sample_id + " has no label");
    const int predicted = static_cast<int>(classify(model, g, threshold));
    correct += predicted == *g.label;
  }
  return static_cast<double>(correct) / static_cast<double>(raw_samples.size());
}

TrainingResult train(std::span<const GraphSample> dataset, const ClassifierConfig& config) {
  config.validate();
  if (dataset.size() < 10) {
    throw Error(ErrorCode::DegenerateDataset,
                "need at least 10 samples, got " + std::to_string(dataset.size()));
  }
  std::size_t positives = 0;
  for (const auto& g : dataset) {
    if (!g.label) throw Error(ErrorCode::IntegrityError, "sample " + g.sample_id + " has no label");
    positives += *g.label == 1;
  }
  if (positives == 0 || positives == dataset.size()) {
    throw Error(ErrorCode::DegenerateDataset, "training data contains a single class");
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  const auto val_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.validation_fraction * dataset.size())));
  std::vector<GraphSample> validation_raw, train_raw;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < val_count ? validation_raw : train_raw).push_back(dataset[order[k]]);
  }

  const auto stats = NormalizationStats::fit(train_raw);
  auto [train_set, unused_stats] = normalize(train_raw, stats);
  auto [validation_set, unused_stats2] = normalize(validation_raw, stats);

  TrainingResult result{TreeClassifier(config), {}, 0, -1.0, train_set.size(), validation_set.size()};
  TreeClassifier& model = result.model;
  model.initialize(rng.next_u64());
  model.set_stats(stats);
  TreeClassifier best = model;

  const auto p = static_cast<Eigen::Index>(model.parameter_count());
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p), m2 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  std::int64_t step = 0;

  auto evaluate = [&](std::span<const GraphSample> set, double& loss, double& acc) {
    loss = 0;
    std::size_t correct = 0;
    for (const auto& g : set) {
      const double z = model.logit(g);
      const double y = *g.label;
      loss += softplus(z) - y * z;
      correct += static_cast<int>(classify(sigmoid(z))) == *g.label;
    }
    loss /= static_cast<double>(set.size());
    acc = static_cast<double>(correct) / static_cast<double>(set.size());
  };

  std::vector<std::size_t> train_order(train_set.size());
  std::iota(train_order.begin(), train_order.end(), 0);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span(train_order));
    double loss_sum = 0;
    for (std::size_t begin = 0; begin < train_order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(train_order.size(), begin + static_cast<std::size_t>(config.batch_size));
      grad.setZero();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& g = train_set[train_order[k]];
        loss_sum += model.loss_and_gradient(g, *g.label, grad);
      }
      grad /= static_cast<double>(end - begin);

      ++step;
      const double b1 = config.adam_beta1, b2 = config.adam_beta2;
      m1 = b1 * m1 + (1 - b1) * grad;
      m2 = b2 * m2 + (1 - b2) * grad.cwiseProduct(grad);
      const double c1 = 1 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1 - std::pow(b2, static_cast<double>(step));
      model.parameters().array() -= config.learning_rate * (m1.array() / c1) /
                                    ((m2.array() / c2).sqrt() + config.adam_epsilon);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    double unused_loss;
    evaluate(train_set, unused_loss, entry.train_accuracy);
    evaluate(validation_set, entry.validation_loss, entry.validation_accuracy);
    result.log.push_back(entry);
    if (entry.validation_accuracy > result.best_validation_accuracy) {
      result.best_validation_accuracy = entry.validation_accuracy;
      result.best_epoch = epoch;
      best = model;
    }
  }

  model = std::move(best);
  model.mark_trained();
  model.training_summary = {{"best_epoch", result.best_epoch},
                            {"best_validation_accuracy", result.best_validation_accuracy},
                            {"epochs_run", static_cast<int>(result.log.size())},
                            {"train_size", result.train_size},
                            {"validation_size", result.validation_size},
                            {"seed", config.seed}};
  return result;
}

LengthBaseline train_length_baseline(std::span<const LengthExample> examples, int iterations,
                                     double learning_rate) {
  if (examples.empty()) throw Error(ErrorCode::DegenerateDataset, "no length examples");
  LengthBaseline model;
  const double n = static_cast<double>(examples.size());
  double sum = 0;
  for (const auto& e : examples) sum += e.token_length;
  model.mean = sum / n;
  double sq = 0;
  for (const auto& e : examples) sq += (e.token_length - model.mean) * (e.token_length - model.mean);
  const double sd = std::sqrt(sq / n);
  model.stddev = sd > 1e-12 ? sd : 1.0;

  for (int it = 0; it < iterations; ++it) {
    double gw = 0, gb = 0;
    for (const auto& e : examples) {
      const double x = (e.token_length - model.mean) / model.stddev;
      const double err = sigmoid(model.weight * x + model.bias) - (e.label ? 1.0 : 0.0);
      gw += err * x;
      gb += err;
    }
    model.weight -= learning_rate * gw / n;
    model.bias -= learning_rate * gb / n;
  }
  return model;
}

double baseline_score(const LengthBaseline& model, double token_length) {
  return sigmoid(model.weight * (token_length - model.mean) / model.stddev + model.bias);
}

void to_json(nlohmann::json& j, const LengthBaseline& b) {
  j = {{"weight", b.weight}, {"bias", b.bias}, {"mean", b.mean}, {"std", b.stddev}};
}

void from_json(const nlohmann::json& j, LengthBaseline& b) {
  b.weight = j.at("weight").get<double>();
  b.bias = j.at("bias").get<double>();
  b.mean = j.at("mean").get<double>();
  b.stddev = j.at("std").get<double>();
}

}  // namespace thoughttree
